#include "vwlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace vwlab::config {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def) {
    if (!take(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  int integer(const std::string& key, int def) {
    if (!take(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<int>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    if (!take(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!take(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!take(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    if (!take(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<Section> sub(const std::string& key) {
    if (!take(key)) return std::nullopt;
    return Section(j_.at(key), join(key));
  }

  const json& raw(const std::string& key) {
    take(key);
    return j_.at(key);
  }

  /// Rejects every key that was not read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + join(it.key()) + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("'" + (key.empty() ? (path_.empty() ? "<root>" : path_) : join(key)) +
                      "' " + what);
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  bool take(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

ProblemSpec parse_problem(Section s) {
  ProblemSpec p;
  p.n = s.integer("n", 3);
  p.R = s.number("R", 1.0);
  p.p = s.number("p", 3.0);
  p.sigma = s.number("sigma", 1.0);
  if (auto k = s.sub("k")) {
    const auto type = k->string("type", "constant");
    const double c = k->number("c", 1.0);
    require(c > 0.0, "'problem.k.c' must be positive");
    if (type == "constant") p.k = KProfile::constant(c);
    else if (type == "bump") p.k = KProfile::bump(c);
    else k->fail("type", "must be \"constant\" or \"bump\"");
    k->finish();
  }
  s.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

kernel::KernelSpec parse_kernel(Section s) {
  const auto family = s.string("family", "exponential");
  const double b = s.number("b", 0.5);
  kernel::KernelSpec k;
  try {
    if (family == "exponential") {
      k = kernel::KernelSpec::exponential(b, s.number("lambda", 1.0));
    } else if (family == "polynomial_shift") {
      k = kernel::KernelSpec::polynomial_shift(b, s.number("nu", 4.0));
    } else {
      s.fail("family", "must be \"exponential\" or \"polynomial_shift\"");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.finish();
  return k;
}

wellpot::WellSet parse_set(Section& s, const std::string& key) {
  const auto v = s.string(key, "W");
  if (v == "W") return wellpot::WellSet::W;
  if (v == "V") return wellpot::WellSet::V;
  s.fail(key, "must be \"W\" or \"V\"");
}

InitialSpec parse_initial(Section s) {
  InitialSpec in;
  if (auto p = s.sub("profile")) {
    const auto type = p->string("type", "bump");
    auto& pr = in.profile;
    if (type == "bump") {
      pr.type = ProfileSpec::Type::bump;
      pr.power = p->number("power", 1.0);
      require(pr.power >= 1.0, "'initial.profile.power' must be >= 1");
    } else if (type == "gaussian") {
      pr.type = ProfileSpec::Type::gaussian;
      pr.center = p->number("center", 0.0);
      pr.width = p->number("width", 0.3);
      require(pr.width > 0.0, "'initial.profile.width' must be positive");
    } else if (type == "cos") {
      pr.type = ProfileSpec::Type::cos;
      pr.mode = p->integer("mode", 1);
      require(pr.mode >= 1, "'initial.profile.mode' must be >= 1");
    } else if (type == "minimizer") {
      pr.type = ProfileSpec::Type::minimizer;
    } else {
      p->fail("type", "must be one of bump, gaussian, cos, minimizer");
    }
    p->finish();
  }
  const bool has_amp = s.has("amplitude");
  in.amplitude = s.number("amplitude", 1.0);
  if (auto a = s.sub("auto_scale")) {
    require(!has_amp, "'initial.amplitude' and 'initial.auto_scale' are mutually exclusive");
    AutoScale as;
    as.target = parse_set(*a, "target");
    as.margin = a->number("margin", 0.5);
    require(as.margin > 0.0 && as.margin < 1.0, "'initial.auto_scale.margin' must lie in (0, 1)");
    a->finish();
    in.auto_scale = as;
  }
  if (auto v = s.sub("velocity")) {
    const auto type = v->string("type", "zero");
    if (type == "zero") {
      in.velocity.type = VelocitySpec::Type::zero;
    } else if (type == "proportional") {
      in.velocity.type = VelocitySpec::Type::proportional;
      in.velocity.factor = v->number("factor", 0.0);
    } else if (type == "bump") {
      in.velocity.type = VelocitySpec::Type::bump;
      in.velocity.amplitude = v->number("amplitude", 0.0);
    } else {
      v->fail("type", "must be one of zero, proportional, bump");
    }
    v->finish();
  }
  s.finish();
  return in;
}

SolverSection parse_solver(Section s) {
  SolverSection out;
  auto& c = out.config;
  const bool has_dt0 = s.has("dt0");
  c.dt0 = s.number("dt0", 0.0);
  out.dt_over_h = s.number("dt_over_h", 0.0);
  require(!(has_dt0 && out.dt_over_h > 0.0), "'solver.dt0' and 'solver.dt_over_h' are mutually exclusive");
  require(c.dt0 >= 0.0 && out.dt_over_h >= 0.0, "'solver' step sizes must be non-negative");
  c.cfl_safety = s.number("cfl_safety", 0.5);
  require(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0, "'solver.cfl_safety' must lie in (0, 1]");
  c.T_end = s.number("T_end", 1.0);
  require(c.T_end > 0.0, "'solver.T_end' must be positive");
  c.U_max = s.number("U_max", 1e6);
  require(c.U_max > 0.0, "'solver.U_max' must be positive");
  if (auto a = s.sub("adapt")) {
    c.adapt.enabled = a->boolean("enabled", false);
    c.adapt.exponent = a->number("exponent", -1.0);
    c.adapt.dt_min = a->number("dt_min", 1e-12);
    require(c.adapt.dt_min > 0.0, "'solver.adapt.dt_min' must be positive");
    a->finish();
  }
  c.record_stride = s.integer("record_stride", 1);
  require(c.record_stride >= 1, "'solver.record_stride' must be >= 1");
  c.track_balance = s.boolean("track_balance", true);
  c.first_order_start = s.boolean("first_order_start", false);
  if (auto l = s.sub("levine")) {
    c.levine_eta = l->number("eta", 0.0);
    c.levine_mu = l->number("mu", 1.0);
    c.levine_T = l->number("T", 0.0);
    require(c.levine_eta >= 0.0 && c.levine_mu > 0.0, "'solver.levine' needs eta >= 0 and mu > 0");
    l->finish();
  }
  out.snapshot_times = s.numbers("snapshot_times");
  for (double t : out.snapshot_times)
    require(t >= 0.0, "'solver.snapshot_times' must be non-negative");
  s.finish();
  return out;
}

AnalysisSection parse_analysis(Section s) {
  AnalysisSection a;
  a.t1 = s.number("t1", 0.5);
  require(a.t1 > 0.0, "'analysis.t1' must be positive");
  a.eps1 = s.number("eps1", 0.1);
  a.eps2 = s.number("eps2", 0.1);
  if (auto b = s.sub("eta_mu_search")) {
    a.search.mu_min = b->number("mu_min", a.search.mu_min);
    a.search.mu_max = b->number("mu_max", a.search.mu_max);
    a.search.grid = b->integer("grid", a.search.grid);
    a.search.refine_iters = b->integer("refine_iters", a.search.refine_iters);
    require(a.search.mu_min > 0.0 && a.search.mu_max > a.search.mu_min && a.search.grid >= 2 &&
                a.search.refine_iters >= 0,
            "'analysis.eta_mu_search' needs 0 < mu_min < mu_max, grid >= 2, refine_iters >= 0");
    b->finish();
  }
  s.finish();
  return a;
}

wellpot::OptimizerParams parse_well(Section s) {
  wellpot::OptimizerParams w;
  w.max_iter = s.integer("max_iter", w.max_iter);
  w.rel_tol = s.number("rel_tol", w.rel_tol);
  w.window = s.integer("window", w.window);
  w.restarts = s.integer("restarts", w.restarts);
  require(w.max_iter >= 1 && w.rel_tol > 0.0 && w.window >= 1 && w.restarts >= 0,
          "'well' optimizer parameters out of range");
  s.finish();
  return w;
}

MmsSection parse_mms(Section s) {
  MmsSection m;
  m.N = s.integer("N", m.N);
  require(m.N >= 8, "'mms.N' must be >= 8");
  m.dt_over_h = s.number("dt_over_h", m.dt_over_h);
  require(m.dt_over_h > 0.0, "'mms.dt_over_h' must be positive");
  m.T_end = s.number("T_end", m.T_end);
  require(m.T_end > 0.0, "'mms.T_end' must be positive");
  m.amplitude = s.number("amplitude", m.amplitude);
  m.omega = s.number("omega", m.omega);
  m.first_order_start = s.boolean("first_order_start", false);
  s.finish();
  return m;
}

}  // namespace

const std::vector<std::string>& sweepable_keys() {
  static const std::vector<std::string> keys = {
      "problem.p",        "problem.sigma",      "problem.k.c",         "mesh.N",
      "kernel.b",         "kernel.lambda",      "kernel.nu",           "initial.amplitude",
      "initial.auto_scale.margin", "initial.velocity.factor", "initial.velocity.amplitude",
      "solver.T_end",     "solver.dt_over_h",   "solver.U_max",        "analysis.t1",
      "seed"};
  return keys;
}

json with_key(json j, const std::string& dotted, const json& value) {
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return j;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

ExperimentConfig parse(const json& j) {
  Section root(j, "");
  ExperimentConfig c;
  if (auto s = root.sub("problem")) c.problem = parse_problem(*s);
  else c.problem = parse_problem(Section(json::object(), "problem"));
  if (auto s = root.sub("mesh")) {
    c.N = s->integer("N", 128);
    s->finish();
  }
  require(c.N >= 8, "'mesh.N' must be >= 8");
  if (auto s = root.sub("kernel")) c.kernel = parse_kernel(*s);
  if (auto s = root.sub("initial")) c.initial = parse_initial(*s);
  if (auto s = root.sub("solver")) c.solver = parse_solver(*s);
  if (auto s = root.sub("analysis")) c.analysis = parse_analysis(*s);
  if (auto s = root.sub("well")) c.well = parse_well(*s);
  if (auto s = root.sub("mms")) c.mms = parse_mms(*s);
  if (auto s = root.sub("sweep")) {
    c.has_sweep = true;
    if (auto g = s->sub("grid")) {
      const auto& raw = s->raw("grid");
      const auto& keys = sweepable_keys();
      for (auto it = raw.begin(); it != raw.end(); ++it) {
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
          throw ConfigError("'sweep.grid' key '" + it.key() + "' is not a sweepable scalar");
        if (!it.value().is_array() || it.value().empty())
          throw ConfigError("'sweep.grid." + it.key() + "' must be a non-empty array");
        std::vector<json> vals(it.value().begin(), it.value().end());
        for (const auto& v : vals)
          if (!v.is_number()) throw ConfigError("'sweep.grid." + it.key() + "' values must be numbers");
        c.sweep_grid[it.key()] = std::move(vals);
      }
    }
    s->finish();
  }
  c.seed = root.unsigned_integer("seed", 1);
  c.well.seed = c.seed;
  root.finish();

  // The mesh decides h, so the step constraint is checked here.
  RadialMesh mesh(c.problem.n, c.problem.R, c.N);
  if (c.solver.dt_over_h > 0.0) c.solver.config.dt0 = c.solver.dt_over_h * mesh.h();
  try {
    (void)c.solver.config.resolve_dt0(mesh);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    kernel::residual_elasticity(c.kernel);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (kernel::residual_elasticity(c.kernel) <= 0.0)
    throw ConfigError("kernel mass \\int f must be below 1 (residual elasticity ell > 0)");
  return c;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

ExperimentConfig load(const std::string& path) { return parse(load_json(path)); }

std::string to_string(ProfileSpec::Type t) {
  switch (t) {
    case ProfileSpec::Type::bump: return "bump";
    case ProfileSpec::Type::gaussian: return "gaussian";
    case ProfileSpec::Type::cos: return "cos";
    case ProfileSpec::Type::minimizer: return "minimizer";
  }
  return "unknown";
}

}  // namespace vwlab::config
