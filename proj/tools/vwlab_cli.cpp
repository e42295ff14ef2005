// vwlab command-line front end.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "vwlab/config.hpp"
#include "vwlab/experiment.hpp"
#include "vwlab/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vwlab;

namespace {

struct Common {
  std::string config;
  std::string out_dir;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment configuration (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out-dir", c.out_dir, "output directory");
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  cmd->add_option("--seed", c.seed, "seed for randomized restarts (overrides the config)");
}

struct Loaded {
  json raw;
  config::ExperimentConfig cfg;
};

Loaded load(const Common& c) {
  Loaded l;
  l.raw = config::load_json(c.config);
  if (c.seed) l.raw["seed"] = *c.seed;
  l.cfg = config::parse(l.raw);
  return l;
}

std::string fmt(double x) { return io::format_double(x); }

int cmd_simulate(const Common& c) {
  const auto l = load(c);
  if (l.cfg.has_sweep) throw config::ConfigError("'sweep' section present: use the sweep command");
  const auto res = experiment::simulate(l.cfg, l.raw, c.out_dir);
  if (!res.error.empty()) std::cerr << "vwlab: " << res.error << "\n";
  std::printf("status %s", res.exit_code == experiment::kConfigError ? "config_error"
                                                                   : solver::to_string(res.status).c_str());
  if (res.T_obs) std::printf("  T_obs %s", fmt(*res.T_obs).c_str());
  if (res.fitted_slope) std::printf("  fitted_slope %s", fmt(*res.fitted_slope).c_str());
  std::printf("\n");
  return res.exit_code;
}

int cmd_well_depth(const Common& c) {
  const auto l = load(c);
  RadialMesh mesh(l.cfg.problem.n, l.cfg.problem.R, l.cfg.N);
  const auto w = wellpot::well_depth(mesh, l.cfg.problem, l.cfg.kernel, l.cfg.well);
  const auto j = experiment::to_json(w);
  if (!c.out_dir.empty()) {
    io::Manifest m;
    m.config_hash = io::hex64(io::fnv1a64(l.raw.dump(2) + "\n"));
    m.start_time = io::utc_now();
    io::write_json(fs::path(c.out_dir) / "well.json", j);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < mesh.size(); ++i) rows.push_back({mesh.nodes()[i], w.minimizer_field[i]});
    io::write_columns_csv(fs::path(c.out_dir) / "minimizer.csv", {"r", "value"}, rows);
    m.outputs = {"well.json", "minimizer.csv"};
    m.end_time = io::utc_now();
    m.status = w.converged ? "converged" : "not_converged";
    io::write_manifest(c.out_dir, m);
  }
  std::cout << j.dump(2) << "\n";
  return experiment::kOk;
}

int cmd_classify(const Common& c) {
  const auto l = load(c);
  const auto run = experiment::prepare(l.cfg);
  json j = experiment::to_json(run.classification);
  j["amplitude"] = run.amplitude;
  j["d"] = run.well.d;
  j["small_energy_threshold"] = run.well.small_energy_threshold;
  if (!c.out_dir.empty()) {
    io::write_json(fs::path(c.out_dir) / "classification.json", j);
    io::Manifest m;
    m.config_hash = io::hex64(io::fnv1a64(l.raw.dump(2) + "\n"));
    m.start_time = m.end_time = io::utc_now();
    m.outputs = {"classification.json"};
    m.status = wellpot::to_string(run.classification.set);
    io::write_manifest(c.out_dir, m);
  }
  std::cout << j.dump(2) << "\n";
  return experiment::kOk;
}

int cmd_report(const Common& c, const std::string& run_dir, bool blowup) {
  Common cc = c;
  if (cc.config.empty()) cc.config = (fs::path(run_dir) / "config.json").string();
  const auto l = load(cc);
  const auto summary = io::read_json(fs::path(run_dir) / "summary.json");
  const auto records = io::read_records_csv(fs::path(run_dir) / "records.csv");
  const fs::path out = c.out_dir.empty() ? fs::path(run_dir) : fs::path(c.out_dir);
  io::Manifest m;
  m.config_hash = io::hex64(io::fnv1a64(l.raw.dump(2) + "\n"));
  m.start_time = io::utc_now();
  json j;
  try {
    if (blowup) {
      const auto r = experiment::blowup_report(l.cfg, records, summary);
      m.outputs = experiment::write_blowup_report(out, r);
      j = experiment::to_json(r);
    } else {
      const auto r = experiment::decay_report(l.cfg, records, summary);
      m.outputs = experiment::write_decay_report(out, r);
      j = experiment::to_json(r);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "vwlab: " << e.what() << "\n";
    return experiment::kConfigError;
  }
  m.end_time = io::utc_now();
  m.status = summary.at("status").get<std::string>();
  io::write_manifest(out, m);
  std::cout << j.dump(2) << "\n";
  return experiment::kOk;
}

int cmd_mms(const Common& c, std::optional<int> N, bool first_order) {
  auto l = load(c);
  if (N) {
    if (*N < 8) throw config::ConfigError("'--N' must be >= 8");
    l.cfg.mms.N = *N;
  }
  if (first_order) l.cfg.mms.first_order_start = true;
  const auto s = experiment::mms_study(l.cfg);
  const bool ok = s.order >= 1.8;
  std::printf("N=%d dt=%s max_l2_error=%s\n", s.coarse.N, fmt(s.coarse.dt).c_str(),
              fmt(s.coarse.max_l2_error).c_str());
  std::printf("N=%d dt=%s max_l2_error=%s\n", s.fine.N, fmt(s.fine.dt).c_str(),
              fmt(s.fine.max_l2_error).c_str());
  std::printf("observed order %.4f (%s)\n", s.order, ok ? "ok" : "below 1.8");
  if (!c.out_dir.empty()) {
    json j = {{"coarse", {{"N", s.coarse.N}, {"dt", s.coarse.dt}, {"max_l2_error", s.coarse.max_l2_error},
                          {"relative_error", s.coarse.relative_error()}}},
              {"fine", {{"N", s.fine.N}, {"dt", s.fine.dt}, {"max_l2_error", s.fine.max_l2_error},
                        {"relative_error", s.fine.relative_error()}}},
              {"order", s.order}};
    io::write_json(fs::path(c.out_dir) / "mms.json", j);
    io::Manifest m;
    m.config_hash = io::hex64(io::fnv1a64(l.raw.dump(2) + "\n"));
    m.start_time = m.end_time = io::utc_now();
    m.outputs = {"mms.json"};
    m.status = ok ? "ok" : "order_failure";
    io::write_manifest(c.out_dir, m);
  }
  return ok ? experiment::kOk : experiment::kOrderFailure;
}

int cmd_sweep(const Common& c) {
  const auto l = load(c);
  if (l.cfg.sweep_grid.empty()) {
    std::cerr << "vwlab: sweep grid is empty\n";
    return experiment::kConfigError;
  }
  const unsigned threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  const auto r = experiment::sweep(l.cfg, l.raw, c.out_dir, threads);
  std::printf("%zu runs, %zu succeeded\n", r.runs, r.succeeded);
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial viscoelastic wave equation lab"};
  app.require_subcommand(1);
  Common c;
  std::string run_dir;
  std::optional<int> mms_N;
  bool first_order = false;

  auto* sim = app.add_subcommand("simulate", "run one configured simulation");
  add_common(sim, c, true);
  sim->get_option("--out-dir")->required();
  auto* well = app.add_subcommand("well-depth", "potential well depth and Sobolev constants");
  add_common(well, c, true);
  auto* cls = app.add_subcommand("classify", "classify the configured initial data");
  add_common(cls, c, true);
  auto* dec = app.add_subcommand("decay-report", "decay-envelope report of a completed run");
  add_common(dec, c, false);
  dec->add_option("run_dir", run_dir, "run directory")->required();
  auto* blo = app.add_subcommand("blowup-report", "blow-up bounds report of a blown-up run");
  add_common(blo, c, false);
  blo->add_option("run_dir", run_dir, "run directory")->required();
  auto* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
  add_common(mms, c, true);
  mms->add_option("--N", mms_N, "coarse mesh size (overrides mms.N)");
  mms->add_flag("--first-order-start", first_order, "drop the second-order start term (self-test)");
  auto* swp = app.add_subcommand("sweep", "parameter sweep over sweep.grid");
  add_common(swp, c, true);
  swp->get_option("--out-dir")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : experiment::kConfigError;
  }

  try {
    if (*sim) return cmd_simulate(c);
    if (*well) return cmd_well_depth(c);
    if (*cls) return cmd_classify(c);
    if (*dec) return cmd_report(c, run_dir, false);
    if (*blo) return cmd_report(c, run_dir, true);
    if (*mms) return cmd_mms(c, mms_N, first_order);
    if (*swp) return cmd_sweep(c);
  } catch (const config::ConfigError& e) {
    std::cerr << "vwlab: config error: " << e.what() << "\n";
    return experiment::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "vwlab: " << e.what() << "\n";
    return experiment::kNumericalFailure;
  }
  return experiment::kConfigError;
}
