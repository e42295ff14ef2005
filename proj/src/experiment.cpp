#include "vwlab/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include "vwlab/io.hpp"

namespace vwlab::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

RadialField make_profile(const config::ProfileSpec& spec, const RadialMesh& mesh,
                         const wellpot::WellReport& well) {
  using Type = config::ProfileSpec::Type;
  if (spec.type == Type::minimizer) {
    if (well.minimizer_field.size() != static_cast<std::size_t>(mesh.size()))
      throw config::ConfigError("minimizer profile needs a well report on the same mesh");
    return well.minimizer_field;
  }
  const double R = mesh.radius();
  RadialField u(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) {
    const double r = mesh.nodes()[i];
    switch (spec.type) {
      case Type::bump: u[i] = std::pow(1.0 - (r / R) * (r / R), spec.power); break;
      case Type::gaussian: {
        const double s = (r - spec.center) / spec.width;
        u[i] = std::exp(-s * s);
        break;
      }
      case Type::cos:
        u[i] = std::cos((2.0 * spec.mode - 1.0) * std::numbers::pi * r / (2.0 * R));
        break;
      case Type::minimizer: break;
    }
  }
  return u;
}

RadialField make_velocity(const config::VelocitySpec& spec, const RadialMesh& mesh,
                          std::span<const double> u0) {
  RadialField v(mesh.size(), 0.0);
  switch (spec.type) {
    case config::VelocitySpec::Type::zero: break;
    case config::VelocitySpec::Type::proportional:
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = spec.factor * u0[i];
      break;
    case config::VelocitySpec::Type::bump:
      for (int i = 0; i < mesh.size(); ++i) {
        const double s = mesh.nodes()[i] / mesh.radius();
        v[i] = spec.amplitude * (1.0 - s * s);
      }
      break;
  }
  return v;
}

PreparedRun prepare(const config::ExperimentConfig& cfg) {
  PreparedRun run{RadialMesh(cfg.problem.n, cfg.problem.R, cfg.N), {}, {}, {}, {}, 1.0, {}, {}, 0.0};
  const auto& mesh = run.mesh;
  run.certificate = kernel::certify(cfg.kernel, 64, std::max(cfg.solver.config.T_end, 1.0));
  if (!run.certificate.a1_ok || !run.certificate.a2_ok)
    throw config::ConfigError("kernel fails its admissibility certificate");
  run.well = wellpot::well_depth(mesh, cfg.problem, cfg.kernel, cfg.well);

  const auto profile = make_profile(cfg.initial.profile, mesh, run.well);
  auto build = [&](double c) {
    RadialField u0(profile);
    for (double& x : u0) x *= c;
    run.u0 = u0;
    run.v0 = make_velocity(cfg.initial.velocity, mesh, run.u0);
  };

  if (!cfg.initial.auto_scale) {
    run.amplitude = cfg.initial.amplitude;
    build(run.amplitude);
  } else {
    const auto& as = *cfg.initial.auto_scale;
    const bool coupled = cfg.initial.velocity.type == config::VelocitySpec::Type::proportional;
    // A velocity proportional to u0 moves with the amplitude: iterate to a fixed point.
    RadialField v0 = coupled ? RadialField(mesh.size(), 0.0)
                             : make_velocity(cfg.initial.velocity, mesh, profile);
    double c = 0.0;
    for (int it = 0; it < (coupled ? 50 : 1); ++it) {
      try {
        c = wellpot::scale_into(as.target, profile, v0, mesh, cfg.problem, cfg.kernel, run.well,
                                as.margin)
                .amplitude;
      } catch (const std::exception& e) {
        throw config::ConfigError(std::string("auto_scale infeasible: ") + e.what());
      }
      if (!coupled) break;
      const auto next = make_velocity(cfg.initial.velocity, mesh, profile);
      double change = 0.0;
      for (std::size_t i = 0; i < v0.size(); ++i) {
        const double nv = c * next[i];
        change = std::max(change, std::abs(nv - v0[i]));
        v0[i] = nv;
      }
      if (change <= 1e-14 * (1.0 + linf_norm(v0))) break;
    }
    run.amplitude = c;
    build(c);
  }

  run.classification = wellpot::classify(mesh, run.u0, run.v0, cfg.problem, cfg.kernel, run.well);
  if (cfg.initial.auto_scale && run.classification.set != cfg.initial.auto_scale->target)
    throw config::ConfigError("auto_scale infeasible: data end in set " +
                              wellpot::to_string(run.classification.set));
  run.solver = cfg.solver.config;
  run.dt0 = run.solver.resolve_dt0(mesh);
  run.solver.dt0 = run.dt0;
  return run;
}

json to_json(const kernel::KernelCertificate& c) {
  return {{"ell", io::number_or_null(c.ell)},
          {"q", c.q},
          {"xi0", c.xi0},
          {"a1_ok", c.a1_ok},
          {"a2_ok", c.a2_ok},
          {"q_extended_warning", c.q_extended_warning},
          {"sample_grid_max_violation", c.sample_grid_max_violation}};
}

json to_json(const wellpot::WellReport& w) {
  return {{"d", w.d},
          {"ell", w.ell},
          {"B2", w.B2},
          {"Bp", w.Bp},
          {"B2p2", w.B2p2},
          {"lambda_star_of_minimizer", w.lambda_star_of_minimizer},
          {"iterations", w.iterations},
          {"residual", w.residual},
          {"converged", w.converged},
          {"small_energy_threshold", w.small_energy_threshold},
          {"restart_depths", w.restart_depths},
          {"restart_spread", w.restart_spread}};
}

json to_json(const wellpot::Classification& c) {
  return {{"E0", c.E0},
          {"I0", c.I0},
          {"set", wellpot::to_string(c.set)},
          {"small_energy_ok", c.small_energy_ok},
          {"theta", c.theta}};
}

namespace {

json envelope_json(const analysis::EnvelopeCheck& e) {
  return {{"fitted_slope", e.fitted_slope},
          {"fit_r2", e.fit_r2},
          {"envelope_slope", e.envelope_slope},
          {"envelope_constant_C", e.envelope_constant_C},
          {"worst_ratio", e.worst_ratio},
          {"extrapolation_pass", e.extrapolation_pass}};
}

json optional_number(const std::optional<double>& x) {
  return x ? io::number_or_null(*x) : json(nullptr);
}

}  // namespace

json to_json(const analysis::DecayReport& r) {
  json j = {{"t1", r.t1},
            {"q", r.q},
            {"xi0", r.xi0},
            {"branch", analysis::to_string(r.branch)},
            {"fit_ok", r.fit_ok},
            {"flag", r.flag},
            {"decaying", r.decaying},
            {"fitted_slope", r.fitted_slope},
            {"fit_r2", r.fit_r2},
            {"envelope_slope", r.envelope_slope},
            {"envelope_constant_C", r.envelope_constant_C},
            {"extrapolation_pass", r.extrapolation_pass},
            {"monotone_pass", r.monotone_pass}};
  if (r.fit_ok) j["primary"] = envelope_json(r.primary);
  j["improved"] = r.improved ? envelope_json(*r.improved) : json(nullptr);
  return j;
}

json to_json(const analysis::BlowupReport& r) {
  return {{"T_obs", r.T_obs},
          {"T_lower", r.T_lower},
          {"T_upper", optional_number(r.T_upper)},
          {"in_proof_bound", optional_number(r.in_proof_bound)},
          {"upper_note", r.upper_note},
          {"eta_star", r.eta_star},
          {"mu_star", r.mu_star},
          {"theta", r.theta},
          {"case", analysis::to_string(r.energy_case)},
          {"gamma_est", r.gamma_est},
          {"gamma_run", r.gamma_run.value},
          {"gamma_run_t", r.gamma_run.t_at_min},
          {"gamma_run_positive", r.gamma_run.positive},
          {"mass", r.mass},
          {"mass_bound", r.mass_bound},
          {"mass_condition_ok", r.mass_condition_ok},
          {"convexity_min", r.convexity_min},
          {"convexity_t", r.convexity.t_at_min},
          {"convexity_scale", r.convexity_scale},
          {"convexity_tol", r.convexity_tol},
          {"convexity_ok", r.convexity_ok},
          {"lower_ok", r.lower_ok},
          {"upper_ok", r.upper_ok}};
}

json run_summary(const config::ExperimentConfig& cfg, const PreparedRun& run,
                 const solver::Trajectory& traj) {
  const auto& mesh = run.mesh;
  json j;
  j["status"] = solver::to_string(traj.status);
  j["T_obs"] = traj.T_obs ? json(*traj.T_obs) : json(nullptr);
  j["final_E"] = traj.records.empty() ? json(nullptr) : io::number_or_null(traj.records.back().E);
  j["final_t"] = traj.records.empty() ? json(nullptr) : json(traj.records.back().t);
  j["steps"] = traj.steps;
  j["records"] = traj.records.size();
  j["dt0"] = run.dt0;
  j["dt_min_used"] = traj.dt_min_used;
  j["max_balance_defect"] = traj.max_balance_defect;
  j["problem"] = {{"n", cfg.problem.n},   {"R", cfg.problem.R},
                  {"p", cfg.problem.p},   {"sigma", cfg.problem.sigma},
                  {"k", cfg.problem.k.name()}, {"K", cfg.problem.K()},
                  {"N", cfg.N},           {"h", mesh.h()}};
  j["kernel"] = to_json(run.certificate);
  j["well"] = to_json(run.well);
  json init = to_json(run.classification);
  init["amplitude"] = run.amplitude;
  init["u0_sq"] = l2_sq_norm(mesh, run.u0);
  init["u0_hardy_sq"] = traj.u0_hardy_sq;
  init["grad_u0_sq"] = grad_sq_norm(mesh, run.u0);
  init["v0_sq"] = l2_sq_norm(mesh, run.v0);
  init["u0u1"] = inner(mesh, run.u0, run.v0);
  j["initial"] = init;
  j["levine"] = {{"eta", traj.levine.eta},
                 {"mu", traj.levine.mu},
                 {"T", traj.levine.T},
                 {"u0_hardy_sq", traj.levine.u0_hardy_sq}};
  return j;
}

analysis::DecayReport decay_report(const config::ExperimentConfig& cfg,
                                   std::span<const FunctionalRecord> records,
                                   const json& summary) {
  if (summary.at("status") != "completed")
    throw std::invalid_argument("decay report needs a completed run (status " +
                                summary.at("status").get<std::string>() + ")");
  std::vector<double> t, E;
  for (const auto& r : records) {
    t.push_back(r.t);
    E.push_back(r.E);
  }
  return analysis::fit_decay(t, E, cfg.kernel, cfg.analysis.t1,
                             2.0 * summary.at("max_balance_defect").get<double>());
}

analysis::BlowupReport blowup_report(const config::ExperimentConfig& cfg,
                                     std::span<const FunctionalRecord> records,
                                     const json& summary) {
  if (summary.at("status") != "blewup")
    throw std::invalid_argument("blow-up report needs a blown-up run (status " +
                                summary.at("status").get<std::string>() + ")");
  const auto& init = summary.at("initial");
  const auto& well = summary.at("well");
  const auto& lev = summary.at("levine");
  analysis::BlowupInputs in;
  in.T_obs = summary.at("T_obs").get<double>();
  in.E0 = init.at("E0").get<double>();
  in.I0 = init.at("I0").get<double>();
  in.d = well.at("d").get<double>();
  in.ell = kernel::residual_elasticity(cfg.kernel);
  in.p = cfg.problem.p;
  in.K = cfg.problem.K();
  in.B2p2 = well.at("B2p2").get<double>();
  in.grad_u0_sq = init.at("grad_u0_sq").get<double>();
  in.M0 = init.at("v0_sq").get<double>() + in.grad_u0_sq;
  in.u0_sq = init.at("u0_sq").get<double>();
  in.u0_hardy_sq = init.at("u0_hardy_sq").get<double>();
  in.u0u1 = init.at("u0u1").get<double>();
  in.dt0 = summary.at("dt0").get<double>();
  in.levine = {lev.at("eta").get<double>(), lev.at("mu").get<double>(), lev.at("T").get<double>(),
               lev.at("u0_hardy_sq").get<double>()};
  std::vector<LevinePoint> pts;
  for (const auto& r : records) pts.push_back({r.t, r.G, r.Gp});
  return analysis::blowup_report(records, pts, in, cfg.kernel, cfg.analysis.search);
}

std::vector<std::string> write_decay_report(const fs::path& dir, const analysis::DecayReport& r) {
  io::write_json(dir / "decay_report.json", to_json(r));
  std::vector<std::vector<double>> rows;
  for (const auto& p : r.primary.series) rows.push_back({p.t, p.E, p.envelope, p.ratio});
  io::write_columns_csv(dir / "decay_envelope.csv", {"t", "E", "envelope", "ratio"}, rows);
  return {"decay_report.json", "decay_envelope.csv"};
}

std::vector<std::string> write_blowup_report(const fs::path& dir, const analysis::BlowupReport& r) {
  io::write_json(dir / "blowup_report.json", to_json(r));
  std::vector<std::vector<double>> rows;
  for (const auto& p : r.convexity.series) rows.push_back({p.t, p.G, p.Gp, p.combination});
  io::write_columns_csv(dir / "convexity.csv", {"t", "G", "Gp", "convexity_combination"}, rows);
  return {"blowup_report.json", "convexity.csv"};
}

namespace {

std::vector<std::string> write_snapshots(const fs::path& dir, const RadialMesh& mesh,
                                         const solver::Trajectory& traj,
                                         const std::vector<double>& times) {
  std::vector<std::string> files;
  const auto ts = traj.history.times();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto it = std::lower_bound(ts.begin(), ts.end(), times[k] - 1e-12);
    if (it == ts.end()) continue;
    const auto j = static_cast<std::size_t>(it - ts.begin());
    const auto& u = traj.history.snapshot(j);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < mesh.size(); ++i) rows.push_back({ts[j], mesh.nodes()[i], u[i]});
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", k);
    io::write_columns_csv(dir / name, {"t", "r", "u"}, rows);
    files.push_back(name);
  }
  return files;
}

}  // namespace

SimulateResult simulate(const config::ExperimentConfig& cfg, const json& raw,
                        const fs::path& out_dir) {
  SimulateResult res;
  io::Manifest manifest;
  manifest.start_time = io::utc_now();
  const auto config_text = raw.dump(2) + "\n";
  manifest.config_hash = io::hex64(io::fnv1a64(config_text));
  fs::create_directories(out_dir);
  io::write_json(out_dir / "config.json", raw);
  manifest.outputs.push_back("config.json");

  auto finish = [&](const std::string& status) {
    manifest.status = status;
    manifest.end_time = io::utc_now();
    io::write_manifest(out_dir, manifest);
  };

  std::optional<PreparedRun> run;
  try {
    run.emplace(prepare(cfg));
  } catch (const std::exception& e) {
    res.exit_code = kConfigError;
    res.error = e.what();
    finish("config_error");
    return res;
  }
  res.initial_set = wellpot::to_string(run->classification.set);

  auto traj = solver::run(run->mesh, run->u0, run->v0, cfg.kernel, cfg.problem, run->solver);
  res.status = traj.status;
  res.T_obs = traj.T_obs;

  io::write_records_csv(out_dir / "records.csv", traj.records);
  manifest.outputs.push_back("records.csv");
  const auto summary = run_summary(cfg, *run, traj);
  io::write_json(out_dir / "summary.json", summary);
  manifest.outputs.push_back("summary.json");
  for (auto& f : write_snapshots(out_dir, run->mesh, traj, cfg.solver.snapshot_times))
    manifest.outputs.push_back(f);

  // Reports read the records back exactly as a later report command would.
  const auto records = io::read_records_csv(out_dir / "records.csv");
  try {
    if (traj.status == solver::Status::completed) {
      const auto rep = decay_report(cfg, records, summary);
      if (rep.fit_ok) res.fitted_slope = rep.fitted_slope;
      for (auto& f : write_decay_report(out_dir, rep)) manifest.outputs.push_back(f);
    } else if (traj.status == solver::Status::blewup) {
      for (auto& f : write_blowup_report(out_dir, blowup_report(cfg, records, summary)))
        manifest.outputs.push_back(f);
    }
  } catch (const std::invalid_argument& e) {
    res.error = std::string("report skipped: ") + e.what();
  }

  const bool ok = traj.status == solver::Status::completed || traj.status == solver::Status::blewup;
  res.exit_code = ok ? kOk : kNumericalFailure;
  finish(solver::to_string(traj.status));
  return res;
}

MmsStudy mms_study(const config::ExperimentConfig& cfg) {
  const auto& m = cfg.mms;
  const auto exact = solver::ManufacturedSolution::separable_quadratic(cfg.problem.n, cfg.problem.R,
                                                                       m.amplitude, m.omega);
  auto one = [&](int N) {
    RadialMesh mesh(cfg.problem.n, cfg.problem.R, N);
    solver::SolverConfig sc;
    sc.dt0 = m.dt_over_h * mesh.h();
    sc.cfl_safety = std::max(sc.cfl_safety, m.dt_over_h);
    sc.T_end = m.T_end;
    sc.first_order_start = m.first_order_start;
    sc.record_stride = 1 << 30;
    return solver::run_mms(exact, mesh, cfg.kernel, cfg.problem, sc);
  };
  MmsStudy s;
  s.coarse = one(m.N);
  s.fine = one(2 * m.N);
  s.order = std::log2(s.coarse.max_l2_error / s.fine.max_l2_error);
  return s;
}

SweepResult sweep(const config::ExperimentConfig& cfg, const json& raw, const fs::path& out_dir,
                  unsigned threads) {
  SweepResult out;
  if (cfg.sweep_grid.empty()) {
    out.exit_code = kConfigError;
    return out;
  }
  std::vector<std::string> keys;
  std::vector<std::vector<json>> values;
  for (const auto& [k, v] : cfg.sweep_grid) {
    keys.push_back(k);
    values.push_back(v);
  }
  // Cartesian product, last key fastest.
  std::vector<std::vector<json>> combos{{}};
  for (const auto& vs : values) {
    std::vector<std::vector<json>> next;
    for (const auto& c : combos)
      for (const auto& v : vs) {
        auto e = c;
        e.push_back(v);
        next.push_back(std::move(e));
      }
    combos = std::move(next);
  }
  out.runs = combos.size();

  json base = raw;
  base.erase("sweep");
  const auto start_time = io::utc_now();
  std::vector<SimulateResult> results(combos.size());
  std::vector<std::string> dirs(combos.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < combos.size(); i = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%04zu", i);
      dirs[i] = name;
      json j = base;
      for (std::size_t k = 0; k < keys.size(); ++k) j = config::with_key(j, keys[k], combos[i][k]);
      try {
        results[i] = simulate(config::parse(j), j, out_dir / name);
      } catch (const std::exception& e) {
        results[i].exit_code = kConfigError;
        results[i].error = e.what();
        fs::create_directories(out_dir / name);
        io::write_json(out_dir / name / "config.json", j);
        io::Manifest m;
        m.config_hash = io::hex64(io::fnv1a64(j.dump(2) + "\n"));
        m.start_time = m.end_time = io::utc_now();
        m.outputs = {"config.json"};
        m.status = "config_error";
        io::write_manifest(out_dir / name, m);
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(combos.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "sweep.csv", std::ios::binary);
  csv << "run";
  for (const auto& k : keys) csv << ',' << k;
  csv << ",exit_code,status,initial_set,T_obs,fitted_slope\n";
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const auto& r = results[i];
    csv << dirs[i];
    for (const auto& v : combos[i]) csv << ',' << io::format_double(v.get<double>());
    const std::string status = r.exit_code == kConfigError ? "config_error" : solver::to_string(r.status);
    csv << ',' << r.exit_code << ',' << status << ',' << r.initial_set << ','
        << (r.T_obs ? io::format_double(*r.T_obs) : "") << ','
        << (r.fitted_slope ? io::format_double(*r.fitted_slope) : "") << '\n';
    if (r.exit_code == kOk) ++out.succeeded;
  }
  out.exit_code = out.succeeded > 0 ? kOk : kNumericalFailure;

  io::Manifest m;
  m.config_hash = io::hex64(io::fnv1a64(raw.dump(2) + "\n"));
  m.start_time = start_time;
  m.end_time = io::utc_now();
  m.outputs = {"sweep.csv"};
  m.status = out.exit_code == kOk ? "completed" : "failed";
  io::write_manifest(out_dir, m);
  return out;
}

}  // namespace vwlab::experiment
