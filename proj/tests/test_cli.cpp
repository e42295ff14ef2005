#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "vwlab/config.hpp"
#include "vwlab/experiment.hpp"
#include "vwlab/io.hpp"

using namespace vwlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("vwlab_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json decay_config() {
  return json::parse(R"({
    "problem": {"n": 3, "R": 1.0, "p": 3.0, "sigma": 1.0},
    "mesh": {"N": 32},
    "kernel": {"family": "exponential", "b": 0.5, "lambda": 1.0},
    "initial": {"profile": {"type": "bump"}, "auto_scale": {"target": "W", "margin": 0.5}},
    "solver": {"dt_over_h": 0.5, "T_end": 2.0, "record_stride": 2},
    "analysis": {"t1": 0.5}
  })");
}

json blowup_config() {
  return json::parse(R"({
    "problem": {"n": 3, "R": 1.0, "p": 3.0, "sigma": 1.0},
    "mesh": {"N": 32},
    "kernel": {"family": "exponential", "b": 0.2, "lambda": 1.0},
    "initial": {"profile": {"type": "bump"}, "auto_scale": {"target": "V", "margin": 0.5},
                "velocity": {"type": "proportional", "factor": 0.1}},
    "solver": {"dt_over_h": 0.5, "T_end": 20.0, "adapt": {"enabled": true}}
  })");
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config_in.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(VWLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli_stderr(const std::string& args) {
  const auto log = fs::temp_directory_path() / "vwlab_test_stderr.txt";
  const std::string cmd = std::string(VWLAB_CLI) + " " + args + " >/dev/null 2>" + log.string();
  if (std::system(cmd.c_str()) == -1) return {};
  return slurp(log);
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(config::parse(decay_config()));

  auto bad_p = decay_config();
  bad_p["problem"]["p"] = 5.0;
  try {
    config::parse(bad_p);
    FAIL("expected ConfigError");
  } catch (const config::ConfigError& e) {
    CHECK(std::string(e.what()).find("(2n-2)/(n-2)") != std::string::npos);
  }

  auto unknown = decay_config();
  unknown["solver"]["dtt"] = 1.0;
  try {
    config::parse(unknown);
    FAIL("expected ConfigError");
  } catch (const config::ConfigError& e) {
    CHECK(std::string(e.what()).find("solver.dtt") != std::string::npos);
  }

  auto both = decay_config();
  both["initial"]["amplitude"] = 2.0;
  CHECK_THROWS_AS(config::parse(both), config::ConfigError);

  auto tiny = decay_config();
  tiny["mesh"]["N"] = 4;
  CHECK_THROWS_AS(config::parse(tiny), config::ConfigError);

  auto mms_small = decay_config();
  mms_small["mms"] = {{"N", 4}};
  CHECK_THROWS_AS(config::parse(mms_small), config::ConfigError);

  auto cfl = decay_config();
  cfl["solver"]["dt_over_h"] = 0.9;
  CHECK_THROWS_AS(config::parse(cfl), config::ConfigError);

  auto grid = decay_config();
  grid["sweep"] = {{"grid", {{"problem.n", json::array({3, 4})}}}};
  CHECK_THROWS_AS(config::parse(grid), config::ConfigError);

  for (const char* name : {"decay_exponential.json", "decay_polynomial.json", "blowup.json", "mms.json",
                           "sweep_amplitude.json"})
    CHECK_NOTHROW(config::load(std::string(VWLAB_CONFIGS) + "/" + name));
}

TEST_CASE("with_key sets nested values") {
  const auto j = config::with_key(json::object(), "kernel.b", 0.3);
  CHECK(j["kernel"]["b"] == 0.3);
  const auto k = config::with_key(decay_config(), "initial.amplitude", 4.0);
  CHECK(k["initial"]["amplitude"] == 4.0);
  CHECK(k["mesh"]["N"] == 32);
}

TEST_CASE("CSV numbers round-trip at full precision") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<FunctionalRecord> recs(50);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto& r = recs[i];
    r.t = 0.1 * i;
    r.E = U(rng) * std::pow(10.0, 40 * U(rng));
    r.kinetic = U(rng);
    r.elastic = 1.0 / 3.0;
    r.memory = std::numeric_limits<double>::denorm_min();
    r.source = -0.0;
    r.dissipation_rate = U(rng) * 1e-300;
    r.G = std::numeric_limits<double>::max();
    r.Gp = U(rng);
    r.linf_norm = 1e6 + U(rng);
  }
  const auto dir = fresh_dir("csv");
  io::write_records_csv(dir / "r.csv", recs);
  const auto back = io::read_records_csv(dir / "r.csv");
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].t == recs[i].t);
    CHECK(back[i].E == recs[i].E);
    CHECK(back[i].kinetic == recs[i].kinetic);
    CHECK(back[i].elastic == recs[i].elastic);
    CHECK(back[i].memory == recs[i].memory);
    CHECK(back[i].dissipation_rate == recs[i].dissipation_rate);
    CHECK(back[i].G == recs[i].G);
    CHECK(back[i].Gp == recs[i].Gp);
    CHECK(back[i].linf_norm == recs[i].linf_norm);
  }
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  std::ofstream(dir / "bad.csv") << "t,E\n0,1\n";
  CHECK_THROWS(io::read_records_csv(dir / "bad.csv"));
}

TEST_CASE("simulate: decay run writes its outputs and is reproducible") {
  const auto cfg = config::parse(decay_config());
  const auto a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
  const auto ra = experiment::simulate(cfg, decay_config(), a);
  const auto rb = experiment::simulate(cfg, decay_config(), b);
  CHECK(ra.exit_code == experiment::kOk);
  CHECK(ra.status == solver::Status::completed);
  CHECK(ra.initial_set == "W");
  CHECK(ra.fitted_slope.has_value());
  for (const char* f : {"config.json", "records.csv", "summary.json", "decay_report.json",
                        "decay_envelope.csv", "manifest.json"})
    CHECK(fs::exists(a / f));
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    if (name == "manifest.json") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / name), name.string());
    ++compared;
  }
  CHECK(compared >= 5);
  const auto man = io::read_json(a / "manifest.json");
  CHECK(man["config_hash"] == io::read_json(b / "manifest.json")["config_hash"]);
  CHECK(man["version"] == io::kVersion);
  CHECK(man["status"] == "completed");

  const auto summary = io::read_json(a / "summary.json");
  CHECK(summary["status"] == "completed");
  CHECK(summary["initial"]["set"] == "W");
}

TEST_CASE("simulate: blow-up run") {
  const auto cfg = config::parse(blowup_config());
  const auto dir = fresh_dir("sim_blowup");
  const auto r = experiment::simulate(cfg, blowup_config(), dir);
  CHECK(r.exit_code == experiment::kOk);
  CHECK(r.status == solver::Status::blewup);
  REQUIRE(r.T_obs.has_value());
  CHECK(io::read_json(dir / "summary.json")["status"] == "blewup");
  const auto rep = io::read_json(dir / "blowup_report.json");
  CHECK(rep["lower_ok"] == true);
  CHECK(fs::exists(dir / "convexity.csv"));
}

TEST_CASE("simulate: numerical failure exits 2") {
  auto j = blowup_config();
  j["solver"]["adapt"]["dt_min"] = 1e-2;
  const auto r = experiment::simulate(config::parse(j), j, fresh_dir("sim_underflow"));
  CHECK(r.status == solver::Status::dt_underflow);
  CHECK(r.exit_code == experiment::kNumericalFailure);
}

TEST_CASE("sweep: 2x2 grid and empty grid") {
  auto j = blowup_config();
  j["solver"]["T_end"] = 1.0;
  j["initial"] = json::parse(R"({"profile": {"type": "bump"}, "amplitude": 1.0})");
  j["sweep"] = {{"grid", {{"initial.amplitude", json::array({2.0, 40.0})}, {"kernel.b", json::array({0.2, 0.3})}}}};
  const auto dir = fresh_dir("sweep");
  const auto res = experiment::sweep(config::parse(j), j, dir, 2);
  CHECK(res.exit_code == experiment::kOk);
  CHECK(res.runs == 4);
  int subdirs = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) {
      ++subdirs;
      CHECK(fs::exists(e.path() / "manifest.json"));
    }
  CHECK(subdirs == 4);
  CHECK(fs::exists(dir / "sweep.csv"));
  CHECK(fs::exists(dir / "manifest.json"));

  auto empty = j;
  empty["sweep"]["grid"] = json::object();
  const auto r0 = experiment::sweep(config::parse(empty), empty, fresh_dir("sweep_empty"), 1);
  CHECK(r0.exit_code == experiment::kConfigError);
}

TEST_CASE("command-line exit codes") {
  const auto dir = fresh_dir("cli");
  const auto decay = write_config(dir, decay_config());
  CHECK(cli("simulate --config " + decay.string() + " --out-dir " + (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "records.csv"));
  CHECK(cli("decay-report " + (dir / "run").string()) == 0);
  CHECK(cli("blowup-report " + (dir / "run").string()) == 1);

  auto bad = decay_config();
  bad["problem"]["p"] = 5.0;
  const auto badp = dir / "bad.json";
  std::ofstream(badp) << bad.dump();
  CHECK(cli("simulate --config " + badp.string() + " --out-dir " + (dir / "bad").string()) == 1);
  CHECK(cli_stderr("simulate --config " + badp.string() + " --out-dir " + (dir / "bad").string())
            .find("(2n-2)/(n-2)") != std::string::npos);
  CHECK(cli("simulate --config " + (dir / "missing.json").string() + " --out-dir " + (dir / "x").string()) != 0);

  const std::string mms = std::string(VWLAB_CONFIGS) + "/mms.json";
  CHECK(cli("mms --config " + mms + " --N 32") == 0);
  CHECK(cli("mms --config " + mms + " --N 32 --first-order-start") == 3);
  CHECK(cli("mms --config " + mms + " --N 4") == 1);

  CHECK(cli("well-depth --config " + decay.string() + " --out-dir " + (dir / "well").string()) == 0);
  CHECK(io::read_json(dir / "well" / "well.json")["d"].get<double>() > 0.0);
  CHECK(cli("classify --config " + decay.string() + " --out-dir " + (dir / "cls").string()) == 0);
  CHECK(io::read_json(dir / "cls" / "classification.json")["set"] == "W");
}
