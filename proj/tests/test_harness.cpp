#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "opdyn/harness.hpp"

using namespace opdyn;
using Catch::Approx;

namespace {

std::filesystem::path temp_dir() {
  static int counter = 0;
  const auto p = std::filesystem::temp_directory_path() /
                 ("opdyn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.sites = 64;
  cfg.t_max = 20.0;
  cfg.sample_dt = 2.0;
  cfg.replicas = 4;
  cfg.seed = 11;
  cfg.thresholds = {2.0, 10.0};
  return cfg;
}

nlohmann::json strip_timing(nlohmann::json j) {
  j.erase("timing");
  return j;
}

}  // namespace

TEST_CASE("config file parsing, overrides and rejection", "[harness][config]") {
  const auto dir = temp_dir();
  {
    std::ofstream out(dir / "cfg.json");
    out << R"({"theta": 0.8, "sites": 128, "boundary": "segment", "thresholds": [5.0]})";
  }
  ExperimentConfig cfg = ExperimentConfig::from_json_file((dir / "cfg.json").string());
  CHECK(cfg.theta == 0.8);
  CHECK(cfg.sites == 128);
  CHECK(cfg.boundary == Boundary::segment);
  CHECK(cfg.thresholds == std::vector<double>{5.0});
  CHECK(cfg.mu_minus == 0.5);  // untouched default

  {
    std::ofstream out(dir / "bad_key.json");
    out << R"({"thetaa": 0.8})";
  }
  CHECK_THROWS_AS(ExperimentConfig::from_json_file((dir / "bad_key.json").string()), ConfigError);
  {
    std::ofstream out(dir / "bad_value.json");
    out << R"({"sites": "many"})";
  }
  CHECK_THROWS_AS(ExperimentConfig::from_json_file((dir / "bad_value.json").string()),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_file((dir / "missing.json").string()),
                  ConfigError);

  ExperimentConfig bad = small_config();
  bad.theta = 2.0;
  CHECK_THROWS(bad.validate());
  bad = small_config();
  bad.replicas = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("identical configs give identical outputs", "[harness][determinism]") {
  ExperimentConfig cfg = small_config();
  const SimulateOutput a = run_simulate(cfg);
  const SimulateOutput b = run_simulate(cfg);
  CHECK(strip_timing(a.summary) == strip_timing(b.summary));
  REQUIRE(a.series0.size() == b.series0.size());
  for (std::size_t i = 0; i < a.series0.size(); ++i) {
    CHECK(a.series0[i].t == b.series0[i].t);
    CHECK(a.series0[i].max_gap == b.series0[i].max_gap);
  }
}

TEST_CASE("replica fan-out over threads does not change results", "[harness][determinism]") {
  ExperimentConfig cfg = small_config();
  cfg.threads = 1;
  const SimulateOutput serial = run_simulate(cfg);
  cfg.threads = 4;
  const SimulateOutput parallel = run_simulate(cfg);
  CHECK(serial.summary["results"] == parallel.summary["results"]);
}

TEST_CASE("simulate summary carries thresholds, fractions and conservation",
          "[harness][simulate]") {
  ExperimentConfig cfg = small_config();
  const SimulateOutput out = run_simulate(cfg);
  const auto& res = out.summary["results"];
  CHECK(res["replicas"].get<int>() == 4);
  CHECK(res["events_total"].get<long long>() > 0);
  CHECK(res["conservation_drift_max"].get<double>() <= 1e-9);
  REQUIRE(res["thresholds"].size() == 2);
  for (const auto& t : res["thresholds"]) {
    const double f = t["fraction"].get<double>();
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(t["wilson_low"].get<double>() <= f);
    CHECK(t["wilson_high"].get<double>() >= f);
  }
  CHECK(out.series0.front().t == 0.0);
  CHECK(out.series0.back().t == Approx(cfg.t_max));
}

TEST_CASE("simulate writes the documented files", "[harness][io]") {
  ExperimentConfig cfg = small_config();
  cfg.replicas = 1;
  cfg.emit_trace = true;
  cfg.emit_events = true;
  cfg.emit_svg = true;
  cfg.out_dir = temp_dir().string();
  const SimulateOutput out = run_simulate(cfg);
  write_simulate_outputs(cfg, out);
  const std::string series = slurp(std::filesystem::path(cfg.out_dir) / "series.csv");
  CHECK(series.rfind("t,max_gap,n_gaps_above_theta,mean_abs_opinion\n", 0) == 0);
  const std::string trace = slurp(std::filesystem::path(cfg.out_dir) / "trackers.csv");
  CHECK(trace.rfind("t,class_id,position,gap\n", 0) == 0);
  const std::string events = slurp(std::filesystem::path(cfg.out_dir) / "events.csv");
  CHECK(events.rfind("t,edge\n", 0) == 0);
  CHECK(slurp(std::filesystem::path(cfg.out_dir) / "gap_vs_time.svg").find("<svg") == 0);
  const nlohmann::json j =
      nlohmann::json::parse(slurp(std::filesystem::path(cfg.out_dir) / "summary.json"));
  CHECK(j["config"]["sites"].get<int>() == 64);

  // byte-identical reruns (timing lives only in the JSON summary)
  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = temp_dir().string();
  write_simulate_outputs(cfg2, run_simulate(cfg2));
  CHECK(slurp(std::filesystem::path(cfg2.out_dir) / "series.csv") == series);
  CHECK(slurp(std::filesystem::path(cfg2.out_dir) / "trackers.csv") == trace);
}

TEST_CASE("forced increase at the canonical parameters", "[harness][forced]") {
  const ModelParams p = ModelParams::validated(1.0, 0.5, 0.25);
  const ForcedIncreaseReport rep = run_forced_increase(p);
  CHECK(rep.kicks == 5);
  CHECK(rep.initial_gap == Approx(1.01).margin(1e-12));
  CHECK(rep.two_dominance == Approx(7.0).margin(1e-12));
  CHECK(rep.theta_rho_pow_k == Approx(7.59375).margin(1e-12));
  CHECK(rep.final_gap == Approx(1.01 * 7.59375).epsilon(1e-12));
  CHECK(rep.tracker_stayed);
  CHECK(rep.pass);
  CHECK_THROWS_AS(run_forced_increase(ModelParams::validated(1.0, 0.5, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("oracle suite passes at reduced scale", "[harness][verify]") {
  const ModelParams p = ModelParams::validated(1.0, 0.5, 0.25);
  const VerifySuite suite = run_verification(p, 42, 0.02);
  for (const CheckResult& c : suite.checks) {
    INFO(c.name << " margin " << c.worst_margin << " " << c.note);
    CHECK(c.pass);
  }
  CHECK(suite.all_pass);
  CHECK(suite.checks.size() == 11);
}

TEST_CASE("xprocess, certificate and meanfield commands write their reports",
          "[harness][commands]") {
  ExperimentConfig cfg;
  cfg.out_dir = temp_dir().string();
  cfg.replicas = 2000;
  cfg.t_max = 10.0;
  cfg.x0 = 1.0;
  const nlohmann::json xj = run_xprocess(cfg);
  CHECK(std::abs(xj["results"]["log_drift_estimate"].get<double>() -
                 xj["results"]["log_drift_expected"].get<double>()) < 0.05);
  CHECK(slurp(std::filesystem::path(cfg.out_dir) / "xprocess.csv").rfind("t,log_x\n", 0) == 0);

  const nlohmann::json cj = run_certificate(cfg);
  CHECK(cj["results"]["c0"].get<double>() == Approx(std::exp(-1.0)).margin(1e-6));
  CHECK(cj["results"]["escape_bound"].get<double>() == Approx(0.5).margin(1e-6));
  CHECK(cj["results"]["kick_count"].get<int>() == 5);

  ExperimentConfig mf = cfg;
  mf.t_max = 1.0;
  mf.half_width = 3.0;
  mf.spacing = 0.05;
  mf.dt = 0.01;
  const nlohmann::json mj = run_meanfield_cmd(mf);
  CHECK(mj["results"]["c_plus"].get<double>() == Approx(1.125).margin(1e-12));
  CHECK(mj["results"]["support_grew"].get<bool>());
  const std::string csv = slurp(std::filesystem::path(mf.out_dir) / "meanfield.csv");
  CHECK(csv.rfind("t,support_radius,mass_total,mass_in_unit_interval,u_at_c_plus\n", 0) == 0);
}

TEST_CASE("a million events leave the opinion sum conserved", "[harness][conservation]") {
  // classic regime so opinions stay bounded over the long run
  const ModelParams p = ModelParams::validated(0.5, 0.5, 0.0);
  Rng init(replica_seed(321, 0));
  OpinionLattice lat = OpinionLattice::random_uniform(1000, Boundary::ring, init);
  SimulationOptions opt;
  opt.t_max = 1000.0;  // about 1e6 events on 1000 ring edges
  opt.sample_dt = 100.0;
  opt.tracker_stride = 100;
  LatticeSimulation sim(p, std::move(lat), Rng(replica_seed(321, 1)), opt);
  const SimulationResult res = sim.run();
  CHECK(res.events > 900000);
  CHECK(res.conservation_drift <= 1e-9);
}

TEST_CASE("long horizons with repulsion are refused up front", "[harness][config]") {
  ExperimentConfig cfg = small_config();
  cfg.t_max = 6000.0;
  CHECK_THROWS_AS(run_simulate(cfg), ConfigError);
  cfg.mu_plus = 0.0;
  cfg.t_max = 6000.0;
  cfg.sites = 16;
  cfg.replicas = 1;
  CHECK_NOTHROW(run_simulate(cfg));  // classic regime has no growth to overflow
}

TEST_CASE("numeric formatting round-trips doubles", "[harness][io]") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, -2.5e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("cli exit codes follow the contract", "[harness][cli]") {
  const std::string cli = OPDYN_CLI_PATH;
  const std::string out = " --out " + temp_dir().string() + " >/dev/null 2>&1";
  const auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + out).c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("c0") == 0);
  CHECK(run("forced-increase") == 0);
  CHECK(run("simulate --sites 32 --t-max 2") == 0);
  CHECK(run("simulate --theta 3") == 2);            // invalid parameter
  CHECK(run("simulate --config /nonexistent.json") == 2);
  CHECK(run("c0 --mu-plus 0") == 2);                // certificate needs repulsion
  CHECK(run("bogus-subcommand") == 2);
  // all-repulsive tiny-theta run overflows within the horizon
  CHECK(run("simulate --sites 8 --theta 0.01 --mu-plus 0.5 --t-max 2000") == 3);
}
