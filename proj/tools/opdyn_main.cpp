// Command-line driver: reproducible experiments over the lattice dynamics,
// the dominated walk, the certificate, the mean-field integrator and the
// oracle suite. Exit codes: 0 success, 1 property failure, 2 invalid config,
// 3 numerical abort.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "opdyn/harness.hpp"

namespace {

struct CliFlags {
  std::string config_path;
  opdyn::ExperimentConfig values;  // bound to the CLI options
};

// Builds the effective config: defaults, then config file, then given flags.
opdyn::ExperimentConfig effective_config(const CLI::App& app, const CliFlags& flags) {
  opdyn::ExperimentConfig cfg;
  if (!flags.config_path.empty())
    cfg = opdyn::ExperimentConfig::from_json_file(flags.config_path);
  const auto take = [&](const std::string& name, auto member) {
    if (app.count(name) > 0) cfg.*member = flags.values.*member;
  };
  take("--theta", &opdyn::ExperimentConfig::theta);
  take("--mu-minus", &opdyn::ExperimentConfig::mu_minus);
  take("--mu-plus", &opdyn::ExperimentConfig::mu_plus);
  take("--sites", &opdyn::ExperimentConfig::sites);
  take("--t-max", &opdyn::ExperimentConfig::t_max);
  take("--seed", &opdyn::ExperimentConfig::seed);
  take("--replicas", &opdyn::ExperimentConfig::replicas);
  take("--threads", &opdyn::ExperimentConfig::threads);
  take("--out", &opdyn::ExperimentConfig::out_dir);
  take("--thresholds", &opdyn::ExperimentConfig::thresholds);
  take("--gap-fractions", &opdyn::ExperimentConfig::gap_fractions);
  take("--tracker-stride", &opdyn::ExperimentConfig::tracker_stride);
  take("--history-stride", &opdyn::ExperimentConfig::history_stride);
  take("--sample-dt", &opdyn::ExperimentConfig::sample_dt);
  take("--trace", &opdyn::ExperimentConfig::emit_trace);
  take("--events", &opdyn::ExperimentConfig::emit_events);
  take("--svg", &opdyn::ExperimentConfig::emit_svg);
  take("--half-width", &opdyn::ExperimentConfig::half_width);
  take("--snapshot-times", &opdyn::ExperimentConfig::snapshot_times);
  take("--spacing", &opdyn::ExperimentConfig::spacing);
  take("--dt", &opdyn::ExperimentConfig::dt);
  take("--support-delta", &opdyn::ExperimentConfig::support_delta);
  take("--x0", &opdyn::ExperimentConfig::x0);
  take("--tol", &opdyn::ExperimentConfig::certificate_tol);
  if (app.count("--boundary") > 0) cfg.boundary = flags.values.boundary;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-driven simulator and verification toolkit for bounded-confidence "
               "opinion dynamics with attraction and repulsion"};
  app.require_subcommand(1);

  CliFlags flags;
  std::string boundary_name = "ring";
  app.add_option("--config", flags.config_path, "JSON config file; flags override its values");
  app.add_option("--theta", flags.values.theta, "confidence threshold, 0 < theta < 2");
  app.add_option("--mu-minus", flags.values.mu_minus, "compromise strength, 0 < mu- <= 1/2");
  app.add_option("--mu-plus", flags.values.mu_plus, "repulsion strength, 0 <= mu+ <= 1/2");
  app.add_option("--sites", flags.values.sites, "number of lattice sites (>= 4)");
  app.add_option("--t-max", flags.values.t_max, "time horizon of the subcommand");
  app.add_option("--seed", flags.values.seed, "base seed; replica r derives its own stream");
  app.add_option("--replicas", flags.values.replicas, "independent replicas");
  app.add_option("--threads", flags.values.threads, "worker threads for replica fan-out");
  app.add_option("--boundary", boundary_name, "ring or segment")
      ->check(CLI::IsMember({"ring", "segment"}));
  app.add_option("--out", flags.values.out_dir, "output directory");
  app.add_option("--thresholds", flags.values.thresholds, "divergence report thresholds");
  app.add_option("--gap-fractions", flags.values.gap_fractions,
                 "report final fraction of gaps above these values");
  app.add_option("--tracker-stride", flags.values.tracker_stride,
                 "monitor every k-th edge (0 = auto)");
  app.add_option("--history-stride", flags.values.history_stride,
                 "sample tracker trace every m-th touch");
  app.add_option("--sample-dt", flags.values.sample_dt, "time series sampling step");
  app.add_flag("--trace", flags.values.emit_trace, "write the tracker trace CSV");
  app.add_flag("--events", flags.values.emit_events, "write the event trace CSV (replica 0)");
  app.add_flag("--svg", flags.values.emit_svg, "also render SVG plots from the CSV data");
  app.add_option("--half-width", flags.values.half_width, "meanfield domain half width");
  app.add_option("--snapshot-times", flags.values.snapshot_times,
                 "meanfield profile snapshot times (default: 0, t/2, t)");
  app.add_option("--spacing", flags.values.spacing, "meanfield grid spacing");
  app.add_option("--dt", flags.values.dt, "meanfield time step");
  app.add_option("--support-delta", flags.values.support_delta,
                 "density level defining the support radius");
  app.add_option("--x0", flags.values.x0, "dominated walk start value");
  app.add_option("--tol", flags.values.certificate_tol, "certificate bisection tolerance");

  CLI::App* cmd_simulate =
      app.add_subcommand("simulate", "lattice run with trackers; series + summary");
  CLI::App* cmd_track =
      app.add_subcommand("track", "lattice run emitting the tracker trace CSV");
  CLI::App* cmd_forced =
      app.add_subcommand("forced-increase", "deterministic kick sequence check");
  CLI::App* cmd_xprocess =
      app.add_subcommand("xprocess", "dominated multiplicative walk statistics");
  CLI::App* cmd_c0 = app.add_subcommand("c0", "supermartingale certificate and bounds");
  CLI::App* cmd_meanfield = app.add_subcommand("meanfield", "kinetic density integration");
  CLI::App* cmd_verify = app.add_subcommand("verify", "run the full oracle suite");
  double verify_scale = 1.0;
  cmd_verify->add_option("--scale", verify_scale, "sample count multiplier");
  for (CLI::App* sub : {cmd_simulate, cmd_track, cmd_forced, cmd_xprocess, cmd_c0,
                        cmd_meanfield, cmd_verify})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    flags.values.boundary = opdyn::boundary_from_string(boundary_name);
    const opdyn::ExperimentConfig cfg = effective_config(app, flags);

    if (cmd_simulate->parsed() || cmd_track->parsed()) {
      const opdyn::SimulateOutput out = opdyn::run_simulate(cfg);
      opdyn::write_simulate_outputs(cfg, out, cmd_track->parsed());
      std::cout << out.summary["results"].dump(2) << '\n';
      return 0;
    }
    if (cmd_forced->parsed()) {
      const nlohmann::json j = opdyn::run_forced_increase_cmd(cfg);
      std::cout << j["results"].dump(2) << '\n';
      return j["results"]["pass"].get<bool>() ? 0 : 1;
    }
    if (cmd_xprocess->parsed()) {
      std::cout << opdyn::run_xprocess(cfg)["results"].dump(2) << '\n';
      return 0;
    }
    if (cmd_c0->parsed()) {
      std::cout << opdyn::run_certificate(cfg)["results"].dump(2) << '\n';
      return 0;
    }
    if (cmd_meanfield->parsed()) {
      std::cout << opdyn::run_meanfield_cmd(cfg)["results"].dump(2) << '\n';
      return 0;
    }
    if (cmd_verify->parsed()) {
      const nlohmann::json j = opdyn::run_verify_cmd(cfg, verify_scale);
      for (const auto& c : j["results"]["checks"])
        std::printf("[%s] %s (%lld samples) margin %g\n",
                    c["pass"].get<bool>() ? "PASS" : "FAIL",
                    c["name"].get<std::string>().c_str(), c["samples"].get<long long>(),
                    c["worst_margin"].get<double>());
      const bool ok = j["results"]["all_pass"].get<bool>();
      std::printf("verify: %s\n", ok ? "all checks passed" : "FAILURES PRESENT");
      return ok ? 0 : 1;
    }
  } catch (const opdyn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const opdyn::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return 3;
  } catch (const opdyn::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
