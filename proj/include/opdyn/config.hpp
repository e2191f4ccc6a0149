#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opdyn/model.hpp"

namespace opdyn {

// A config file or flag value is unusable.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat experiment configuration shared by every subcommand. Values come from
// built-in defaults, then an optional JSON config file, then command-line
// flags; later sources win. Shared keys are interpreted per subcommand
// (t_max is the lattice horizon for simulate, the walk horizon for xprocess,
// the integration horizon for meanfield).
struct ExperimentConfig {
  double theta = 1.0;
  double mu_minus = 0.5;
  double mu_plus = 0.25;
  int sites = 1000;
  Boundary boundary = Boundary::ring;
  double t_max = 200.0;
  std::uint64_t seed = 1;
  int replicas = 1;
  int threads = 1;
  std::string out_dir = "out";

  std::vector<double> thresholds = {10.0, 100.0, 1000.0, 10000.0};
  std::vector<double> gap_fractions = {0.01};  // final-state gap fractions to report
  int tracker_stride = 0;                      // 0 = auto
  int history_stride = 16;
  double sample_dt = 1.0;
  bool emit_trace = false;
  bool emit_events = false;
  bool emit_svg = false;

  // meanfield
  std::vector<double> snapshot_times;  // empty: 0, t_max/2, t_max
  double half_width = 8.0;
  double spacing = 0.02;
  double dt = 0.005;
  double support_delta = 1e-4;

  // dominated walk / certificate
  double x0 = 1.0;
  double certificate_tol = 1e-9;

  ModelParams params() const { return ModelParams::validated(theta, mu_minus, mu_plus); }

  void apply_json(const nlohmann::json& j) {
    for (const auto& [key, value] : j.items()) {
      try {
        if (key == "theta") theta = value.get<double>();
        else if (key == "mu_minus") mu_minus = value.get<double>();
        else if (key == "mu_plus") mu_plus = value.get<double>();
        else if (key == "sites") sites = value.get<int>();
        else if (key == "boundary") boundary = boundary_from_string(value.get<std::string>());
        else if (key == "t_max") t_max = value.get<double>();
        else if (key == "seed") seed = value.get<std::uint64_t>();
        else if (key == "replicas") replicas = value.get<int>();
        else if (key == "threads") threads = value.get<int>();
        else if (key == "out") out_dir = value.get<std::string>();
        else if (key == "thresholds") thresholds = value.get<std::vector<double>>();
        else if (key == "gap_fractions") gap_fractions = value.get<std::vector<double>>();
        else if (key == "tracker_stride") tracker_stride = value.get<int>();
        else if (key == "history_stride") history_stride = value.get<int>();
        else if (key == "sample_dt") sample_dt = value.get<double>();
        else if (key == "emit_trace") emit_trace = value.get<bool>();
        else if (key == "emit_events") emit_events = value.get<bool>();
        else if (key == "emit_svg") emit_svg = value.get<bool>();
        else if (key == "snapshot_times") snapshot_times = value.get<std::vector<double>>();
        else if (key == "half_width") half_width = value.get<double>();
        else if (key == "spacing") spacing = value.get<double>();
        else if (key == "dt") dt = value.get<double>();
        else if (key == "support_delta") support_delta = value.get<double>();
        else if (key == "x0") x0 = value.get<double>();
        else if (key == "certificate_tol") certificate_tol = value.get<double>();
        else throw ConfigError("unknown config key '" + key + "'");
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad value for config key '" + key + "': " + e.what());
      }
    }
  }

  static ExperimentConfig from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot parse config file '" + path + "': " + e.what());
    }
    ExperimentConfig cfg;
    cfg.apply_json(j);
    return cfg;
  }

  void validate() const {
    params();  // throws on bad model parameters
    if (sites < 4) throw ConfigError("sites must be at least 4");
    if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
    if (replicas < 1) throw ConfigError("replicas must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (!(sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
    if (!(dt > 0.0) || !(spacing > 0.0) || !(half_width > 1.0))
      throw ConfigError("meanfield resolution must be positive with half_width > 1");
  }

  nlohmann::json echo() const {
    return nlohmann::json{{"theta", theta},
                          {"mu_minus", mu_minus},
                          {"mu_plus", mu_plus},
                          {"sites", sites},
                          {"boundary", to_string(boundary)},
                          {"t_max", t_max},
                          {"seed", seed},
                          {"replicas", replicas},
                          {"threads", threads},
                          {"out", out_dir},
                          {"thresholds", thresholds},
                          {"gap_fractions", gap_fractions},
                          {"tracker_stride", tracker_stride},
                          {"history_stride", history_stride},
                          {"sample_dt", sample_dt},
                          {"emit_trace", emit_trace},
                          {"emit_events", emit_events},
                          {"emit_svg", emit_svg},
                          {"snapshot_times", snapshot_times},
                          {"half_width", half_width},
                          {"spacing", spacing},
                          {"dt", dt},
                          {"support_delta", support_delta},
                          {"x0", x0},
                          {"certificate_tol", certificate_tol}};
  }
};

}  // namespace opdyn
