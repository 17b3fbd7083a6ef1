#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ibrd/model.hpp"
#include "ibrd/scaling.hpp"
#include "ibrd/streaming.hpp"

namespace ibrd {

// Raised for unparseable or inconsistent configs; the message names the
// offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScheduleSpec {
  RateSchedule schedule;  // coefficient and offset held in nats
  std::string label;
};

// One emitted curve of a streaming experiment: a label plus the trade-off
// policy that generates it.
struct StreamSweep {
  std::string label;
  BetaPolicy policy;           // rate budgets held in nats
  std::vector<double> params;  // per-round driver value for the param column
  bool param_is_rate = false;  // params are rates (unit-scaled on emission)
};

struct OutputSpec {
  std::string path;
  std::string format = "csv";  // csv or json
};

// Fully validated experiment description.  Rate-like inputs are converted to
// nats during parsing when the config declares bits; the bits flag only
// affects the emitted columns.
struct ExperimentConfig {
  std::string experiment;
  std::optional<GaussianModel> gaussian;
  std::optional<DiscreteFamily> discrete;
  std::string model_id;
  std::vector<int> k_values;
  int rounds = 0;
  int passes = 1;
  int k_max = 0;
  std::vector<double> beta_values;         // batch betas, trade-off weights
  std::vector<StreamSweep> stream_sweeps;  // streaming curves
  std::vector<ScheduleSpec> schedules;     // scaling budgets
  int t_size = 0;
  int restarts = 0;  // 0 picks the experiment default
  int max_evals = 2000;
  std::uint64_t seed = 0;
  OutputSpec output;
  bool bits = false;
  std::string echo;  // canonicalized config text for the sidecar
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct RunResult {
  int exit_code = 0;  // 0 clean, 2 completed with flagged rows
  std::vector<std::string> messages;
};

// Runs the sweep, writes the data file and its .meta.json sidecar, audits
// every emitted distortion against its model's entropy bracket, and reports
// flags.  The data file depends only on the config; wall-clock timing lives
// in the sidecar.
RunResult run_experiment(const ExperimentConfig& config);

// Built-in configs, one per reproduced figure.
std::vector<std::string> preset_names();
std::string preset_config_text(const std::string& name);

}  // namespace ibrd
