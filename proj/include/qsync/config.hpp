#pragma once

// Scenario configuration: flat `key = value` text with optional `[section]`
// headers that prefix the keys below them (`[run]` + `t_end` == `run.t_end`).
//
//   preset = fig2a                  # optional base; other keys override it
//   model = cavity_qubit            # cavity_qubit | reduced_qubit | vdp
//   params.<field> = <number>       # field names of the Params structs
//   initial.preset = fig2a          # or one amplitude list per factor:
//   initial.amplitudes.q1 = 0.9486832980505138, 0.31622776601683794
//   run.t_end, run.sample_dt, run.rel_tol, run.abs_tol, run.truncation_limit
//   analysis.window = T0:T1, analysis.catalog, analysis.tol_freq, ...
//   sweep.axis.<key> = v1, v2, ...  sweep.max_points, sweep.jobs
//
// Amplitude entries are `re` or `re:im`.

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsync/models.hpp"
#include "qsync/syncmeter.hpp"

namespace qsync {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct RunSettings {
  double t_end = 0.0;
  double sample_dt = 0.0;
  Tolerances tol;
  double truncation_limit = 1e-4;
};

struct ScenarioConfig {
  std::string name;    // preset name or "custom"
  std::string preset;  // base preset, empty if none
  ModelParams params;
  std::vector<CVector> initial_amplitudes;
  std::string initial_source;  // "preset:<name>" or "explicit"
  RunSettings run;
  AnalysisWindow window;
  std::string catalog;
  SyncThresholds thresholds;
};

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SweepSpec {
  KeyValues base;  // scenario keys, sweep.* removed
  std::vector<SweepAxis> axes;
  std::size_t max_points = 256;
  unsigned jobs = 1;
};

/// Throws ConfigError with the offending line number.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>");
KeyValues read_key_values(const std::filesystem::path& path);

/// Throws ConfigError on unknown keys, missing required keys, malformed or
/// out-of-range values.
ScenarioConfig build_scenario(const KeyValues& kv);
ScenarioConfig scenario_from_preset(std::string_view name);

/// Every effective setting, in a fixed order; feeding it back through
/// build_scenario reproduces the config.
KeyValues resolved_key_values(const ScenarioConfig& cfg);

SweepSpec build_sweep(const KeyValues& kv);

/// "T0:T1".
AnalysisWindow parse_window(const std::string& text);

/// Shortest text that parses back to the same double.
std::string format_double(double x);

}  // namespace qsync
