#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "qsync/config.hpp"
#include "qsync/csv.hpp"

namespace qsync {

using Json = nlohmann::ordered_json;

struct RunResult {
  Trajectory trajectory;
  SeriesTable mutual_info;       // time, mutual_info (first two factors)
  std::optional<SeriesTable> sc;  // time, S_c (two-mode bosonic models)
  SyncReport report;
  Json json;
};

/// Integrates, analyzes and, when out_dir is non-empty, writes
/// trajectory.csv, mutual_info.csv, report.json (and sc.csv for two-mode
/// bosonic models). Lets TruncationError, IntegrationError and IoError
/// propagate.
RunResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

struct AnalyzeRequest {
  std::filesystem::path csv;
  std::optional<std::filesystem::path> mutual_info_csv;
  std::string catalog = "pauli";
  std::optional<AnalysisWindow> window;  // default: second half of the samples
  SyncThresholds thresholds;
};

/// Throws SchemaError when the CSV does not fit the catalog.
SyncReport analyze_files(const AnalyzeRequest& req);

Json fit_to_json(const OscillationFit& f);
/// Catalog, window, thresholds and notes.
Json analysis_to_json(const SyncReport& r);
/// Pair verdicts, S, chi, c, xi, mutual information.
Json sync_to_json(const SyncReport& r);
Json make_report(const std::string& command, const Json& config_echo, const SyncReport& r);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace qsync
