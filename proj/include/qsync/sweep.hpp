#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qsync/config.hpp"

namespace qsync {

struct SweepRow {
  std::vector<std::string> values;  // one per axis
  std::string status;               // ok | config_error | truncation | integration_error | io_error | error
  std::string message;
  Quantumness q;
  std::optional<double> mutual_info_final;
};

struct SweepResult {
  std::vector<std::string> axis_keys;
  std::vector<SweepRow> rows;  // lexicographic grid order, last axis fastest
  std::size_t succeeded = 0;
};

/// Grid points in lexicographic order of the axis value indices.
std::vector<std::vector<std::string>> sweep_grid(const SweepSpec& spec);

/// Runs every grid point into out_dir/point_NNNN and writes
/// out_dir/summary.csv. Points run on up to spec.jobs threads; failures are
/// recorded per row.
SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir);

}  // namespace qsync
