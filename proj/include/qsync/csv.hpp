#pragma once

#include <filesystem>
#include <stdexcept>

#include "qsync/syncmeter.hpp"

namespace qsync {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed content in an otherwise readable file.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header `time,<name>,...`; values in shortest round-trip decimal form.
void write_table(const std::filesystem::path& path, const SeriesTable& table);

/// Throws IoError when the file cannot be read and SchemaError when the
/// header or a row is malformed.
SeriesTable read_table(const std::filesystem::path& path);

}  // namespace qsync
