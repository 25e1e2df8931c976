#include "qsync/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "qsync/config.hpp"

namespace qsync {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_table(const std::filesystem::path& path, const SeriesTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "time";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < table.times.size(); ++r) {
    out << format_double(table.times[r]);
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) out << ',' << format_double(table.values(Eigen::Index(r), c));
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SeriesTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_commas(line);
  if (header.empty() || header.front() != "time")
    throw SchemaError("'" + path.string() + "': header must start with 'time'");
  SeriesTable t;
  t.names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw SchemaError("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields");
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const char* b = cells[i].data();
      const char* e = b + cells[i].size();
      auto res = std::from_chars(b, e, row[i]);
      if (cells[i].empty() || res.ec != std::errc() || res.ptr != e)
        throw SchemaError("'" + path.string() + "' line " + std::to_string(lineno) + ": bad number '" + cells[i] + "'");
    }
    rows.push_back(std::move(row));
  }
  t.times.resize(rows.size());
  t.values.resize(Eigen::Index(rows.size()), Eigen::Index(t.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    t.times[r] = rows[r][0];
    for (std::size_t c = 0; c < t.names.size(); ++c) t.values(Eigen::Index(r), Eigen::Index(c)) = rows[r][c + 1];
  }
  return t;
}

}  // namespace qsync
