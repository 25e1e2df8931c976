#include "qsync/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "qsync/scenario.hpp"

namespace qsync {

namespace fs = std::filesystem;

namespace {

std::string point_dir(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "point_%04zu", i);
  return buf;
}

std::string csv_cell(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

SweepRow run_point(const SweepSpec& spec, const std::vector<std::string>& values, const fs::path& dir) {
  SweepRow row;
  row.values = values;
  try {
    KeyValues kv;
    for (const auto& p : spec.base) {
      const bool swept = std::any_of(spec.axes.begin(), spec.axes.end(),
                                     [&](const SweepAxis& a) { return a.key == p.first; });
      if (!swept) kv.push_back(p);
    }
    for (std::size_t a = 0; a < spec.axes.size(); ++a) kv.emplace_back(spec.axes[a].key, values[a]);
    const ScenarioConfig cfg = build_scenario(kv);
    const RunResult res = run_scenario(cfg, dir);
    row.status = "ok";
    row.q = res.report.q;
    row.mutual_info_final = res.report.mutual_info_final;
  } catch (const ConfigError& e) {
    row.status = "config_error";
    row.message = e.what();
  } catch (const TruncationError& e) {
    row.status = "truncation";
    row.message = e.what();
  } catch (const IntegrationError& e) {
    row.status = "integration_error";
    row.message = e.what();
  } catch (const IoError& e) {
    row.status = "io_error";
    row.message = e.what();
  } catch (const std::exception& e) {
    row.status = "error";
    row.message = e.what();
  }
  return row;
}

}  // namespace

std::vector<std::vector<std::string>> sweep_grid(const SweepSpec& spec) {
  std::vector<std::vector<std::string>> out;
  if (spec.axes.empty()) return out;
  std::vector<std::size_t> idx(spec.axes.size(), 0);
  while (true) {
    std::vector<std::string> point;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) point.push_back(spec.axes[a].values[idx[a]]);
    out.push_back(std::move(point));
    std::size_t a = spec.axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < spec.axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
  }
}

SweepResult run_sweep(const SweepSpec& spec, const fs::path& out_dir) {
  const auto grid = sweep_grid(spec);
  if (grid.size() > spec.max_points) throw ConfigError("sweep grid exceeds sweep.max_points");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory '" + out_dir.string() + "'");

  SweepResult res;
  for (const auto& a : spec.axes) res.axis_keys.push_back(a.key);
  res.rows.resize(grid.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) res.rows[i] = run_point(spec, grid[i], out_dir / point_dir(i));
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, unsigned(grid.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const fs::path summary = out_dir / "summary.csv";
  std::ofstream out(summary);
  if (!out) throw IoError("cannot write '" + summary.string() + "'");
  out << "point";
  for (const auto& k : res.axis_keys) out << ',' << k;
  out << ",status,chi,c,xi,mutual_info_final,message\n";
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const SweepRow& r = res.rows[i];
    out << point_dir(i);
    for (const auto& v : r.values) out << ',' << csv_cell(v);
    out << ',' << r.status;
    if (r.status == "ok") {
      ++res.succeeded;
      out << ',' << r.q.chi << ',' << r.q.c << ',' << r.q.xi << ','
          << (r.mutual_info_final ? format_double(*r.mutual_info_final) : "");
    } else {
      out << ",,,,";
    }
    out << ',' << csv_cell(r.message) << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + summary.string() + "'");
  return res;
}

}  // namespace qsync
