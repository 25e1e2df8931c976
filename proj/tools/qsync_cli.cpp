// qsync: run presets or config files, re-analyze trajectories, sweep grids.
//
// Exit codes: 0 ok, 1 other failure, 2 config or schema error, 3 truncation
// guard, 4 I/O error, 5 every sweep point failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qsync/scenario.hpp"
#include "qsync/sweep.hpp"
#include "qsync/version.hpp"

namespace fs = std::filesystem;
using namespace qsync;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kTruncation = 3, kIo = 4, kSweepFailed = 5 };

struct AnalysisFlags {
  std::optional<std::string> window;
  std::optional<double> tol_freq;
  std::optional<double> tol_phase;
  std::optional<std::string> catalog;

  void add_to(CLI::App* app) {
    app->add_option("--window", window, "analysis window T0:T1");
    app->add_option("--tol-freq", tol_freq, "relative frequency tolerance");
    app->add_option("--tol-phase", tol_phase, "phase-class tolerance (rad)");
    app->add_option("--catalog", catalog, "pauli | vdp_moments[:N]");
  }

  void override_keys(KeyValues& kv) const {
    auto set = [&](const std::string& key, const std::string& value) {
      for (auto& p : kv)
        if (p.first == key) {
          p.second = value;
          return;
        }
      kv.emplace_back(key, value);
    };
    if (window) set("analysis.window", *window);
    if (tol_freq) set("analysis.tol_freq", format_double(*tol_freq));
    if (tol_phase) set("analysis.tol_phase", format_double(*tol_phase));
    if (catalog) set("analysis.catalog", *catalog);
  }
};

void print_report(const SyncReport& r) {
  std::printf("%-4s %-8s %-8s %-12s %-12s %-10s %s\n", "obs", "osc_1", "osc_2", "freq_1", "freq_2", "synced",
              "phase_class");
  for (const auto& p : r.pairs)
    std::printf("%-4s %-8s %-8s %-12.6g %-12.6g %-10s %s\n", p.name.c_str(), p.first.oscillating ? "yes" : "no",
                p.second.oscillating ? "yes" : "no", p.first.frequency, p.second.frequency,
                p.verdict.synced ? "yes" : "no", std::string(to_string(p.verdict.phase_class)).c_str());
  std::printf("S = {");
  for (std::size_t i = 0; i < r.S.size(); ++i) std::printf("%s%s", i ? ", " : "", r.S[i].c_str());
  std::printf("}  chi = %d  c = %d  xi = %d", r.q.chi, r.q.c, r.q.xi);
  if (r.mutual_info_final) std::printf("  mutual_info_final = %.3e", *r.mutual_info_final);
  std::printf("\n");
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kConfig;
  } catch (const TruncationError& e) {
    std::cerr << "truncation: " << e.what() << '\n';
    return kTruncation;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lindblad simulation and synchronization analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "simulate a preset or config file and analyze it");
  std::string run_positional, run_preset, run_config, run_out;
  AnalysisFlags run_flags;
  run->add_option("preset_name", run_positional, "preset name (same as --preset)");
  run->add_option("--preset", run_preset, "fig2a | fig2b | fig2c | fig3");
  run->add_option("--config", run_config, "scenario config file");
  run->add_option("--out", run_out, "output directory (default: out/<name>)");
  run_flags.add_to(run);

  // analyze
  auto* an = app.add_subcommand("analyze", "re-analyze a trajectory CSV");
  std::string an_csv, an_out, an_mi, an_from;
  AnalysisFlags an_flags;
  an->add_option("csv", an_csv, "trajectory.csv")->required();
  an->add_option("--out", an_out, "output directory for report.json")->required();
  an->add_option("--mutual-info", an_mi, "mutual_info.csv (default: next to the trajectory if present)");
  an->add_option("--from-report", an_from, "take catalog, window and thresholds from an existing report.json");
  an_flags.add_to(an);

  // sweep
  auto* sw = app.add_subcommand("sweep", "run a parameter grid");
  std::string sw_config, sw_out;
  std::optional<unsigned> sw_jobs;
  sw->add_option("--config", sw_config, "sweep config file")->required();
  sw->add_option("--out", sw_out, "output directory")->required();
  sw->add_option("--jobs", sw_jobs, "concurrent grid points (overrides sweep.jobs)");

  auto* pr = app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*run) {
    return guarded([&] {
      if (!run_positional.empty() && !run_preset.empty() && run_positional != run_preset)
        throw ConfigError("conflicting preset names '" + run_positional + "' and '" + run_preset + "'");
      const std::string name = run_preset.empty() ? run_positional : run_preset;
      if (name.empty() == run_config.empty()) throw ConfigError("give exactly one of a preset name or --config");
      KeyValues kv = run_config.empty() ? KeyValues{{"preset", name}} : read_key_values(run_config);
      run_flags.override_keys(kv);
      const ScenarioConfig cfg = build_scenario(kv);
      const fs::path out = run_out.empty() ? fs::path("out") / cfg.name : fs::path(run_out);
      const RunResult res = run_scenario(cfg, out);
      print_report(res.report);
      std::printf("wrote %s\n", out.string().c_str());
      return int(kOk);
    });
  }

  if (*an) {
    return guarded([&] {
      AnalyzeRequest req;
      req.csv = an_csv;
      if (!an_from.empty()) {
        const Json rep = read_json(an_from);
        try {
          const Json& a = rep.at("analysis");
          req.catalog = a.at("catalog").get<std::string>();
          req.window = AnalysisWindow{a.at("window").at(0).get<double>(), a.at("window").at(1).get<double>()};
          const Json& t = a.at("thresholds");
          req.thresholds.pair.tol_freq = t.at("tol_freq").get<double>();
          req.thresholds.pair.tol_phase = t.at("tol_phase").get<double>();
          req.thresholds.pair.freq_resolution = t.at("freq_resolution").get<double>();
          req.thresholds.fit.amp_min = t.at("amp_min").get<double>();
          req.thresholds.fit.fit_tol = t.at("fit_tol").get<double>();
          req.thresholds.fit.min_cycles = t.at("min_cycles").get<double>();
          req.thresholds.fit.max_damping_ratio = t.at("max_damping_ratio").get<double>();
        } catch (const nlohmann::json::exception& e) {
          throw SchemaError("'" + an_from + "': " + e.what());
        }
      }
      if (an_flags.catalog) req.catalog = *an_flags.catalog;
      if (an_flags.window) req.window = parse_window(*an_flags.window);
      if (an_flags.tol_freq) req.thresholds.pair.tol_freq = *an_flags.tol_freq;
      if (an_flags.tol_phase) req.thresholds.pair.tol_phase = *an_flags.tol_phase;
      if (!an_mi.empty()) {
        req.mutual_info_csv = fs::path(an_mi);
      } else {
        const fs::path sibling = fs::path(an_csv).parent_path() / "mutual_info.csv";
        if (fs::exists(sibling)) req.mutual_info_csv = sibling;
      }
      const SyncReport r = analyze_files(req);

      Json echo;
      echo["csv"] = an_csv;
      echo["mutual_info_csv"] = req.mutual_info_csv ? Json(req.mutual_info_csv->string()) : Json(nullptr);
      echo["from_report"] = an_from.empty() ? Json(nullptr) : Json(an_from);
      const fs::path out(an_out);
      std::error_code ec;
      fs::create_directories(out, ec);
      if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory '" + an_out + "'");
      write_json(out / "report.json", make_report("analyze", echo, r));
      print_report(r);
      std::printf("wrote %s\n", (out / "report.json").string().c_str());
      return int(kOk);
    });
  }

  if (*sw) {
    return guarded([&] {
      SweepSpec spec = build_sweep(read_key_values(sw_config));
      if (sw_jobs) spec.jobs = std::max(1u, *sw_jobs);
      const SweepResult res = run_sweep(spec, sw_out);
      std::printf("%zu of %zu points succeeded; wrote %s\n", res.succeeded, res.rows.size(),
                  (fs::path(sw_out) / "summary.csv").string().c_str());
      return res.succeeded > 0 ? int(kOk) : int(kSweepFailed);
    });
  }

  if (*pr) {
    for (const auto& name : preset_names()) {
      const Preset p = preset(name);
      std::printf("%-6s %s\n", name.c_str(), p.description.c_str());
    }
    return kOk;
  }
  return kFailure;
}
