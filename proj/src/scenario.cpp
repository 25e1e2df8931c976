#include "qsync/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "qsync/version.hpp"

namespace qsync {

namespace fs = std::filesystem;

namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

Json kv_to_json(const KeyValues& kv) {
  Json j = Json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

}  // namespace

Json fit_to_json(const OscillationFit& f) {
  Json j;
  j["oscillating"] = f.oscillating;
  j["frequency"] = number_or_null(f.frequency);
  j["decay"] = number_or_null(f.decay);
  j["phase"] = number_or_null(f.phase);
  j["amplitude"] = number_or_null(f.amplitude);
  j["offset"] = number_or_null(f.offset);
  j["residual_rms"] = number_or_null(f.residual_rms);
  j["signal_scale"] = number_or_null(f.signal_scale);
  j["t_ref"] = f.t_ref;
  j["window_length"] = f.window_length;
  j["samples"] = f.samples;
  j["model_order"] = f.model_order;
  j["diagnostic"] = f.diagnostic;
  return j;
}

Json analysis_to_json(const SyncReport& r) {
  Json j;
  j["catalog"] = r.catalog;
  j["window"] = {r.window.t0, r.window.t1};
  const auto& f = r.thresholds.fit;
  const auto& p = r.thresholds.pair;
  j["thresholds"] = {
      {"tol_freq", p.tol_freq},
      {"tol_phase", p.tol_phase},
      {"freq_resolution", p.freq_resolution},
      {"amp_min", f.amp_min},
      {"fit_tol", f.fit_tol},
      {"min_cycles", f.min_cycles},
      {"max_damping_ratio", f.max_damping_ratio},
      {"min_samples", f.min_samples},
      {"refine_tol", f.refine_tol},
      {"pencil_sv_rel_tol", f.pencil.sv_rel_tol},
      {"pencil_max_order", f.pencil.max_order},
      {"pencil_max_width", f.pencil.max_pencil},
      {"rank_tol", kRankTol},
      {"commute_tol", kCommuteTol},
  };
  Json notes = Json::object();
  for (const auto& [k, v] : r.notes) notes[k] = v;
  j["notes"] = notes;
  return j;
}

Json sync_to_json(const SyncReport& r) {
  Json pairs = Json::array();
  for (const auto& pr : r.pairs) {
    Json p;
    p["name"] = pr.name;
    p["synced"] = pr.verdict.synced;
    p["freq_mismatch"] = number_or_null(pr.verdict.freq_mismatch);
    p["phase_diff"] = number_or_null(pr.verdict.phase_diff);
    p["phase_class"] = std::string(to_string(pr.verdict.phase_class));
    p["amplitude_ratio"] = number_or_null(pr.verdict.amplitude_ratio);
    p["fit_1"] = fit_to_json(pr.first);
    p["fit_2"] = fit_to_json(pr.second);
    pairs.push_back(std::move(p));
  }
  Json j;
  j["pairs"] = pairs;
  j["synced"] = r.synced;
  j["S"] = r.S;
  j["chi"] = r.q.chi;
  j["c"] = r.q.c;
  j["xi"] = r.q.xi;
  j["subsystem_dim"] = r.subsystem_dim;
  j["mutual_info_final"] = r.mutual_info_final ? number_or_null(*r.mutual_info_final) : Json(nullptr);
  return j;
}

Json make_report(const std::string& command, const Json& config_echo, const SyncReport& r) {
  Json j;
  j["software"] = {{"name", "qsync"}, {"version", kVersion}};
  j["command"] = command;
  j["config"] = config_echo;
  j["analysis"] = analysis_to_json(r);
  j["sync"] = sync_to_json(r);
  return j;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("'" + path.string() + "': " + e.what());
  }
}

RunResult run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
  if (!out_dir.empty()) ensure_dir(out_dir);

  const ModelSpec model = build_model(cfg.params);
  const DensityMatrix rho0 = product_state(model.layout, cfg.initial_amplitudes);
  const bool two_modes = model.layout.size() == 2 && model.layout.factor(0).kind == FactorKind::boson &&
                         model.layout.factor(1).kind == FactorKind::boson;

  RunResult res;
  res.mutual_info.names = {"mutual_info"};
  std::vector<double> mi, sc;
  const std::size_t keep_pair[2] = {0, 1};
  const std::size_t part_a[1] = {0};
  auto observer = [&](double t, const DensityMatrix& rho) {
    res.mutual_info.times.push_back(t);
    if (model.layout.size() > 2)
      mi.push_back(mutual_information(partial_trace(rho, keep_pair), part_a));
    else
      mi.push_back(mutual_information(rho, part_a));
    if (two_modes) sc.push_back(mari_measure(rho));
  };

  EvolveOptions opts;
  opts.tol = cfg.run.tol;
  opts.truncation_limit = cfg.run.truncation_limit;
  res.trajectory = evolve(model, rho0, cfg.run.t_end, cfg.run.sample_dt, opts, observer);

  res.mutual_info.values = Eigen::Map<const Eigen::VectorXd>(mi.data(), Eigen::Index(mi.size()));
  if (two_modes) {
    SeriesTable t;
    t.times = res.mutual_info.times;
    t.names = {"S_c"};
    t.values = Eigen::Map<const Eigen::VectorXd>(sc.data(), Eigen::Index(sc.size()));
    res.sc = std::move(t);
  }

  res.report = analyze(table_from(res.trajectory), catalog_from_spec(cfg.catalog), cfg.window, cfg.thresholds,
                       mi.empty() ? std::nullopt : std::optional<double>(mi.back()));

  double max_trace = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (const auto& d : res.trajectory.diagnostics) {
    max_trace = std::max(max_trace, d.trace_error);
    min_eig = std::min(min_eig, d.min_eigenvalue);
  }
  Json top = Json::object();
  for (const auto& [slot, pop] : top_level_populations(res.trajectory.final_state))
    top[model.layout.factor(slot).label] = pop;

  res.json = make_report("run", kv_to_json(resolved_key_values(cfg)), res.report);
  res.json["run"] = {
      {"name", cfg.name},
      {"model", std::string(model_kind(cfg.params))},
      {"reference_unit", model.reference_unit},
      {"samples", res.trajectory.times.size()},
      {"steps_accepted", res.trajectory.steps_accepted},
      {"steps_rejected", res.trajectory.steps_rejected},
      {"max_trace_error", max_trace},
      {"min_eigenvalue", min_eig},
      {"top_level_population_final", top},
  };
  if (res.sc) {
    res.json["run"]["S_c_max"] = res.sc->values.maxCoeff();
    res.json["run"]["S_c_final"] = res.sc->values(res.sc->values.size() - 1);
  }

  if (!out_dir.empty()) {
    write_table(out_dir / "trajectory.csv", table_from(res.trajectory));
    write_table(out_dir / "mutual_info.csv", res.mutual_info);
    if (res.sc) write_table(out_dir / "sc.csv", *res.sc);
    write_json(out_dir / "report.json", res.json);
  }
  return res;
}

SyncReport analyze_files(const AnalyzeRequest& req) {
  const SeriesTable table = read_table(req.csv);
  if (table.times.size() < 2) throw SchemaError("'" + req.csv.string() + "' holds fewer than two samples");
  std::optional<double> mi;
  if (req.mutual_info_csv) {
    const SeriesTable m = read_table(*req.mutual_info_csv);
    auto it = std::find(m.names.begin(), m.names.end(), "mutual_info");
    if (it == m.names.end()) throw SchemaError("'" + req.mutual_info_csv->string() + "' has no mutual_info column");
    if (m.times.empty()) throw SchemaError("'" + req.mutual_info_csv->string() + "' is empty");
    mi = m.values(m.values.rows() - 1, Eigen::Index(it - m.names.begin()));
  }
  const AnalysisWindow window =
      req.window ? *req.window : AnalysisWindow{table.times[table.times.size() / 2], table.times.back()};
  try {
    return analyze(table, catalog_from_spec(req.catalog), window, req.thresholds, mi);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
}

}  // namespace qsync
