#include "qsync/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace qsync {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* end = t.data() + t.size();
  auto res = std::from_chars(t.data(), end, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ConfigError("key '" + std::string(key) + "': '" + t + "' is not a finite number");
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  int v = 0;
  const char* end = t.data() + t.size();
  auto res = std::from_chars(t.data(), end, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != end)
    throw ConfigError("key '" + std::string(key) + "': '" + t + "' is not an integer");
  return v;
}

CVector parse_amplitudes(std::string_view key, std::string_view text) {
  const auto tokens = split(text, ',');
  CVector v(Eigen::Index(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto parts = split(tokens[i], ':');
    if (parts.size() == 1)
      v(Eigen::Index(i)) = cplx(parse_double(key, parts[0]), 0.0);
    else if (parts.size() == 2)
      v(Eigen::Index(i)) = cplx(parse_double(key, parts[0]), parse_double(key, parts[1]));
    else
      throw ConfigError("key '" + std::string(key) + "': bad amplitude '" + tokens[i] + "'");
  }
  return v;
}

std::string format_amplitudes(const CVector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v(i).real());
    if (v(i).imag() != 0.0) out += ":" + format_double(v(i).imag());
  }
  return out;
}

template <class P>
struct DoubleField {
  const char* name;
  double P::*ptr;
  bool required;
};

const std::vector<DoubleField<CavityQubitParams>>& cavity_fields() {
  static const std::vector<DoubleField<CavityQubitParams>> f = {
      {"delta1", &CavityQubitParams::delta1, true},   {"delta2", &CavityQubitParams::delta2, true},
      {"deltaq1", &CavityQubitParams::deltaq1, true}, {"deltaq2", &CavityQubitParams::deltaq2, true},
      {"g0", &CavityQubitParams::g0, true},           {"J", &CavityQubitParams::J, true},
      {"Omega", &CavityQubitParams::Omega, true},     {"kappa", &CavityQubitParams::kappa, false},
  };
  return f;
}

const std::vector<DoubleField<ReducedQubitParams>>& reduced_fields() {
  static const std::vector<DoubleField<ReducedQubitParams>> f = {
      {"deltaq1", &ReducedQubitParams::deltaq1, true},
      {"deltaq2", &ReducedQubitParams::deltaq2, true},
      {"Omega", &ReducedQubitParams::Omega, true},
      {"gamma_eff", &ReducedQubitParams::gamma_eff, true},
  };
  return f;
}

const std::vector<DoubleField<VdpParams>>& vdp_fields() {
  static const std::vector<DoubleField<VdpParams>> f = {
      {"omega1", &VdpParams::omega1, true}, {"omega2", &VdpParams::omega2, true},
      {"J", &VdpParams::J, true},           {"Omega1", &VdpParams::Omega1, true},
      {"Omega2", &VdpParams::Omega2, true}, {"kappa1", &VdpParams::kappa1, true},
      {"kappa2", &VdpParams::kappa2, true},
  };
  return f;
}

// Applies params.* keys to p; returns the names that were set.
template <class P>
std::set<std::string> apply_doubles(P& p, const std::vector<DoubleField<P>>& fields,
                                    const std::map<std::string, std::string>& params, std::set<std::string>& used) {
  std::set<std::string> set;
  for (const auto& f : fields) {
    auto it = params.find(f.name);
    if (it == params.end()) continue;
    p.*(f.ptr) = parse_double("params." + it->first, it->second);
    set.insert(f.name);
    used.insert(f.name);
  }
  return set;
}

template <class P>
void require_fields(const std::vector<DoubleField<P>>& fields, const std::set<std::string>& set) {
  for (const auto& f : fields)
    if (f.required && !set.count(f.name)) throw ConfigError("missing required key 'params." + std::string(f.name) + "'");
}

std::string default_catalog(const ModelParams& p) {
  if (const auto* v = std::get_if<VdpParams>(&p)) return "vdp_moments:" + std::to_string(v->N);
  return "pauli";
}

struct ThresholdField {
  const char* name;
  double* ptr;
  bool strictly_positive;
};

std::vector<ThresholdField> threshold_fields(SyncThresholds& t) {
  return {
      {"tol_freq", &t.pair.tol_freq, false},
      {"tol_phase", &t.pair.tol_phase, false},
      {"freq_resolution", &t.pair.freq_resolution, false},
      {"amp_min", &t.fit.amp_min, false},
      {"fit_tol", &t.fit.fit_tol, true},
      {"min_cycles", &t.fit.min_cycles, false},
      {"max_damping_ratio", &t.fit.max_damping_ratio, false},
  };
}

const std::set<std::string>& run_keys() {
  static const std::set<std::string> k = {"t_end", "sample_dt", "rel_tol", "abs_tol", "truncation_limit"};
  return k;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

AnalysisWindow parse_window(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw ConfigError("window '" + text + "' must look like T0:T1");
  AnalysisWindow w{parse_double("window", parts[0]), parse_double("window", parts[1])};
  if (!(w.t1 > w.t0) || w.t0 < 0.0) throw ConfigError("window '" + text + "' needs 0 <= T0 < T1");
  return w;
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues out;
  std::set<std::string> seen;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!section.empty()) key = section + "." + key;
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    out.emplace_back(std::move(key), value);
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_key_values(in, path.string());
}

ScenarioConfig scenario_from_preset(std::string_view name) {
  Preset p;
  try {
    p = preset(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  ScenarioConfig cfg;
  cfg.name = p.name;
  cfg.preset = p.name;
  cfg.params = p.params;
  cfg.initial_amplitudes = p.initial_amplitudes;
  cfg.initial_source = "preset:" + p.name;
  cfg.run.t_end = p.t_end;
  cfg.run.sample_dt = p.sample_dt;
  cfg.window = p.window;
  cfg.catalog = default_catalog(p.params);
  return cfg;
}

ScenarioConfig build_scenario(const KeyValues& kv) {
  std::map<std::string, std::string> top, params, initial, run, analysis;
  std::map<std::string, std::string> amplitudes;
  for (const auto& [key, value] : kv) {
    const auto dot = key.find('.');
    const std::string head = key.substr(0, dot);
    const std::string rest = dot == std::string::npos ? "" : key.substr(dot + 1);
    if (dot == std::string::npos && (key == "model" || key == "preset"))
      top[key] = value;
    else if (head == "params" && !rest.empty())
      params[rest] = value;
    else if (head == "initial" && rest == "preset")
      initial[rest] = value;
    else if (head == "initial" && rest.rfind("amplitudes.", 0) == 0 && rest.size() > 11)
      amplitudes[rest.substr(11)] = value;
    else if (head == "run" && run_keys().count(rest))
      run[rest] = value;
    else if (head == "analysis" && !rest.empty())
      analysis[rest] = value;
    else
      throw ConfigError("unknown key '" + key + "'");
  }

  ScenarioConfig cfg;
  const bool has_base = top.count("preset") > 0;
  if (has_base) {
    cfg = scenario_from_preset(top["preset"]);
    if (top.count("model") && top["model"] != model_kind(cfg.params))
      throw ConfigError("key 'model': '" + top["model"] + "' does not match preset '" + cfg.preset + "'");
  } else {
    if (!top.count("model")) throw ConfigError("missing required key 'model'");
    const std::string& m = top["model"];
    if (m == "cavity_qubit")
      cfg.params = CavityQubitParams{};
    else if (m == "reduced_qubit")
      cfg.params = ReducedQubitParams{};
    else if (m == "vdp")
      cfg.params = VdpParams{};
    else
      throw ConfigError("key 'model': unknown model '" + m + "'");
    cfg.name = "custom";
  }

  // params
  std::set<std::string> used;
  std::function<void()> require_params = [] {};
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CavityQubitParams>) {
          const auto set = apply_doubles(p, cavity_fields(), params, used);
          require_params = [set] { require_fields(cavity_fields(), set); };
          if (params.count("Nc")) p.Nc = parse_int("params.Nc", params["Nc"]), used.insert("Nc");
        } else if constexpr (std::is_same_v<P, ReducedQubitParams>) {
          const auto set = apply_doubles(p, reduced_fields(), params, used);
          require_params = [set] { require_fields(reduced_fields(), set); };
          if (params.count("collective")) {
            const std::string& c = params["collective"];
            if (c == "symmetric")
              p.collective = CollectiveChannel::symmetric;
            else if (c == "antisymmetric")
              p.collective = CollectiveChannel::antisymmetric;
            else
              throw ConfigError("key 'params.collective': expected symmetric or antisymmetric");
            used.insert("collective");
          }
        } else {
          const auto set = apply_doubles(p, vdp_fields(), params, used);
          require_params = [set] { require_fields(vdp_fields(), set); };
          if (params.count("N")) p.N = parse_int("params.N", params["N"]), used.insert("N");
        }
      },
      cfg.params);
  for (const auto& [k, v] : params)
    if (!used.count(k))
      throw ConfigError("unknown key 'params." + k + "' for model " + std::string(model_kind(cfg.params)));
  if (!has_base) require_params();

  ModelSpec model;
  try {
    model = build_model(cfg.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  // initial state
  if (initial.count("preset") && !amplitudes.empty())
    throw ConfigError("give either 'initial.preset' or 'initial.amplitudes.*', not both");
  if (initial.count("preset")) {
    cfg.initial_amplitudes = scenario_from_preset(initial["preset"]).initial_amplitudes;
    cfg.initial_source = "preset:" + initial["preset"];
  } else if (!amplitudes.empty()) {
    cfg.initial_amplitudes.clear();
    for (const auto& f : model.layout.factors()) {
      auto it = amplitudes.find(f.label);
      if (it == amplitudes.end()) throw ConfigError("missing required key 'initial.amplitudes." + f.label + "'");
      cfg.initial_amplitudes.push_back(parse_amplitudes("initial.amplitudes." + f.label, it->second));
      amplitudes.erase(it);
    }
    if (!amplitudes.empty())
      throw ConfigError("unknown key 'initial.amplitudes." + amplitudes.begin()->first + "'");
    cfg.initial_source = "explicit";
  } else if (!has_base) {
    throw ConfigError("missing required key 'initial.preset' or 'initial.amplitudes.<factor>'");
  }
  try {
    product_state(model.layout, cfg.initial_amplitudes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("initial state: ") + e.what());
  }

  // run
  for (const char* req : {"t_end", "sample_dt"})
    if (!has_base && !run.count(req)) throw ConfigError("missing required key 'run." + std::string(req) + "'");
  if (run.count("t_end")) cfg.run.t_end = parse_double("run.t_end", run["t_end"]);
  if (run.count("sample_dt")) cfg.run.sample_dt = parse_double("run.sample_dt", run["sample_dt"]);
  if (run.count("rel_tol")) cfg.run.tol.rel = parse_double("run.rel_tol", run["rel_tol"]);
  if (run.count("abs_tol")) cfg.run.tol.abs = parse_double("run.abs_tol", run["abs_tol"]);
  if (run.count("truncation_limit"))
    cfg.run.truncation_limit = parse_double("run.truncation_limit", run["truncation_limit"]);
  if (!(cfg.run.t_end > 0.0)) throw ConfigError("key 'run.t_end' must be > 0");
  if (!(cfg.run.sample_dt > 0.0) || cfg.run.sample_dt > cfg.run.t_end)
    throw ConfigError("key 'run.sample_dt' must be in (0, t_end]");
  if (!(cfg.run.tol.rel > 0.0) || !(cfg.run.tol.abs > 0.0))
    throw ConfigError("keys 'run.rel_tol' and 'run.abs_tol' must be > 0");
  if (!(cfg.run.truncation_limit > 0.0 && cfg.run.truncation_limit <= 1.0))
    throw ConfigError("key 'run.truncation_limit' must be in (0, 1]");

  // analysis
  if (!has_base) cfg.window = {cfg.run.t_end / 2.0, cfg.run.t_end};
  bool catalog_set = false;
  auto fields = threshold_fields(cfg.thresholds);
  for (const auto& [k, v] : analysis) {
    const std::string key = "analysis." + k;
    if (k == "window") {
      cfg.window = parse_window(v);
    } else if (k == "catalog") {
      try {
        cfg.catalog = catalog_from_spec(v).spec;
      } catch (const std::invalid_argument& e) {
        throw ConfigError("key '" + key + "': " + e.what());
      }
      catalog_set = true;
    } else {
      auto it = std::find_if(fields.begin(), fields.end(), [&](const ThresholdField& f) { return k == f.name; });
      if (it == fields.end()) throw ConfigError("unknown key '" + key + "'");
      const double x = parse_double(key, v);
      if (it->strictly_positive ? !(x > 0.0) : !(x >= 0.0))
        throw ConfigError("key '" + key + "' must be " + (it->strictly_positive ? "> 0" : ">= 0"));
      *it->ptr = x;
    }
  }
  if (!catalog_set) cfg.catalog = default_catalog(cfg.params);
  if (cfg.window.t1 > cfg.run.t_end * (1.0 + 1e-12))
    throw ConfigError("analysis window ends after run.t_end");
  return cfg;
}

KeyValues resolved_key_values(const ScenarioConfig& cfg) {
  KeyValues out;
  if (!cfg.preset.empty()) out.emplace_back("preset", cfg.preset);
  out.emplace_back("model", std::string(model_kind(cfg.params)));
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CavityQubitParams>) {
          for (const auto& f : cavity_fields()) out.emplace_back("params." + std::string(f.name), format_double(p.*(f.ptr)));
          out.emplace_back("params.Nc", std::to_string(p.Nc));
        } else if constexpr (std::is_same_v<P, ReducedQubitParams>) {
          for (const auto& f : reduced_fields()) out.emplace_back("params." + std::string(f.name), format_double(p.*(f.ptr)));
          out.emplace_back("params.collective",
                           p.collective == CollectiveChannel::symmetric ? "symmetric" : "antisymmetric");
        } else {
          for (const auto& f : vdp_fields()) out.emplace_back("params." + std::string(f.name), format_double(p.*(f.ptr)));
          out.emplace_back("params.N", std::to_string(p.N));
        }
      },
      cfg.params);
  const ModelSpec model = build_model(cfg.params);
  for (std::size_t s = 0; s < model.layout.size(); ++s)
    out.emplace_back("initial.amplitudes." + model.layout.factor(s).label, format_amplitudes(cfg.initial_amplitudes[s]));
  out.emplace_back("run.t_end", format_double(cfg.run.t_end));
  out.emplace_back("run.sample_dt", format_double(cfg.run.sample_dt));
  out.emplace_back("run.rel_tol", format_double(cfg.run.tol.rel));
  out.emplace_back("run.abs_tol", format_double(cfg.run.tol.abs));
  out.emplace_back("run.truncation_limit", format_double(cfg.run.truncation_limit));
  out.emplace_back("analysis.window", format_double(cfg.window.t0) + ":" + format_double(cfg.window.t1));
  out.emplace_back("analysis.catalog", cfg.catalog);
  SyncThresholds t = cfg.thresholds;
  for (const auto& f : threshold_fields(t)) out.emplace_back("analysis." + std::string(f.name), format_double(*f.ptr));
  return out;
}

SweepSpec build_sweep(const KeyValues& kv) {
  SweepSpec spec;
  std::set<std::string> axis_keys;
  for (const auto& [key, value] : kv) {
    if (key.rfind("sweep.", 0) != 0) {
      spec.base.emplace_back(key, value);
      continue;
    }
    const std::string rest = key.substr(6);
    if (rest == "max_points") {
      const int n = parse_int(key, value);
      if (n < 1) throw ConfigError("key 'sweep.max_points' must be >= 1");
      spec.max_points = std::size_t(n);
    } else if (rest == "jobs") {
      const int n = parse_int(key, value);
      if (n < 1) throw ConfigError("key 'sweep.jobs' must be >= 1");
      spec.jobs = unsigned(n);
    } else if (rest.rfind("axis.", 0) == 0 && rest.size() > 5) {
      SweepAxis axis{rest.substr(5), split(value, ',')};
      if (std::any_of(axis.values.begin(), axis.values.end(), [](const std::string& v) { return v.empty(); }))
        throw ConfigError("key '" + key + "': empty value in list");
      axis_keys.insert(axis.key);
      spec.axes.push_back(std::move(axis));
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (spec.axes.empty()) throw ConfigError("sweep needs at least one 'sweep.axis.<key>' entry");

  // Each axis key must be one the scenario accepts: try the first grid point.
  KeyValues trial;
  for (const auto& kvp : spec.base)
    if (!axis_keys.count(kvp.first)) trial.push_back(kvp);
  for (const auto& axis : spec.axes) trial.emplace_back(axis.key, axis.values.front());
  try {
    build_scenario(trial);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& axis : spec.axes)
      if (msg.find("unknown key '" + axis.key + "'") != std::string::npos)
        throw ConfigError("sweep axis '" + axis.key + "' is not a scenario key");
  }

  std::size_t points = 1;
  for (const auto& axis : spec.axes) {
    points *= axis.values.size();
    if (points > spec.max_points) break;  // stops before the product can overflow
  }
  if (points > spec.max_points)
    throw ConfigError("sweep grid has more than sweep.max_points = " + std::to_string(spec.max_points) + " points");
  return spec;
}

}  // namespace qsync
