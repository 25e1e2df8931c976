#include "qsync/syncmeter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qsync {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_phase(double x) {
  double r = std::remainder(x, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

struct WindowData {
  Eigen::VectorXd y;
  double t_first = 0.0;
  double dt = 0.0;
};

WindowData extract_window(std::span<const double> times, std::span<const double> values, AnalysisWindow w,
                          int min_samples) {
  if (times.size() != values.size()) throw std::invalid_argument("fit_oscillation: times and values differ in length");
  if (!(w.t1 > w.t0)) throw std::invalid_argument("fit_oscillation: window end must exceed window start");
  const double slack = 1e-9 * std::max({1.0, std::abs(w.t0), std::abs(w.t1)});
  std::size_t first = times.size(), last = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= w.t0 - slack && times[i] <= w.t1 + slack) {
      first = std::min(first, i);
      last = i;
    }
  }
  const std::size_t count = first < times.size() ? last - first + 1 : 0;
  if (count < std::size_t(min_samples))
    throw std::invalid_argument("fit_oscillation: window holds " + std::to_string(count) + " samples, need " +
                                std::to_string(min_samples));
  WindowData out;
  out.t_first = times[first];
  out.dt = (times[last] - times[first]) / double(count - 1);
  if (!(out.dt > 0.0)) throw std::invalid_argument("fit_oscillation: times must be increasing");
  out.y.resize(Eigen::Index(count));
  for (std::size_t k = 0; k < count; ++k) {
    const double expected = out.t_first + double(k) * out.dt;
    if (std::abs(times[first + k] - expected) > 1e-6 * out.dt)
      throw std::invalid_argument("fit_oscillation: sample grid is not uniform");
    out.y(Eigen::Index(k)) = values[first + k];
  }
  return out;
}

// Variable-projection Levenberg-Marquardt on (frequency, decay) of one mode,
// with the remaining shapes fixed and all amplitudes re-solved linearly.
std::vector<Mode> refine_mode(const Eigen::VectorXd& y, double dt, std::vector<Mode> shapes, std::size_t idx,
                              double span, double rel_tol) {
  auto residual = [&](const Eigen::Vector2d& th) {
    std::vector<Mode> s = shapes;
    s[idx].frequency = th(0);
    s[idx].decay = th(1);
    return Eigen::VectorXd(fit_amplitudes(y, dt, s).fitted - y);
  };

  Eigen::Vector2d th(shapes[idx].frequency, shapes[idx].decay);
  const double floor = 1.0 / span;
  Eigen::VectorXd r = residual(th);
  double cost = r.squaredNorm();
  double mu = -1.0;

  for (int iter = 0; iter < 60; ++iter) {
    Eigen::MatrixXd jac(r.size(), 2);
    for (int i = 0; i < 2; ++i) {
      const double h = 1e-6 * std::max(std::abs(th(i)), floor);
      Eigen::Vector2d tp = th, tm = th;
      tp(i) += h;
      tm(i) -= h;
      jac.col(i) = (residual(tp) - residual(tm)) / (2.0 * h);
    }
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d g = jac.transpose() * r;
    Eigen::Vector2d diag = jtj.diagonal().cwiseMax(1e-300);
    if (mu < 0.0) mu = 1e-3 * diag.maxCoeff();

    bool accepted = false;
    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::Matrix2d a = jtj;
      a.diagonal() += mu * diag;
      step = a.ldlt().solve(-g);
      Eigen::Vector2d cand = th + step;
      if (cand(0) <= 0.0 || !cand.allFinite()) {
        mu *= 4.0;
        continue;
      }
      const Eigen::VectorXd rc = residual(cand);
      const double cc = rc.squaredNorm();
      if (std::isfinite(cc) && cc <= cost) {
        th = cand;
        r = rc;
        cost = cc;
        mu = std::max(mu / 3.0, 1e-300);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) break;
    if (std::abs(step(0)) <= rel_tol * std::max(std::abs(th(0)), floor) &&
        std::abs(step(1)) <= rel_tol * std::max(std::abs(th(1)), floor))
      break;
  }
  shapes[idx].frequency = th(0);
  shapes[idx].decay = th(1);
  return shapes;
}

std::string fmt(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

OscillationFit fit_oscillation(std::span<const double> times, std::span<const double> values, AnalysisWindow window,
                               const FitSettings& settings) {
  const WindowData w = extract_window(times, values, window, settings.min_samples);
  const Eigen::Index n = w.y.size();
  const double span = double(n - 1) * w.dt;

  OscillationFit fit;
  fit.t_ref = w.t_first;
  fit.window_length = span;
  fit.samples = int(n);
  fit.signal_scale = w.y.cwiseAbs().maxCoeff();

  if (!w.y.allFinite()) {
    fit.diagnostic = "non-finite samples in window";
    return fit;
  }

  Decomposition dec = pencil_decompose(w.y, w.dt, settings.pencil);
  fit.model_order = dec.order;

  const double nyquist = kPi / w.dt;
  const double min_freq = 2.0 * kPi * settings.min_cycles / span;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < dec.modes.size(); ++i) {
    const Mode& m = dec.modes[i];
    if (!m.oscillatory() || m.frequency >= 0.8 * nyquist || m.frequency < min_freq) continue;
    if (!best || m.rms > dec.modes[*best].rms) best = i;
  }

  if (!best) {
    fit.offset = dec.fitted.mean();
    fit.residual_rms = dec.residual_rms;
    fit.diagnostic = "no oscillatory component with at least min_cycles periods in the window";
    return fit;
  }

  std::vector<Mode> shapes = refine_mode(w.y, w.dt, dec.modes, *best, span, settings.refine_tol);
  dec = fit_amplitudes(w.y, w.dt, shapes);
  const Mode& m = dec.modes[*best];
  if (!dec.fitted.allFinite() || !std::isfinite(m.amplitude)) {
    fit.diagnostic = "fit diverged";
    return fit;
  }

  Eigen::VectorXd dominant(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double tau = double(k) * w.dt;
    dominant(k) = m.amplitude * std::exp(-m.decay * tau) * std::cos(m.frequency * tau + m.phase);
  }
  fit.frequency = m.frequency;
  fit.decay = m.decay;
  fit.amplitude = m.amplitude;
  fit.phase = wrap_phase(m.phase);
  fit.offset = (dec.fitted - dominant).mean();
  fit.residual_rms = dec.residual_rms;

  std::vector<std::string> fails;
  if (!(fit.amplitude >= settings.amp_min * fit.signal_scale) || fit.amplitude == 0.0) fails.push_back("amplitude below amp_min");
  if (!(fit.residual_rms <= settings.fit_tol * fit.amplitude)) fails.push_back("residual above fit_tol");
  if (fit.frequency * span < 2.0 * kPi * settings.min_cycles) fails.push_back("fewer than min_cycles periods");
  if (fit.decay > settings.max_damping_ratio * fit.frequency) fails.push_back("overdamped");
  fit.oscillating = fails.empty();
  for (std::size_t i = 0; i < fails.size(); ++i) fit.diagnostic += (i ? "; " : "") + fails[i];
  return fit;
}

std::string_view to_string(PhaseClass c) {
  switch (c) {
    case PhaseClass::in_phase: return "in_phase";
    case PhaseClass::anti_phase: return "anti_phase";
    default: return "phase_locked_other";
  }
}

PairVerdict classify_pair(const OscillationFit& a, const OscillationFit& b, const PairThresholds& th) {
  PairVerdict v;
  const double wmax = std::max(a.frequency, b.frequency);
  const double dw = std::abs(a.frequency - b.frequency);
  v.freq_mismatch = wmax > 0.0 ? dw / wmax : 0.0;

  const double span = std::min(a.window_length, b.window_length);
  const bool resolved_apart = !(span > 0.0) || dw > th.freq_resolution * 2.0 * kPi / span;
  const bool locked = v.freq_mismatch <= th.tol_freq || !resolved_apart;
  v.synced = a.oscillating && b.oscillating && locked;

  const double t_ref = std::max(a.t_ref, b.t_ref);
  const double pa = a.phase + a.frequency * (t_ref - a.t_ref);
  const double pb = b.phase + b.frequency * (t_ref - b.t_ref);
  v.phase_diff = wrap_phase(pa - pb);
  if (std::abs(v.phase_diff) <= th.tol_phase)
    v.phase_class = PhaseClass::in_phase;
  else if (std::abs(std::abs(v.phase_diff) - kPi) <= th.tol_phase)
    v.phase_class = PhaseClass::anti_phase;
  else
    v.phase_class = PhaseClass::phase_locked_other;

  v.amplitude_ratio = a.amplitude > 0.0 ? b.amplitude / a.amplitude : 0.0;
  return v;
}

Catalog catalog_from_spec(std::string_view spec) {
  Catalog c;
  c.spec = std::string(spec);
  if (spec == "pauli") {
    c.dim = 2;
    c.ops = pauli_catalog();
    return c;
  }
  constexpr std::string_view vdp = "vdp_moments";
  if (spec.substr(0, vdp.size()) == vdp) {
    int n = 12;
    std::string_view rest = spec.substr(vdp.size());
    if (!rest.empty()) {
      if (rest.front() != ':') throw std::invalid_argument("unknown catalog '" + std::string(spec) + "'");
      rest.remove_prefix(1);
      auto res = std::from_chars(rest.data(), rest.data() + rest.size(), n);
      if (res.ec != std::errc() || res.ptr != rest.data() + rest.size() || n < 2)
        throw std::invalid_argument("bad truncation in catalog '" + std::string(spec) + "'");
    }
    c.spec = std::string(vdp) + ":" + std::to_string(n);
    c.dim = n;
    c.ops = vdp_moment_catalog(n);
    return c;
  }
  throw std::invalid_argument("unknown catalog '" + std::string(spec) + "'");
}

Quantumness degree_of_quantumness(std::span<const Operator> s) {
  Quantumness q;
  if (s.empty()) return q;
  const Eigen::Index d = s.front().dim();
  std::vector<double> scale(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].dim() != d) throw std::invalid_argument("degree_of_quantumness: operators differ in dimension");
    scale[i] = max_abs(s[i].matrix());
    if (hermiticity_error(s[i].matrix()) > 1e-10 * std::max(scale[i], 1.0))
      throw std::invalid_argument("degree_of_quantumness: operators must be Hermitian");
  }
  q.chi = int(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    int count = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const CMatrix& a = s[k].matrix();
      const CMatrix& b = s[i].matrix();
      if (max_abs(a * b - b * a) <= kCommuteTol * scale[k] * scale[i]) ++count;
    }
    q.c = std::max(q.c, count);
  }
  q.xi = q.chi - q.c;
  const Eigen::Index bound = d * d - d;
  if (q.xi < 0 || q.xi > bound)
    throw std::logic_error("degree_of_quantumness: xi = " + std::to_string(q.xi) + " outside [0, " +
                           std::to_string(bound) + "]");
  return q;
}

std::vector<std::size_t> independent_subset(std::span<const Operator> ops, double rank_tol) {
  std::vector<std::size_t> kept;
  std::vector<CMatrix> normed;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const double norm = ops[i].matrix().norm();
    if (!(norm > 0.0)) continue;
    CMatrix cand = ops[i].matrix() / norm;
    if (!normed.empty() && cand.rows() != normed.front().rows())
      throw std::invalid_argument("independent_subset: operators differ in dimension");
    const Eigen::Index k = Eigen::Index(normed.size());
    CMatrix gram(k + 1, k + 1);
    for (Eigen::Index r = 0; r <= k; ++r)
      for (Eigen::Index c = 0; c <= k; ++c) {
        const CMatrix& a = r < k ? normed[std::size_t(r)] : cand;
        const CMatrix& b = c < k ? normed[std::size_t(c)] : cand;
        gram(r, c) = hs_inner(a, b);
      }
    if (hermitian_eigenvalues(gram).minCoeff() > rank_tol) {
      kept.push_back(i);
      normed.push_back(std::move(cand));
    }
  }
  return kept;
}

SeriesTable table_from(const Trajectory& t) { return {t.times, t.names, t.values}; }

SyncReport analyze(const SeriesTable& table, const Catalog& catalog, AnalysisWindow window,
                   const SyncThresholds& thresholds, std::optional<double> mutual_info_final) {
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < table.names.size(); ++i)
      if (table.names[i] == name) return Eigen::Index(i);
    throw std::invalid_argument("analyze: trajectory has no column '" + name + "'");
  };
  if (table.values.rows() != Eigen::Index(table.times.size()))
    throw std::invalid_argument("analyze: value rows do not match the time grid");

  SyncReport rep;
  rep.catalog = catalog.spec;
  rep.window = window;
  rep.subsystem_dim = catalog.dim;
  rep.mutual_info_final = mutual_info_final;
  rep.thresholds = thresholds;

  std::vector<Operator> synced_ops;
  for (const auto& [name, op] : catalog.ops) {
    const Eigen::Index c1 = column(name + "_1");
    const Eigen::Index c2 = column(name + "_2");
    const Eigen::VectorXd y1 = table.values.col(c1);
    const Eigen::VectorXd y2 = table.values.col(c2);
    PairReport pr;
    pr.name = name;
    pr.first = fit_oscillation(table.times, std::span<const double>(y1.data(), std::size_t(y1.size())), window,
                               thresholds.fit);
    pr.second = fit_oscillation(table.times, std::span<const double>(y2.data(), std::size_t(y2.size())), window,
                                thresholds.fit);
    pr.verdict = classify_pair(pr.first, pr.second, thresholds.pair);
    if (pr.verdict.synced) {
      rep.synced.push_back(name);
      synced_ops.push_back(op);
    }
    rep.pairs.push_back(std::move(pr));
  }
  const auto keep = independent_subset(synced_ops);
  std::vector<Operator> s;
  for (std::size_t i : keep) {
    rep.S.push_back(rep.synced[i]);
    s.push_back(synced_ops[i]);
  }
  rep.q = degree_of_quantumness(s);

  const auto& f = thresholds.fit;
  const auto& p = thresholds.pair;
  rep.notes["fit_model"] =
      "dominant damped mode of a matrix-pencil decomposition of the window; frequency and decay refined by "
      "variable projection to relative step " + fmt(f.refine_tol);
  rep.notes["oscillating"] = "amplitude >= " + fmt(f.amp_min) + " * max|y|, residual_rms <= " + fmt(f.fit_tol) +
                             " * amplitude, >= " + fmt(f.min_cycles) + " periods, decay <= " +
                             fmt(f.max_damping_ratio) + " * frequency";
  rep.notes["synced"] = "both oscillating and (relative frequency mismatch <= " + fmt(p.tol_freq) +
                        " or |dw| <= " + fmt(p.freq_resolution) + " * 2pi / window length)";
  rep.notes["phase_class"] = "phase difference at the window start; in_phase if |dphi| <= " + fmt(p.tol_phase) +
                             ", anti_phase if ||dphi| - pi| <= " + fmt(p.tol_phase);
  rep.notes["independence"] = "greedy Hilbert-Schmidt Gram rank filter, tolerance " + fmt(kRankTol);
  rep.notes["commutation"] = "max|[A,B]| <= " + fmt(kCommuteTol) + " * max|A| * max|B|";
  if (catalog.spec.rfind("vdp_moments", 0) == 0)
    rep.notes["chi"] = "lower bound: catalog truncated at polynomial order 2 per mode";
  return rep;
}

std::vector<std::string> synchronized_set(const Trajectory& t, const Catalog& catalog, AnalysisWindow window,
                                          const SyncThresholds& thresholds) {
  return analyze(table_from(t), catalog, window, thresholds).S;
}

double mutual_information(const DensityMatrix& rho, std::span<const std::size_t> part_a) {
  const std::size_t n = rho.layout().size();
  std::set<std::size_t> a(part_a.begin(), part_a.end());
  if (a.empty() || a.size() != part_a.size() || *a.rbegin() >= n || a.size() >= n)
    throw std::invalid_argument("mutual_information: invalid bipartition");
  std::vector<std::size_t> va(a.begin(), a.end()), vb;
  for (std::size_t s = 0; s < n; ++s)
    if (!a.count(s)) vb.push_back(s);
  return von_neumann_entropy(partial_trace(rho, va)) + von_neumann_entropy(partial_trace(rho, vb)) -
         von_neumann_entropy(rho);
}

double mari_measure(const DensityMatrix& rho) {
  const SpaceLayout& l = rho.layout();
  if (l.size() != 2 || l.factor(0).kind != FactorKind::boson || l.factor(1).kind != FactorKind::boson)
    throw std::invalid_argument("mari_measure: state must live on two bosonic factors");
  const double r = 1.0 / std::sqrt(2.0);
  const Operator xm = cplx(r) * (embed(position(l.factor(0).dim), l, 0) - embed(position(l.factor(1).dim), l, 1));
  const Operator pm = cplx(r) * (embed(momentum(l.factor(0).dim), l, 0) - embed(momentum(l.factor(1).dim), l, 1));
  return 1.0 / expectation(rho, xm * xm + pm * pm).real();
}

}  // namespace qsync
