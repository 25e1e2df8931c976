#include "qsync/models.hpp"

#include <cmath>
#include <stdexcept>

namespace qsync {

namespace {

constexpr cplx kI(0.0, 1.0);

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

Operator zero_operator(const SpaceLayout& layout) {
  const Eigen::Index d = layout.total_dim();
  return Operator(layout, CMatrix::Zero(d, d));
}

std::vector<NamedOperator> qubit_observables(const SpaceLayout& layout) {
  std::vector<NamedOperator> out;
  for (std::size_t q = 0; q < 2; ++q) {
    const std::string suffix = "_" + std::to_string(q + 1);
    for (const auto& [name, op] : pauli_catalog()) out.push_back({name + suffix, embed(op, layout, q)});
  }
  return out;
}

}  // namespace

void CavityQubitParams::validate() const {
  require(finite_all({delta1, delta2, deltaq1, deltaq2, g0, J, Omega, kappa}),
          "CavityQubitParams: parameters must be finite");
  require(Nc >= 3, "CavityQubitParams: Nc must be >= 3");
  require(g0 >= 0.0, "CavityQubitParams: g0 must be >= 0");
  require(kappa >= 0.0, "CavityQubitParams: kappa must be >= 0");
}

void ReducedQubitParams::validate() const {
  require(finite_all({deltaq1, deltaq2, Omega, gamma_eff}), "ReducedQubitParams: parameters must be finite");
  require(gamma_eff > 0.0, "ReducedQubitParams: gamma_eff must be > 0");
}

void VdpParams::validate() const {
  require(finite_all({omega1, omega2, J, Omega1, Omega2, kappa1, kappa2}), "VdpParams: parameters must be finite");
  require(Omega1 >= 0.0 && Omega2 >= 0.0 && kappa1 >= 0.0 && kappa2 >= 0.0, "VdpParams: rates must be >= 0");
  require(N >= 6, "VdpParams: N must be >= 6");
}

std::vector<NamedOperator> pauli_catalog() {
  return {{"sx", pauli_x()}, {"sy", pauli_y()}, {"sz", pauli_z()}};
}

std::vector<NamedOperator> vdp_moment_catalog(int n) {
  const Operator a = destroy(n);
  const Operator x = position(n);
  const Operator p = momentum(n);
  return {
      {"x", x},
      {"p", p},
      {"n", a.adjoint() * a},
      {"x2", x * x},
      {"p2", p * p},
      {"xp", cplx(0.5) * (x * p + p * x)},
  };
}

ModelSpec build_cavity_qubit(const CavityQubitParams& p) {
  p.validate();
  const SpaceLayout layout({{2, "q1", FactorKind::spin},
                            {2, "q2", FactorKind::spin},
                            {p.Nc, "c1", FactorKind::boson},
                            {p.Nc, "c2", FactorKind::boson}});
  const Operator a[2] = {embed(destroy(p.Nc), layout, 2), embed(destroy(p.Nc), layout, 3)};
  const Operator sm[2] = {embed(pauli_minus(), layout, 0), embed(pauli_minus(), layout, 1)};
  const Operator sz[2] = {embed(pauli_z(), layout, 0), embed(pauli_z(), layout, 1)};
  const double cav[2] = {p.delta1, p.delta2};
  const double qub[2] = {p.deltaq1, p.deltaq2};

  Operator h = zero_operator(layout);
  for (int j = 0; j < 2; ++j) {
    const double sign = (j == 0) ? -1.0 : 1.0;  // (-1)^j with j = 1, 2
    const Operator ad = a[j].adjoint();
    h += cplx(cav[j]) * (ad * a[j]);
    h += cplx(qub[j] / 2.0) * sz[j];
    h += (kI * sign * p.g0) * (ad * sm[j] - a[j] * sm[j].adjoint());
  }
  h += cplx(p.J) * (a[0].adjoint() * a[1] + a[0] * a[1].adjoint());
  h += cplx(p.Omega) * (sm[0].adjoint() + sm[0]);

  ModelSpec m;
  m.layout = layout;
  m.hamiltonian = h;
  m.dissipators = {{p.kappa, a[0]}, {p.kappa, a[1]}};
  m.observables = qubit_observables(layout);
  m.reference_rate = p.kappa > 0.0 ? p.kappa : 1.0;
  m.reference_unit = "kappa";
  m.validate();
  return m;
}

ModelSpec build_reduced_qubit(const ReducedQubitParams& p) {
  p.validate();
  const SpaceLayout layout({{2, "q1", FactorKind::spin}, {2, "q2", FactorKind::spin}});
  const Operator sm1 = embed(pauli_minus(), layout, 0);
  const Operator sm2 = embed(pauli_minus(), layout, 1);
  const double s = (p.collective == CollectiveChannel::symmetric) ? 1.0 : -1.0;
  const Operator collective = cplx(1.0 / std::sqrt(2.0)) * (sm1 + cplx(s) * sm2);

  Operator h = cplx(p.deltaq1 / 2.0) * embed(pauli_z(), layout, 0);
  h += cplx(p.deltaq2 / 2.0) * embed(pauli_z(), layout, 1);
  h += cplx(p.Omega) * embed(pauli_x(), layout, 0);

  ModelSpec m;
  m.layout = layout;
  m.hamiltonian = h;
  m.dissipators = {{p.gamma_eff, collective}};
  m.observables = qubit_observables(layout);
  m.reference_rate = 1.0;
  m.reference_unit = "kappa";
  m.validate();
  return m;
}

ModelSpec build_vdp(const VdpParams& p) {
  p.validate();
  const SpaceLayout layout({{p.N, "m1", FactorKind::boson}, {p.N, "m2", FactorKind::boson}});
  const Operator a1 = embed(destroy(p.N), layout, 0);
  const Operator a2 = embed(destroy(p.N), layout, 1);

  Operator h = cplx(p.omega1) * (a1.adjoint() * a1);
  h += cplx(p.omega2) * (a2.adjoint() * a2);
  h += (kI * p.J) * (a1.adjoint() * a2.adjoint() - a1 * a2);

  ModelSpec m;
  m.layout = layout;
  m.hamiltonian = h;
  m.dissipators = {{p.Omega1, a1.adjoint()}, {p.Omega2, a2.adjoint()}, {p.kappa1, a1 * a1}, {p.kappa2, a2 * a2}};

  const auto catalog = vdp_moment_catalog(p.N);
  for (std::size_t mode = 0; mode < 2; ++mode) {
    const std::string suffix = "_" + std::to_string(mode + 1);
    for (const auto& [name, op] : catalog) m.observables.push_back({name + suffix, embed(op, layout, mode)});
  }
  const Operator xm = cplx(1.0 / std::sqrt(2.0)) * (embed(position(p.N), layout, 0) - embed(position(p.N), layout, 1));
  const Operator pm = cplx(1.0 / std::sqrt(2.0)) * (embed(momentum(p.N), layout, 0) - embed(momentum(p.N), layout, 1));
  m.observables.push_back({"rel_quad_sq", xm * xm + pm * pm});
  m.reference_rate = p.omega1 != 0.0 ? std::abs(p.omega1) : 1.0;
  m.reference_unit = "omega1";
  m.validate();
  return m;
}

ModelSpec build_model(const ModelParams& p) {
  return std::visit(
      [](const auto& v) -> ModelSpec {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CavityQubitParams>)
          return build_cavity_qubit(v);
        else if constexpr (std::is_same_v<T, ReducedQubitParams>)
          return build_reduced_qubit(v);
        else
          return build_vdp(v);
      },
      p);
}

std::string_view model_kind(const ModelParams& p) {
  switch (p.index()) {
    case 0: return "cavity_qubit";
    case 1: return "reduced_qubit";
    default: return "vdp";
  }
}

Eigen::Matrix2d cavity_quadratic_form(const CavityQubitParams& p) {
  CavityQubitParams bare = p;
  bare.g0 = 0.0;
  bare.Omega = 0.0;
  const ModelSpec m = build_cavity_qubit(bare);
  const CMatrix& h = m.hamiltonian.matrix();

  // Both qubits in |g>, so the qubit energy is a constant offset removed via
  // the vacuum diagonal. Index of |g, g, n1, n2> is n1 * Nc + n2.
  const Eigen::Index nc = p.Nc;
  const Eigen::Index vac = 0;
  const Eigen::Index one[2] = {nc, 1};
  Eigen::Matrix2d out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double v = h(one[i], one[j]).real();
      if (i == j) v -= h(vac, vac).real();
      out(i, j) = v;
    }
  return out;
}

DensityMatrix product_state(const SpaceLayout& layout, const std::vector<CVector>& amplitudes) {
  require(amplitudes.size() == layout.size(), "product_state: need one amplitude vector per factor");
  CVector psi = CVector::Ones(1);
  for (std::size_t s = 0; s < layout.size(); ++s) {
    const int d = layout.factor(s).dim;
    const CVector& v = amplitudes[s];
    require(v.size() >= 1 && v.size() <= d,
            "product_state: amplitude list for '" + layout.factor(s).label + "' has the wrong length");
    CVector padded = CVector::Zero(d);
    padded.head(v.size()) = v;
    CVector next(psi.size() * d);
    for (Eigen::Index i = 0; i < psi.size(); ++i) next.segment(i * d, d) = psi(i) * padded;
    psi = std::move(next);
  }
  require(std::abs(psi.norm() - 1.0) <= 1e-6, "product_state: state is not normalized");
  psi.normalize();
  return DensityMatrix::pure(layout, psi);
}

namespace {

CVector amps(std::initializer_list<double> xs) {
  CVector v(Eigen::Index(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Preset fig2_base(std::string name, std::string description) {
  CavityQubitParams p;
  p.J = -10.0;
  p.g0 = 0.5;
  p.delta1 = -p.J;
  p.delta2 = -p.J;
  p.kappa = 1.0;
  p.Nc = 4;
  Preset out;
  out.name = std::move(name);
  out.description = std::move(description);
  out.params = p;
  out.initial_amplitudes = {amps({std::sqrt(0.9), std::sqrt(0.1)}), amps({std::sqrt(0.7), std::sqrt(0.3)}),
                            amps({1.0}), amps({1.0})};
  out.catalog = "pauli";
  return out;
}

}  // namespace

std::vector<std::string> preset_names() { return {"fig2a", "fig2b", "fig2c", "fig3"}; }

Preset preset(std::string_view name) {
  if (name == "fig2a") {
    Preset out = fig2_base("fig2a", "resonant cavities, weak drive on qubit 1");
    std::get<CavityQubitParams>(out.params).Omega = 5e-4;
    out.t_end = 6000.0;
    out.sample_dt = 5.0;
    out.window = {250.0, 6000.0};
    return out;
  }
  if (name == "fig2b") {
    Preset out = fig2_base("fig2b", "resonant cavities, no drive");
    out.t_end = 4000.0;
    out.sample_dt = 5.0;
    out.window = {250.0, 4000.0};
    return out;
  }
  if (name == "fig2c") {
    Preset out = fig2_base("fig2c", "detuned cavity 2 and qubits, drive on qubit 1");
    auto& p = std::get<CavityQubitParams>(out.params);
    p.delta2 = -2.25 * p.J;
    p.deltaq1 = 0.08;
    p.deltaq2 = 0.02;
    p.Omega = 1e-3;
    out.t_end = 1500.0;
    out.sample_dt = 2.0;
    out.window = {50.0, 1500.0};
    return out;
  }
  if (name == "fig3") {
    VdpParams p;
    p.omega1 = 1.0;
    p.omega2 = 1.0;
    p.J = 0.5;
    p.Omega1 = 0.001;
    p.Omega2 = 0.001;
    p.kappa1 = 2.0;
    p.kappa2 = 2.0;
    p.N = 12;
    Preset out;
    out.name = "fig3";
    out.description = "coupled quantum van der Pol oscillators, transient";
    out.params = p;
    out.initial_amplitudes = {amps({0.5, std::sqrt(0.75)}), amps({std::sqrt(0.05), std::sqrt(0.95)})};
    out.t_end = 20.0;
    out.sample_dt = 0.02;
    out.window = {2.0, 12.0};
    out.catalog = "vdp_moments";
    return out;
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

}  // namespace qsync
