#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "qsync/models.hpp"
#include "qsync/syncmeter.hpp"

using namespace qsync;

namespace {

CVector fock(int n, int k) {
  CVector v = CVector::Zero(n);
  v(k) = 1.0;
  return v;
}

void check_hermitian_and_unique(const ModelSpec& m) {
  CHECK(hermiticity_error(m.hamiltonian.matrix()) <= 1e-12);
  std::set<std::string> names;
  for (const auto& o : m.observables) {
    CHECK(o.op.is_hermitian());
    CHECK(names.insert(o.name).second);
  }
  CHECK_NOTHROW(m.validate());
}

}  // namespace

TEST_CASE("parameter validation") {
  CavityQubitParams c;
  c.Nc = 2;
  CHECK_THROWS_AS(build_cavity_qubit(c), std::invalid_argument);
  c = {};
  c.g0 = -1.0;
  CHECK_THROWS_AS(build_cavity_qubit(c), std::invalid_argument);
  ReducedQubitParams r;
  r.gamma_eff = 0.0;
  CHECK_THROWS_AS(build_reduced_qubit(r), std::invalid_argument);
  VdpParams v;
  v.N = 5;
  CHECK_THROWS_AS(build_vdp(v), std::invalid_argument);
  v = {};
  v.kappa1 = -1.0;
  CHECK_THROWS_AS(build_vdp(v), std::invalid_argument);
}

TEST_CASE("every preset builds a valid model") {
  for (const auto& name : preset_names()) {
    const Preset p = preset(name);
    const ModelSpec m = build_model(p.params);
    check_hermitian_and_unique(m);
    const DensityMatrix rho = product_state(m.layout, p.initial_amplitudes);
    CHECK(std::abs(rho.matrix().trace() - cplx(1.0)) < 1e-12);
    CHECK(p.window.t0 < p.window.t1);
    CHECK(p.window.t1 <= p.t_end);
  }
  CHECK_THROWS_AS(preset("fig9"), std::invalid_argument);
}

TEST_CASE("cavity-qubit layout, observables and dissipators") {
  const ModelSpec m = build_cavity_qubit(std::get<CavityQubitParams>(preset("fig2a").params));
  CHECK(m.layout.total_dim() == 64);
  CHECK(m.layout.factor(0).label == "q1");
  CHECK(m.layout.factor(3).label == "c2");
  CHECK(m.dissipators.size() == 2);
  CHECK(m.observables.size() == 6);
  CHECK(m.observables[0].name == "sx_1");
  CHECK(m.observables[5].name == "sz_2");
}

TEST_CASE("uncoupled cavity-qubit Hamiltonian is diagonal with the expected spectrum") {
  CavityQubitParams p;
  p.delta1 = 1.3;
  p.delta2 = -0.4;
  p.deltaq1 = 0.08;
  p.deltaq2 = 0.02;
  p.Nc = 3;
  const CMatrix h = build_cavity_qubit(p).hamiltonian.matrix();
  CHECK((h - CMatrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
  // index = ((s1 * 2 + s2) * Nc + n1) * Nc + n2, s = 0 for |g>
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2)
      for (int n1 = 0; n1 < 3; ++n1)
        for (int n2 = 0; n2 < 3; ++n2) {
          const double expected = p.delta1 * n1 + p.delta2 * n2 + p.deltaq1 / 2 * (2 * s1 - 1) + p.deltaq2 / 2 * (2 * s2 - 1);
          const int idx = ((s1 * 2 + s2) * 3 + n1) * 3 + n2;
          CHECK(h(idx, idx).real() == doctest::Approx(expected).epsilon(1e-14));
        }
}

TEST_CASE("hopping quadratic form has eigenvalues delta +- J") {
  for (const auto& name : {"fig2a", "fig2b"}) {
    const auto p = std::get<CavityQubitParams>(preset(name).params);
    const Eigen::Matrix2d q = cavity_quadratic_form(p);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(q);
    const double lo = std::min(p.delta1 + p.J, p.delta1 - p.J), hi = std::max(p.delta1 + p.J, p.delta1 - p.J);
    CHECK(std::abs(es.eigenvalues()(0) - lo) <= 1e-12);
    CHECK(std::abs(es.eigenvalues()(1) - hi) <= 1e-12);
  }
}

TEST_CASE("fig2 preset parameters") {
  const auto a = std::get<CavityQubitParams>(preset("fig2a").params);
  CHECK(a.J == -10.0);
  CHECK(a.g0 == 0.5);
  CHECK(a.delta1 == -a.J);
  CHECK(a.delta2 == -a.J);
  CHECK(a.deltaq1 == 0.0);
  CHECK(a.Omega == 5e-4);
  const auto b = std::get<CavityQubitParams>(preset("fig2b").params);
  CHECK(b.Omega == 0.0);
  CHECK(b.J == a.J);
  const auto c = std::get<CavityQubitParams>(preset("fig2c").params);
  CHECK(c.delta2 == doctest::Approx(-2.25 * c.J));
  CHECK(c.deltaq1 == 0.08);
  CHECK(c.deltaq2 == 0.02);
  CHECK(c.Omega == 1e-3);
  // effective collective rate g0^2 / kappa
  CHECK(a.g0 * a.g0 / a.kappa == doctest::Approx(ReducedQubitParams{}.gamma_eff));
}

TEST_CASE("fig3 preset") {
  const Preset p = preset("fig3");
  const auto v = std::get<VdpParams>(p.params);
  CHECK(v.kappa1 == 2.0 * v.omega1);
  CHECK(v.kappa2 == 2.0 * v.omega1);
  CHECK(v.omega2 == v.omega1);
  CHECK(v.J == 0.5 * v.omega1);
  CHECK(v.Omega1 == 0.001);
  CHECK(v.Omega2 == 0.001);
  const ModelSpec m = build_vdp(v);
  CHECK(m.dissipators.size() == 4);
  CHECK(m.reference_unit == "omega1");
  const DensityMatrix rho = product_state(m.layout, p.initial_amplitudes);
  for (const auto& o : m.observables) {
    if (o.name == "n_1") CHECK(expectation(rho, o.op).real() == doctest::Approx(0.75).epsilon(1e-12));
    if (o.name == "n_2") CHECK(expectation(rho, o.op).real() == doctest::Approx(0.95).epsilon(1e-12));
  }
}

TEST_CASE("reduced model: dimension, dissipator and dark singlet") {
  ReducedQubitParams p;
  const ModelSpec m = build_reduced_qubit(p);
  CHECK(m.layout.total_dim() == 4);
  CHECK(m.dissipators.size() == 1);
  check_hermitian_and_unique(m);

  CVector singlet = CVector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  CHECK((m.dissipators[0].jump.matrix() * singlet).norm() < 1e-15);

  const Operator proj(m.layout, singlet * singlet.adjoint());
  const DensityMatrix rho0 = product_state(m.layout, {fock(2, 1), fock(2, 0)});
  std::vector<double> pop;
  evolve(m, rho0, 30.0, 1.0, {}, [&](double, const DensityMatrix& r) { pop.push_back(expectation(r, proj).real()); });
  for (double x : pop) CHECK(x == doctest::Approx(0.5).epsilon(1e-9));

  p.collective = CollectiveChannel::antisymmetric;
  CHECK((build_reduced_qubit(p).dissipators[0].jump.matrix() * singlet).norm() > 0.5);
}

TEST_CASE("vdP without coupling or gain keeps the vacuum") {
  VdpParams p;
  p.kappa1 = p.kappa2 = 2.0;
  p.N = 8;
  const ModelSpec m = build_vdp(p);
  const Trajectory t = evolve(m, product_state(m.layout, {fock(8, 0), fock(8, 0)}), 5.0, 0.1);
  for (Eigen::Index j = 0; j < t.values.cols(); ++j)
    CHECK((t.values.col(j).array() - t.values(0, j)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("vdP gain-only photon growth") {
  VdpParams p;
  p.Omega1 = 0.3;
  p.N = 14;
  const ModelSpec m = build_vdp(p);
  const DensityMatrix vac = product_state(m.layout, {fock(14, 0), fock(14, 0)});
  const Operator n1 = embed(Operator(SpaceLayout::single(14, "m", FactorKind::boson),
                                     destroy(14).matrix().adjoint() * destroy(14).matrix()),
                            m.layout, 0);
  // d<n>/dt = 2 Omega (<n> + 1)
  CHECK(expectation(DensityMatrix(m.layout, rhs(m, vac), DensityMatrix::Unchecked{}), n1).real() ==
        doctest::Approx(2.0 * p.Omega1).epsilon(1e-12));
  const Trajectory t = evolve(m, vac, 0.5, 0.05);
  const Eigen::VectorXd n = t.series("n_1");
  for (std::size_t k = 0; k < t.times.size(); ++k)
    CHECK(std::abs(n(Eigen::Index(k)) - std::expm1(2.0 * p.Omega1 * t.times[k])) < 1e-7);
}

TEST_CASE("catalogs") {
  const auto pauli = pauli_catalog();
  CHECK(pauli.size() == 3);
  const auto vdp = vdp_moment_catalog(12);
  CHECK(vdp.size() == 6);
  for (const auto* cat : {&pauli, &vdp}) {
    std::vector<Operator> ops;
    for (const auto& o : *cat) {
      CHECK(o.op.is_hermitian());
      ops.push_back(o.op);
    }
    CHECK(independent_subset(ops).size() == ops.size());
  }
}

TEST_CASE("product_state") {
  const SpaceLayout l({{2, "q", FactorKind::spin}, {4, "m", FactorKind::boson}});
  CVector m(2);
  m << 0.6, 0.8;
  const DensityMatrix rho = product_state(l, {fock(2, 1), m});
  CHECK(rho.matrix()(5, 5).real() == doctest::Approx(0.64));
  CHECK_THROWS_AS(product_state(l, {fock(2, 1)}), std::invalid_argument);
  CVector bad(2);
  bad << 0.6, 0.6;
  CHECK_THROWS_AS(product_state(l, {fock(2, 1), bad}), std::invalid_argument);
  CHECK_THROWS_AS(product_state(l, {fock(3, 1), m}), std::invalid_argument);
}
