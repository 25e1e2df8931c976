#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qsync/lindblad.hpp"
#include "qsync/models.hpp"
#include "support.hpp"

using namespace qsync;
using qsync::testing::qubits;
using qsync::testing::random_state;

namespace {

ModelSpec single_qubit(double omega, double kappa) {
  ModelSpec m;
  m.layout = qubits(1);
  m.hamiltonian = cplx(omega) * pauli_x();
  if (kappa > 0) m.dissipators.push_back({kappa, pauli_minus()});
  m.observables = {{"sx", pauli_x()}, {"sy", pauli_y()}, {"sz", pauli_z()}};
  return m;
}

DensityMatrix ground() {
  CVector g = CVector::Zero(2);
  g(0) = 1.0;
  return DensityMatrix::pure(qubits(1), g);
}

DensityMatrix excited() {
  CVector e = CVector::Zero(2);
  e(1) = 1.0;
  return DensityMatrix::pure(qubits(1), e);
}

ModelSpec reduced(double omega, double dq1 = 0.0, double dq2 = 0.0) {
  ReducedQubitParams p;
  p.Omega = omega;
  p.deltaq1 = dq1;
  p.deltaq2 = dq2;
  return build_reduced_qubit(p);
}

DensityMatrix reduced_initial(const ModelSpec& m) {
  CVector a(2), b(2);
  a << std::sqrt(0.9), std::sqrt(0.1);
  b << std::sqrt(0.7), std::sqrt(0.3);
  return product_state(m.layout, {a, b});
}

}  // namespace

TEST_CASE("model validation") {
  ModelSpec m = single_qubit(1.0, 1.0);
  CHECK_NOTHROW(m.validate());
  m.dissipators[0].rate = -1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = single_qubit(1.0, 1.0);
  m.hamiltonian = pauli_plus();
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = single_qubit(1.0, 1.0);
  m.observables.push_back({"sx", pauli_x()});
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("rhs: single-qubit decay slope") {
  const double kappa = 0.7;
  const CMatrix d = rhs(single_qubit(0.0, kappa), excited());
  CHECK(d(1, 1).real() == doctest::Approx(-2.0 * kappa).epsilon(1e-14));
  CHECK(d(0, 0).real() == doctest::Approx(2.0 * kappa).epsilon(1e-14));
}

TEST_CASE("rhs: unitary part is -i[H, rho]") {
  std::mt19937_64 rng(1);
  const ModelSpec m = single_qubit(0.4, 0.0);
  const DensityMatrix rho = random_state(m.layout, rng);
  const CMatrix expected = cplx(0, -1) * commutator(m.hamiltonian, Operator(m.layout, rho.matrix())).matrix();
  CHECK((rhs(m, rho) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rhs is traceless and Hermitian; kernel agrees") {
  std::mt19937_64 rng(2);
  VdpParams vp;
  vp.J = 0.5;
  vp.Omega1 = 0.1;
  vp.Omega2 = 0.2;
  vp.kappa1 = 2.0;
  vp.kappa2 = 1.0;
  vp.N = 6;
  CavityQubitParams cp;
  cp.J = -2.0;
  cp.g0 = 0.5;
  cp.delta1 = 1.0;
  cp.Omega = 0.1;
  cp.Nc = 3;
  const ModelSpec models[] = {reduced(0.3, 0.1, -0.2), build_vdp(vp), build_cavity_qubit(cp)};
  for (const ModelSpec& m : models) {
    const LindbladKernel kernel(m);
    for (int trial = 0; trial < 5; ++trial) {
      const DensityMatrix rho = random_state(m.layout, rng);
      const CMatrix d = rhs(m, rho);
      CHECK(std::abs(d.trace()) <= 1e-12);
      CHECK(hermiticity_error(d) <= 1e-12);
      CMatrix k(d.rows(), d.cols());
      kernel.apply(rho.matrix(), k);
      CHECK((k - d).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("evolve: Rabi oscillation") {
  const double omega = 0.8;
  const Trajectory t = evolve(single_qubit(omega, 0.0), ground(), 10.0, 0.05);
  REQUIRE(t.times.size() == 201);
  double worst = 0.0;
  const Eigen::VectorXd sz = t.series("sz");
  for (std::size_t k = 0; k < t.times.size(); ++k)
    worst = std::max(worst, std::abs(sz(Eigen::Index(k)) + std::cos(2.0 * omega * t.times[k])));
  CHECK(worst < 1e-6);
}

TEST_CASE("evolve: exponential decay") {
  const double kappa = 0.5;
  const Trajectory t = evolve(single_qubit(0.0, kappa), excited(), 4.0, 0.1);
  const Eigen::VectorXd sz = t.series("sz");
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const double pe = std::exp(-2.0 * kappa * t.times[k]);
    CHECK(std::abs(sz(Eigen::Index(k)) - (2.0 * pe - 1.0)) < 1e-7);
  }
}

TEST_CASE("evolve: vacuum is a fixed point of the undriven vdP model") {
  VdpParams p;
  p.kappa1 = 2.0;
  p.kappa2 = 0.5;
  p.N = 6;
  const ModelSpec m = build_vdp(p);
  CVector vac = CVector::Zero(6);
  vac(0) = 1.0;
  const DensityMatrix rho0 = product_state(m.layout, {vac, vac});
  const Trajectory t = evolve(m, rho0, 5.0, 0.5);
  CHECK((t.final_state.matrix() - rho0.matrix()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("evolve: grid, diagnostics and observer") {
  const ModelSpec m = reduced(0.2);
  int calls = 0;
  const Trajectory t = evolve(m, reduced_initial(m), 3.0, 0.25, {}, [&](double, const DensityMatrix&) { ++calls; });
  CHECK(t.times.size() == 13);
  CHECK(calls == 13);
  CHECK(t.times.back() == doctest::Approx(3.0));
  for (const auto& d : t.diagnostics) {
    CHECK(d.trace_error < 1e-8);
    CHECK(d.min_eigenvalue >= -1e-8);
  }
  CHECK_THROWS_AS(evolve(m, reduced_initial(m), -1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(evolve(m, reduced_initial(m), 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(t.column("nope"), std::out_of_range);
}

TEST_CASE("evolve: truncation guard") {
  VdpParams p;
  p.Omega1 = 1.0;
  p.Omega2 = 1.0;
  p.N = 6;
  const ModelSpec m = build_vdp(p);
  CVector vac = CVector::Zero(6);
  vac(0) = 1.0;
  CHECK_THROWS_AS(evolve(m, product_state(m.layout, {vac, vac}), 20.0, 0.5), TruncationError);
}

TEST_CASE("evolve: step budget") {
  EvolveOptions o;
  o.max_steps = 3;
  const ModelSpec m = reduced(0.2);
  CHECK_THROWS_AS(evolve(m, reduced_initial(m), 50.0, 1.0, o), IntegrationError);
}

TEST_CASE("evolve: self-convergence under halved tolerances") {
  const ModelSpec m = reduced(0.3, 0.08, 0.02);
  const DensityMatrix rho0 = reduced_initial(m);
  EvolveOptions a, b;
  b.tol.rel = a.tol.rel / 2;
  b.tol.abs = a.tol.abs / 2;
  const Trajectory ta = evolve(m, rho0, 40.0, 0.5, a);
  const Trajectory tb = evolve(m, rho0, 40.0, 0.5, b);
  CHECK((ta.values - tb.values).cwiseAbs().maxCoeff() < 1e-6);
}

// Collective decay is not unital: purity dips, then recovers toward the
// partly pure steady state. The literal monotonicity check is kept and pinned
// as a known failure; the contraction that does hold is checked below.
TEST_CASE("evolve: purity non-increasing without drive" * doctest::should_fail()) {
  const ModelSpec m = reduced(0.0);
  std::vector<double> p;
  evolve(m, reduced_initial(m), 40.0, 0.5, {}, [&](double, const DensityMatrix& r) { p.push_back(purity(r)); });
  bool monotone = true;
  for (std::size_t k = 1; k < p.size(); ++k) monotone = monotone && p[k] <= p[k - 1] + 1e-9;
  CHECK(monotone);
}

TEST_CASE("evolve: trace distance between two runs is non-increasing") {
  std::mt19937_64 rng(21);
  const ModelSpec m = reduced(0.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<DensityMatrix> sa, sb;
    const auto keep = [](std::vector<DensityMatrix>& v) {
      return [&v](double, const DensityMatrix& r) { v.push_back(r); };
    };
    evolve(m, random_state(m.layout, rng), 30.0, 1.0, {}, keep(sa));
    evolve(m, random_state(m.layout, rng), 30.0, 1.0, {}, keep(sb));
    REQUIRE(sa.size() == 31);
    for (std::size_t k = 1; k < sa.size(); ++k)
      CHECK(trace_distance(sa[k], sb[k]) <= trace_distance(sa[k - 1], sb[k - 1]) + 1e-9);
  }
}

TEST_CASE("vectorization is column stacking") {
  CMatrix m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  const CVector v = vectorize(m);
  CHECK(v(1) == cplx(3.0));
  CHECK(v(2) == cplx(2.0));
  CHECK(unvectorize(v, 2) == m);
}

TEST_CASE("dense oracle basics") {
  const ModelSpec m = single_qubit(0.0, 1.0);
  const DenseOracle oracle(m);
  CHECK((oracle.propagator(0.0) - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);

  const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<CMatrix>(oracle.liouvillian()).eigenvalues();
  CHECK(ev.cwiseAbs().minCoeff() < 1e-12);
  CMatrix steady = CMatrix::Zero(2, 2);
  steady(0, 0) = 1.0;
  CHECK((oracle.liouvillian() * vectorize(steady)).norm() < 1e-15);

  CavityQubitParams cp;
  CHECK_THROWS_AS(dense_liouvillian(build_cavity_qubit(cp)), std::invalid_argument);
  CHECK_NOTHROW(dense_liouvillian(build_cavity_qubit(cp), 64));
}

TEST_CASE("dense Liouvillian agrees with rhs") {
  std::mt19937_64 rng(4);
  const ModelSpec m = reduced(0.3, 0.1, -0.05);
  const CMatrix L = dense_liouvillian(m);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix rho = random_state(m.layout, rng);
    const CMatrix a = unvectorize(L * vectorize(rho.matrix()), 4);
    CHECK((a - rhs(m, rho)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("evolve matches the dense oracle on the reduced model") {
  const ModelSpec m = reduced(0.3, 0.08, 0.02);
  const DensityMatrix rho0 = reduced_initial(m);
  const double t_end = 5.0 / 0.25;
  const Trajectory t = evolve(m, rho0, t_end, t_end / 10);
  const DenseOracle oracle(m);
  const auto states = oracle.states_on_grid(rho0, t_end / 10, 11);
  CHECK((states.back() - t.final_state.matrix()).cwiseAbs().maxCoeff() < 1e-6);
  for (std::size_t k = 0; k < states.size(); ++k) {
    const DensityMatrix s(m.layout, states[k], DensityMatrix::Unchecked{});
    for (std::size_t j = 0; j < m.observables.size(); ++j)
      CHECK(std::abs(expectation(s, m.observables[j].op).real() - t.values(Eigen::Index(k), Eigen::Index(j))) < 1e-6);
  }
  CHECK((oracle.state_at(rho0, t_end) - states.back()).cwiseAbs().maxCoeff() < 1e-10);
}
