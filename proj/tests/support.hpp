#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qsync/opalg.hpp"

namespace qsync::testing {

inline CMatrix random_complex(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

inline CMatrix random_hermitian(Eigen::Index d, std::mt19937_64& rng) {
  const CMatrix a = random_complex(d, d, rng);
  return (a + a.adjoint()) / 2.0;
}

/// Mixed state of the given rank drawn from the induced (Ginibre) measure.
inline DensityMatrix random_state(const SpaceLayout& layout, std::mt19937_64& rng, Eigen::Index rank = 0) {
  const Eigen::Index d = layout.total_dim();
  const CMatrix g = random_complex(d, rank > 0 ? rank : d, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = (rho + rho.adjoint()).eval() / 2.0;
  return DensityMatrix(layout, rho);
}

/// Generalized Gell-Mann basis of traceless Hermitians on C^d (d^2 - 1 elements):
/// symmetric, antisymmetric, then diagonal.
inline std::vector<Operator> gell_mann(int d) {
  const SpaceLayout l = SpaceLayout::single(d, "x", d == 2 ? FactorKind::spin : FactorKind::boson);
  std::vector<Operator> out;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      CMatrix s = CMatrix::Zero(d, d), a = CMatrix::Zero(d, d);
      s(j, k) = s(k, j) = 1.0;
      a(j, k) = cplx(0, -1);
      a(k, j) = cplx(0, 1);
      out.emplace_back(l, s);
      out.emplace_back(l, a);
    }
  for (int m = 1; m < d; ++m) {
    CMatrix z = CMatrix::Zero(d, d);
    for (int j = 0; j < m; ++j) z(j, j) = 1.0;
    z(m, m) = -double(m);
    out.emplace_back(l, z * std::sqrt(2.0 / (m * (m + 1.0))));
  }
  return out;
}

inline SpaceLayout qubits(int n) {
  std::vector<Factor> f;
  for (int i = 0; i < n; ++i) f.push_back({2, "q" + std::to_string(i + 1), FactorKind::spin});
  return SpaceLayout(f);
}

}  // namespace qsync::testing
