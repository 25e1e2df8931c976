#include "qsync/lindblad.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qsync {

CVector vectorize(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix unvectorize(const CVector& v, Eigen::Index dim) {
  if (v.size() != dim * dim) throw std::invalid_argument("unvectorize: size is not dim^2");
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

CMatrix dense_liouvillian(const ModelSpec& model, Eigen::Index oracle_cap) {
  const Eigen::Index d = model.layout.total_dim();
  if (d > oracle_cap)
    throw std::invalid_argument("dense_liouvillian: dimension " + std::to_string(d) + " exceeds oracle cap " +
                                std::to_string(oracle_cap));
  const CMatrix id = CMatrix::Identity(d, d);
  const CMatrix& h = model.hamiltonian.matrix();
  const cplx i(0.0, 1.0);
  CMatrix lv = -i * (CMatrix(Eigen::kroneckerProduct(id, h)) - CMatrix(Eigen::kroneckerProduct(h.transpose(), id)));
  for (const auto& ds : model.dissipators) {
    const CMatrix& l = ds.jump.matrix();
    const CMatrix ldl = l.adjoint() * l;
    lv += ds.rate * (2.0 * CMatrix(Eigen::kroneckerProduct(l.conjugate(), l)) -
                     CMatrix(Eigen::kroneckerProduct(id, ldl)) -
                     CMatrix(Eigen::kroneckerProduct(ldl.transpose(), id)));
  }
  return lv;
}

DenseOracle::DenseOracle(const ModelSpec& model, Eigen::Index oracle_cap)
    : dim_(model.layout.total_dim()), liouvillian_(dense_liouvillian(model, oracle_cap)) {}

CMatrix DenseOracle::propagator(double t) const {
  return CMatrix(liouvillian_ * cplx(t)).exp();
}

CMatrix DenseOracle::state_at(const DensityMatrix& rho0, double t) const {
  return unvectorize(propagator(t) * vectorize(rho0.matrix()), dim_);
}

std::vector<CMatrix> DenseOracle::states_on_grid(const DensityMatrix& rho0, double dt, std::size_t count) const {
  std::vector<CMatrix> out;
  out.reserve(count);
  if (count == 0) return out;
  const CMatrix step = propagator(dt);
  CVector v = vectorize(rho0.matrix());
  out.push_back(rho0.matrix());
  for (std::size_t k = 1; k < count; ++k) {
    v = step * v;
    out.push_back(unvectorize(v, dim_));
  }
  return out;
}

}  // namespace qsync
