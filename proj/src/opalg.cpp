#include "qsync/opalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qsync {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

// Labels are descriptive; compatibility is decided by the factor dimensions.
void require_same_layout(const SpaceLayout& a, const SpaceLayout& b, const char* where) {
  if (a.dims() != b.dims()) throw std::invalid_argument(std::string(where) + ": layout mismatch");
}

}  // namespace

// --- SpaceLayout ----------------------------------------------------------

SpaceLayout::SpaceLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::set<std::string> seen;
  total_ = 1;
  for (const auto& f : factors_) {
    require(f.dim >= 2, "SpaceLayout: every factor dimension must be >= 2");
    require(seen.insert(f.label).second, "SpaceLayout: factor labels must be unique");
    total_ *= f.dim;
  }
  if (factors_.empty()) total_ = 0;
}

SpaceLayout SpaceLayout::single(int dim, std::string label, FactorKind kind) {
  return SpaceLayout({Factor{dim, std::move(label), kind}});
}

const Factor& SpaceLayout::factor(std::size_t slot) const {
  if (slot >= factors_.size()) throw std::out_of_range("SpaceLayout: slot out of range");
  return factors_[slot];
}

std::vector<int> SpaceLayout::dims() const {
  std::vector<int> d;
  d.reserve(factors_.size());
  for (const auto& f : factors_) d.push_back(f.dim);
  return d;
}

std::optional<std::size_t> SpaceLayout::find(std::string_view label) const {
  for (std::size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].label == label) return i;
  return std::nullopt;
}

std::size_t SpaceLayout::slot(std::string_view label) const {
  auto s = find(label);
  if (!s) throw std::invalid_argument("SpaceLayout: no factor labelled '" + std::string(label) + "'");
  return *s;
}

SpaceLayout SpaceLayout::subset(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> sorted(keep.begin(), keep.end());
  std::sort(sorted.begin(), sorted.end());
  require(!sorted.empty(), "SpaceLayout::subset: empty slot set");
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "SpaceLayout::subset: duplicate slot");
  std::vector<Factor> out;
  for (auto s : sorted) out.push_back(factor(s));
  return SpaceLayout(std::move(out));
}

SpaceLayout SpaceLayout::concat(const SpaceLayout& other) const {
  std::vector<Factor> out = factors_;
  for (std::size_t i = 0; i < other.factors_.size(); ++i) {
    Factor f = other.factors_[i];
    auto clashes = [&](const std::string& l) {
      return std::any_of(out.begin(), out.end(), [&](const Factor& g) { return g.label == l; });
    };
    if (clashes(f.label)) {
      std::string base = f.label + "_" + std::to_string(out.size());
      std::string candidate = base;
      for (int k = 2; clashes(candidate); ++k) candidate = base + "_" + std::to_string(k);
      f.label = candidate;
    }
    out.push_back(std::move(f));
  }
  return SpaceLayout(std::move(out));
}

// --- Operator --------------------------------------------------------------

Operator::Operator(SpaceLayout layout, CMatrix matrix)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
  require(matrix_.rows() == matrix_.cols(), "Operator: matrix must be square");
  require(matrix_.rows() == layout_.total_dim(), "Operator: matrix dimension does not match layout");
  refresh_flag();
}

void Operator::refresh_flag() { hermitian_ = hermiticity_error(matrix_) <= kHermitianTol; }

Operator Operator::adjoint() const { return Operator(layout_, matrix_.adjoint()); }

Operator& Operator::operator+=(const Operator& o) {
  require_same_layout(layout_, o.layout_, "Operator +");
  matrix_ += o.matrix_;
  refresh_flag();
  return *this;
}

Operator& Operator::operator-=(const Operator& o) {
  require_same_layout(layout_, o.layout_, "Operator -");
  matrix_ -= o.matrix_;
  refresh_flag();
  return *this;
}

Operator& Operator::operator*=(cplx s) {
  matrix_ *= s;
  refresh_flag();
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_layout(a.layout_, b.layout_, "Operator *");
  return Operator(a.layout_, a.matrix_ * b.matrix_);
}

// --- DensityMatrix ---------------------------------------------------------

DensityMatrix::DensityMatrix(SpaceLayout layout, CMatrix matrix)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
  require(matrix_.rows() == matrix_.cols(), "DensityMatrix: matrix must be square");
  require(matrix_.rows() == layout_.total_dim(), "DensityMatrix: dimension does not match layout");
  require(std::abs(matrix_.trace() - cplx(1.0)) <= kTraceTol, "DensityMatrix: trace must be 1");
  require(hermiticity_error(matrix_) <= kStateHermitianTol, "DensityMatrix: matrix is not Hermitian");
  require(min_eigenvalue(matrix_) >= -kPositivityTol, "DensityMatrix: matrix is not positive");
}

DensityMatrix::DensityMatrix(SpaceLayout layout, CMatrix matrix, Unchecked)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
  require(matrix_.rows() == matrix_.cols() && matrix_.rows() == layout_.total_dim(),
          "DensityMatrix: dimension does not match layout");
}

DensityMatrix DensityMatrix::pure(SpaceLayout layout, const CVector& psi) {
  require(psi.size() == layout.total_dim(), "DensityMatrix::pure: state size does not match layout");
  const double norm = psi.norm();
  require(std::abs(norm - 1.0) <= 1e-8, "DensityMatrix::pure: state is not normalized");
  return DensityMatrix(std::move(layout), psi * psi.adjoint());
}

// --- constructors ----------------------------------------------------------

Operator make_elementary(ElementaryKind kind, int n) {
  using K = ElementaryKind;
  const bool pauli = kind == K::pauli_x || kind == K::pauli_y || kind == K::pauli_z ||
                     kind == K::pauli_plus || kind == K::pauli_minus;
  if (pauli && n != 2) throw std::invalid_argument("make_elementary: Pauli operators are 2x2");
  if (n < 2) throw std::invalid_argument("make_elementary: dimension must be >= 2");

  const bool bosonic = kind == K::destroy || kind == K::position || kind == K::momentum;
  FactorKind fk = (bosonic || (kind == K::identity && n > 2)) ? FactorKind::boson : FactorKind::spin;
  SpaceLayout layout = SpaceLayout::single(n, fk == FactorKind::boson ? "mode" : "qubit", fk);

  CMatrix m = CMatrix::Zero(n, n);
  const cplx I(0.0, 1.0);
  constexpr int g = 0, e = 1;
  switch (kind) {
    case K::destroy:
      for (int k = 1; k < n; ++k) m(k - 1, k) = std::sqrt(double(k));
      break;
    case K::identity:
      m.setIdentity();
      break;
    case K::pauli_minus:
      m(g, e) = 1.0;
      break;
    case K::pauli_plus:
      m(e, g) = 1.0;
      break;
    case K::pauli_x:
      m(g, e) = m(e, g) = 1.0;
      break;
    case K::pauli_y:
      // -i (sigma_+ - sigma_-)
      m(e, g) = -I;
      m(g, e) = I;
      break;
    case K::pauli_z:
      m(e, e) = 1.0;
      m(g, g) = -1.0;
      break;
    case K::position:
    case K::momentum: {
      CMatrix a = CMatrix::Zero(n, n);
      for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
      if (kind == K::position)
        m = (a + a.adjoint()) / std::sqrt(2.0);
      else
        m = -I * (a - a.adjoint()) / std::sqrt(2.0);
      break;
    }
  }
  return Operator(std::move(layout), std::move(m));
}

Operator embed(const Operator& op, const SpaceLayout& layout, std::size_t slot) {
  if (slot >= layout.size()) throw std::out_of_range("embed: slot out of range");
  if (op.dim() != layout.factor(slot).dim)
    throw std::invalid_argument("embed: operator dimension does not match the target factor");

  Eigen::Index left = 1, right = 1;
  for (std::size_t s = 0; s < slot; ++s) left *= layout.factor(s).dim;
  for (std::size_t s = slot + 1; s < layout.size(); ++s) right *= layout.factor(s).dim;

  const Eigen::Index d = op.dim();
  const Eigen::Index total = left * d * right;
  CMatrix out = CMatrix::Zero(total, total);
  // I_left (x) op (x) I_right, written out so the identity blocks are never formed
  for (Eigen::Index l = 0; l < left; ++l)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        const cplx v = op.matrix()(i, j);
        if (v == cplx(0.0)) continue;
        const Eigen::Index row0 = (l * d + i) * right;
        const Eigen::Index col0 = (l * d + j) * right;
        for (Eigen::Index r = 0; r < right; ++r) out(row0 + r, col0 + r) = v;
      }
  return Operator(layout, std::move(out));
}

Operator tensor(const Operator& a, const Operator& b) {
  const CMatrix& A = a.matrix();
  const CMatrix& B = b.matrix();
  CMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return Operator(a.layout().concat(b.layout()), std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
  const SpaceLayout& layout = rho.layout();
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  std::vector<bool> kept(layout.size(), false);
  for (auto s : keep) {
    if (s >= layout.size()) throw std::invalid_argument("partial_trace: slot out of range");
    if (kept[s]) throw std::invalid_argument("partial_trace: duplicate slot");
    kept[s] = true;
  }
  SpaceLayout out_layout = layout.subset(keep);

  // Split every composite index into (kept index, traced index).
  const auto dims = layout.dims();
  const Eigen::Index total = layout.total_dim();
  Eigen::Index kept_dim = 1, traced_dim = 1;
  for (std::size_t s = 0; s < dims.size(); ++s) (kept[s] ? kept_dim : traced_dim) *= dims[s];

  std::vector<Eigen::Index> kidx(total), tidx(total);
  for (Eigen::Index full = 0; full < total; ++full) {
    Eigen::Index rem = full, k = 0, t = 0, kstride = 1, tstride = 1;
    for (std::size_t s = dims.size(); s-- > 0;) {
      const Eigen::Index digit = rem % dims[s];
      rem /= dims[s];
      if (kept[s]) {
        k += digit * kstride;
        kstride *= dims[s];
      } else {
        t += digit * tstride;
        tstride *= dims[s];
      }
    }
    kidx[full] = k;
    tidx[full] = t;
  }

  // Group composite indices by traced index; each group is one diagonal block.
  std::vector<std::vector<Eigen::Index>> groups(traced_dim, std::vector<Eigen::Index>(kept_dim));
  for (Eigen::Index full = 0; full < total; ++full) groups[tidx[full]][kidx[full]] = full;

  const CMatrix& m = rho.matrix();
  CMatrix out = CMatrix::Zero(kept_dim, kept_dim);
  for (const auto& g : groups)
    for (Eigen::Index r = 0; r < kept_dim; ++r)
      for (Eigen::Index c = 0; c < kept_dim; ++c) out(r, c) += m(g[r], g[c]);
  return DensityMatrix(std::move(out_layout), std::move(out), DensityMatrix::Unchecked{});
}

cplx expectation(const DensityMatrix& rho, const Operator& a) {
  require_same_layout(rho.layout(), a.layout(), "expectation");
  // tr(rho A) = sum_ij rho_ij A_ji
  return rho.matrix().transpose().cwiseProduct(a.matrix()).sum();
}

Operator commutator(const Operator& a, const Operator& b) {
  require_same_layout(a.layout(), b.layout(), "commutator");
  return Operator(a.layout(), a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

cplx hs_inner(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hs_inner: shape mismatch");
  return a.conjugate().cwiseProduct(b).sum();
}

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double hermiticity_error(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return max_abs(m - m.adjoint());
}

Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m) {
  const CMatrix h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return hermitian_eigenvalues(m)(0);
}

double von_neumann_entropy(const DensityMatrix& rho) {
  if (hermiticity_error(rho.matrix()) > 1e-8)
    throw std::invalid_argument("von_neumann_entropy: input is not Hermitian");
  double s = 0.0;
  for (double lambda : hermitian_eigenvalues(rho.matrix()))
    if (lambda > kEigenFloor) s -= lambda * std::log(lambda);
  return std::max(s, 0.0);
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_layout(rho.layout(), sigma.layout(), "trace_distance");
  return 0.5 * hermitian_eigenvalues(rho.matrix() - sigma.matrix()).cwiseAbs().sum();
}

double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

}  // namespace qsync
