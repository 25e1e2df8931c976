#pragma once

// Operator and state algebra on finite-dimensional composite Hilbert spaces.
//
// Basis conventions used throughout the library:
//   * two-level factors are ordered (|g>, |e>); sigma_z|e> = +|e>, sigma_-=|g><e|
//   * bosonic factors are Fock-truncated, |0> ... |n-1>
//   * composite indices follow the Kronecker order: slot 0 is the most
//     significant digit, so kron(A, B) acts as A on slot 0 and B on slot 1.

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qsync {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class FactorKind { spin, boson };

struct Factor {
  int dim = 2;
  std::string label;
  FactorKind kind = FactorKind::spin;

  bool operator==(const Factor&) const = default;
};

/// Ordered list of tensor factors. Every dimension is >= 2 and labels are
/// unique; the total dimension is the product of the factor dimensions.
class SpaceLayout {
 public:
  SpaceLayout() = default;
  explicit SpaceLayout(std::vector<Factor> factors);

  static SpaceLayout single(int dim, std::string label, FactorKind kind);

  std::size_t size() const { return factors_.size(); }
  bool empty() const { return factors_.empty(); }
  const Factor& factor(std::size_t slot) const;
  const std::vector<Factor>& factors() const { return factors_; }
  std::vector<int> dims() const;
  Eigen::Index total_dim() const { return total_; }

  std::optional<std::size_t> find(std::string_view label) const;
  std::size_t slot(std::string_view label) const;

  /// Layout made of the given slots, in original order.
  SpaceLayout subset(std::span<const std::size_t> keep) const;

  /// Factor lists concatenated. A label of `other` that clashes with one of
  /// ours gets the suffix "_<slot>" so the result stays unique.
  SpaceLayout concat(const SpaceLayout& other) const;

  bool operator==(const SpaceLayout& o) const { return factors_ == o.factors_; }

 private:
  std::vector<Factor> factors_;
  Eigen::Index total_ = 0;
};

inline constexpr double kHermitianTol = 1e-12;

class Operator {
 public:
  Operator() = default;
  Operator(SpaceLayout layout, CMatrix matrix);

  const SpaceLayout& layout() const { return layout_; }
  const CMatrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  bool is_hermitian() const { return hermitian_; }

  Operator adjoint() const;

  Operator& operator+=(const Operator& o);
  Operator& operator-=(const Operator& o);
  Operator& operator*=(cplx s);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator*(Operator a, cplx s) { return a *= s; }
  friend Operator operator*(cplx s, Operator a) { return a *= s; }
  friend Operator operator*(const Operator& a, const Operator& b);

 private:
  void refresh_flag();

  SpaceLayout layout_;
  CMatrix matrix_;
  bool hermitian_ = false;
};

/// Validation thresholds for states.
inline constexpr double kTraceTol = 1e-8;
inline constexpr double kStateHermitianTol = 1e-10;
inline constexpr double kPositivityTol = 1e-8;

class DensityMatrix {
 public:
  struct Unchecked {};

  DensityMatrix() = default;
  /// Throws std::invalid_argument unless trace, hermiticity and positivity
  /// hold to kTraceTol / kStateHermitianTol / kPositivityTol.
  DensityMatrix(SpaceLayout layout, CMatrix matrix);
  /// Skips the validation; used on hot paths where the caller already
  /// tracks diagnostics.
  DensityMatrix(SpaceLayout layout, CMatrix matrix, Unchecked);

  static DensityMatrix pure(SpaceLayout layout, const CVector& psi);

  const SpaceLayout& layout() const { return layout_; }
  const CMatrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }

 private:
  SpaceLayout layout_;
  CMatrix matrix_;
};

enum class ElementaryKind {
  destroy,
  pauli_x,
  pauli_y,
  pauli_z,
  pauli_plus,
  pauli_minus,
  identity,
  position,
  momentum,
};

/// Single-factor operator. `n` is the factor dimension; Pauli kinds require
/// n == 2, bosonic kinds n >= 2.
Operator make_elementary(ElementaryKind kind, int n = 2);

inline Operator destroy(int n) { return make_elementary(ElementaryKind::destroy, n); }
inline Operator identity(int n) { return make_elementary(ElementaryKind::identity, n); }
inline Operator position(int n) { return make_elementary(ElementaryKind::position, n); }
inline Operator momentum(int n) { return make_elementary(ElementaryKind::momentum, n); }
inline Operator pauli_x() { return make_elementary(ElementaryKind::pauli_x); }
inline Operator pauli_y() { return make_elementary(ElementaryKind::pauli_y); }
inline Operator pauli_z() { return make_elementary(ElementaryKind::pauli_z); }
inline Operator pauli_plus() { return make_elementary(ElementaryKind::pauli_plus); }
inline Operator pauli_minus() { return make_elementary(ElementaryKind::pauli_minus); }

/// Lifts a single-factor operator to `layout`, identities on the other slots.
Operator embed(const Operator& op, const SpaceLayout& layout, std::size_t slot);

/// Kronecker product; layout is the concatenation of both factor lists.
Operator tensor(const Operator& a, const Operator& b);

/// Reduced state on `keep` (non-empty, no duplicates, in range). Kept
/// factors retain their original order.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);

/// tr(rho A).
cplx expectation(const DensityMatrix& rho, const Operator& a);

Operator commutator(const Operator& a, const Operator& b);

/// Hilbert-Schmidt inner product tr(A^dagger B).
cplx hs_inner(const CMatrix& a, const CMatrix& b);

inline constexpr double kEigenFloor = 1e-12;

/// -sum lambda ln lambda in nats over eigenvalues above kEigenFloor.
double von_neumann_entropy(const DensityMatrix& rho);

/// Smallest eigenvalue of (M + M^dagger) / 2.
double min_eigenvalue(const CMatrix& m);

/// Eigenvalues of (M + M^dagger) / 2, ascending.
Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m);

double max_abs(const CMatrix& m);
double hermiticity_error(const CMatrix& m);

/// 0.5 * ||rho - sigma||_1.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

double purity(const DensityMatrix& rho);

}  // namespace qsync
