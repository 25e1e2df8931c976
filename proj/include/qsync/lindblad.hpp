#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsync/opalg.hpp"

namespace qsync {

/// One dissipative channel, contributing rate * (2 L rho L^dag - L^dag L rho - rho L^dag L).
struct Dissipator {
  double rate = 0.0;
  Operator jump;
};

struct NamedOperator {
  std::string name;
  Operator op;
};

/// Time-independent Lindblad generator plus the observables recorded during
/// evolution. Rates and energies are in units of `reference_rate`.
struct ModelSpec {
  SpaceLayout layout;
  Operator hamiltonian;
  std::vector<Dissipator> dissipators;
  std::vector<NamedOperator> observables;
  double reference_rate = 1.0;
  std::string reference_unit = "kappa";

  /// Throws std::invalid_argument on a broken invariant (non-Hermitian H or
  /// observable, negative rate, layout mismatch, duplicate observable name).
  void validate() const;
};

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double rel = 1e-8;
  double abs = 1e-10;
};

struct EvolveOptions {
  Tolerances tol;
  /// Abort when the top Fock level of any bosonic factor holds more than this.
  double truncation_limit = 1e-4;
  std::size_t max_steps = 100'000'000;
  /// Initial step; 0 picks one from the generator norm.
  double initial_step = 0.0;
};

struct SampleDiagnostics {
  double trace_error = 0.0;   // |tr rho - 1| before renormalization
  double min_eigenvalue = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd values;  // rows: samples, cols: observables
  std::vector<std::string> names;
  std::vector<SampleDiagnostics> diagnostics;
  DensityMatrix final_state;
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;

  std::size_t column(std::string_view name) const;
  Eigen::VectorXd series(std::string_view name) const { return values.col(Eigen::Index(column(name))); }
};

/// Called after every sample (including t = 0) with the post-processed state.
using SampleObserver = std::function<void(double t, const DensityMatrix& rho)>;

/// d rho / dt, dense reference evaluation.
CMatrix rhs(const ModelSpec& model, const DensityMatrix& rho);
CMatrix rhs(const ModelSpec& model, const CMatrix& rho);

/// Precomputed sparse form of the generator used by the integrator:
/// drho = -i (K rho - rho K^dag) + sum 2 r L rho L^dag, K = H - i sum r L^dag L.
class LindbladKernel {
 public:
  explicit LindbladKernel(const ModelSpec& model);
  /// Uses internal scratch space: one kernel must not be applied from two
  /// threads at once (copies share it too).
  void apply(const CMatrix& rho, CMatrix& out) const;
  /// Sum of induced 1-norm bounds; a cheap upper estimate of the generator scale.
  double norm_estimate() const { return norm_estimate_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  double norm_estimate_ = 0.0;
};

/// Adaptive Dormand-Prince 5(4) integration sampled on the uniform grid
/// k * sample_dt, k = 0 .. floor(t_end / sample_dt). After each sample the
/// state is re-Hermitized, and its trace renormalized when it drifts beyond
/// 1e-10. Throws TruncationError on guard violation and IntegrationError on
/// step-size underflow or step-budget exhaustion.
Trajectory evolve(const ModelSpec& model, const DensityMatrix& rho0, double t_end, double sample_dt,
                  const EvolveOptions& options = {}, const SampleObserver& observer = {});

/// Population of the top Fock level of each bosonic factor (slot, population).
std::vector<std::pair<std::size_t, double>> top_level_populations(const DensityMatrix& rho);

// Dense superoperator oracle ------------------------------------------------

inline constexpr Eigen::Index kDefaultOracleCap = 16;

/// Column-stacking vectorization: vec(A X B) = (B^T (x) A) vec(X).
CVector vectorize(const CMatrix& m);
CMatrix unvectorize(const CVector& v, Eigen::Index dim);

/// D^2 x D^2 Liouvillian. Throws std::invalid_argument when D > oracle_cap.
CMatrix dense_liouvillian(const ModelSpec& model, Eigen::Index oracle_cap = kDefaultOracleCap);

/// Propagates with the matrix exponential of the dense Liouvillian.
class DenseOracle {
 public:
  explicit DenseOracle(const ModelSpec& model, Eigen::Index oracle_cap = kDefaultOracleCap);

  const CMatrix& liouvillian() const { return liouvillian_; }
  /// exp(L t) as a superoperator.
  CMatrix propagator(double t) const;
  CMatrix state_at(const DensityMatrix& rho0, double t) const;
  /// States at k * dt for k = 0 .. count-1, by repeated application of exp(L dt).
  std::vector<CMatrix> states_on_grid(const DensityMatrix& rho0, double dt, std::size_t count) const;

 private:
  Eigen::Index dim_;
  CMatrix liouvillian_;
};

}  // namespace qsync
