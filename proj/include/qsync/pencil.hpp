#pragma once

// Matrix-pencil decomposition of a uniformly sampled real signal into damped
// complex exponentials, y(t0 + k dt) ~ sum_m c_m exp(lambda_m k dt).

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qsync {

struct PencilSettings {
  /// Singular values below sv_rel_tol * s_max are treated as noise.
  double sv_rel_tol = 1e-7;
  int max_order = 16;
  /// Upper bound on the pencil parameter (Hankel width - 1).
  int max_pencil = 200;
};

/// One real component: a decaying exponential (frequency 0) or a damped
/// cosine amplitude * exp(-decay tau) * cos(frequency tau + phase).
struct Mode {
  double frequency = 0.0;  // >= 0, rad per time unit
  double decay = 0.0;      // negative for growth
  double amplitude = 0.0;  // >= 0 for oscillatory modes; signed for real ones
  double phase = 0.0;      // at tau = 0
  double rms = 0.0;        // RMS of this component over the samples
  bool oscillatory() const { return frequency > 0.0; }
};

struct Decomposition {
  std::vector<Mode> modes;
  Eigen::VectorXd fitted;
  double residual_rms = 0.0;
  int order = 0;  // singular values kept
};

/// `y` sampled at tau = k * dt. Requires y.size() >= 8.
Decomposition pencil_decompose(const Eigen::VectorXd& y, double dt, const PencilSettings& settings = {});

/// Re-solves the linear amplitudes for fixed (frequency, decay) pairs.
Decomposition fit_amplitudes(const Eigen::VectorXd& y, double dt, const std::vector<Mode>& shapes);

}  // namespace qsync
