#include "qsync/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qsync {

namespace {

// Modes whose envelope changes by more than this over the record are dropped:
// they carry no information inside the window and wreck the conditioning.
constexpr double kMaxLogGrowth = 50.0;
constexpr double kMaxLogDecay = 700.0;

}  // namespace

Decomposition fit_amplitudes(const Eigen::VectorXd& y, double dt, const std::vector<Mode>& shapes) {
  const Eigen::Index n = y.size();
  Eigen::Index cols = 0;
  for (const auto& s : shapes) cols += s.oscillatory() ? 2 : 1;

  Eigen::MatrixXd x(n, cols);
  Eigen::Index c = 0;
  for (const auto& s : shapes) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double tau = double(k) * dt;
      const double env = std::exp(-s.decay * tau);
      if (s.oscillatory()) {
        x(k, c) = env * std::cos(s.frequency * tau);
        x(k, c + 1) = env * std::sin(s.frequency * tau);
      } else {
        x(k, c) = env;
      }
    }
    c += s.oscillatory() ? 2 : 1;
  }

  Decomposition out;
  out.modes = shapes;
  if (cols == 0) {
    out.fitted = Eigen::VectorXd::Zero(n);
  } else {
    const Eigen::VectorXd coef = x.completeOrthogonalDecomposition().solve(y);
    out.fitted = x * coef;
    c = 0;
    for (auto& m : out.modes) {
      if (m.oscillatory()) {
        const double a = coef(c), b = coef(c + 1);
        // a cos + b sin = A cos(w tau + phi) with A cos phi = a, A sin phi = -b
        m.amplitude = std::hypot(a, b);
        m.phase = std::atan2(-b, a);
        m.rms = std::sqrt((x.col(c) * a + x.col(c + 1) * b).squaredNorm() / double(n));
        c += 2;
      } else {
        m.amplitude = coef(c);
        m.phase = 0.0;
        m.rms = std::sqrt((x.col(c) * coef(c)).squaredNorm() / double(n));
        c += 1;
      }
    }
  }
  out.residual_rms = std::sqrt((out.fitted - y).squaredNorm() / double(n));
  return out;
}

Decomposition pencil_decompose(const Eigen::VectorXd& y, double dt, const PencilSettings& settings) {
  const Eigen::Index n = y.size();
  if (n < 8) throw std::invalid_argument("pencil_decompose: need at least 8 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("pencil_decompose: dt must be > 0");
  if (!y.allFinite()) throw std::invalid_argument("pencil_decompose: signal contains non-finite values");

  const Eigen::Index l = std::min<Eigen::Index>(n / 3, settings.max_pencil);
  Eigen::MatrixXd hankel(n - l, l + 1);
  for (Eigen::Index i = 0; i < n - l; ++i) hankel.row(i) = y.segment(i, l + 1).transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(hankel, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();

  Decomposition out;
  if (s.size() == 0 || s(0) == 0.0) {
    out.fitted = Eigen::VectorXd::Zero(n);
    out.residual_rms = std::sqrt(y.squaredNorm() / double(n));
    return out;
  }
  int order = 0;
  while (order < s.size() && s(order) > settings.sv_rel_tol * s(0)) ++order;
  order = std::clamp(order, 1, std::min<int>(settings.max_order, int(l)));

  const Eigen::MatrixXd v = svd.matrixV().leftCols(order);
  const Eigen::MatrixXd v1 = v.topRows(l);
  const Eigen::MatrixXd v2 = v.bottomRows(l);
  const Eigen::MatrixXd a = v1.completeOrthogonalDecomposition().solve(v2);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);

  const double span = double(n - 1) * dt;
  const double real_eps = 1e-9 / dt;
  std::vector<Mode> shapes;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const std::complex<double> z = es.eigenvalues()(k);
    if (std::abs(z) < 1e-300) continue;
    const std::complex<double> lambda = std::log(z) / dt;
    Mode m;
    m.decay = -lambda.real();
    m.frequency = std::abs(lambda.imag()) <= real_eps ? 0.0 : std::abs(lambda.imag());
    if (-m.decay * span > kMaxLogGrowth || m.decay * span > kMaxLogDecay) continue;
    const bool duplicate = std::any_of(shapes.begin(), shapes.end(), [&](const Mode& o) {
      const double tol = 1e-6 * (std::abs(o.frequency) + std::abs(o.decay)) + 1e-12 / dt;
      return std::abs(o.frequency - m.frequency) <= tol && std::abs(o.decay - m.decay) <= tol;
    });
    if (!duplicate) shapes.push_back(m);
  }
  // Deterministic ordering independent of the eigen-solver's output order.
  std::sort(shapes.begin(), shapes.end(), [](const Mode& p, const Mode& q) {
    return p.frequency != q.frequency ? p.frequency < q.frequency : p.decay < q.decay;
  });

  out = fit_amplitudes(y, dt, shapes);
  out.order = order;
  return out;
}

}  // namespace qsync
