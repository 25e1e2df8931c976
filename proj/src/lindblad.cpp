#include "qsync/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>


namespace qsync {

namespace {

constexpr cplx kI(0.0, 1.0);

double induced_one_norm(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

void ModelSpec::validate() const {
  const auto dims = layout.dims();
  if (hamiltonian.layout().dims() != dims)
    throw std::invalid_argument("ModelSpec: Hamiltonian layout does not match model layout");
  if (hermiticity_error(hamiltonian.matrix()) > 1e-10)
    throw std::invalid_argument("ModelSpec: Hamiltonian is not Hermitian");
  for (const auto& d : dissipators) {
    if (!(d.rate >= 0.0)) throw std::invalid_argument("ModelSpec: dissipator rate must be >= 0");
    if (d.jump.layout().dims() != dims)
      throw std::invalid_argument("ModelSpec: jump operator layout does not match model layout");
  }
  std::set<std::string> names;
  for (const auto& o : observables) {
    if (o.name.empty()) throw std::invalid_argument("ModelSpec: observable without a name");
    if (!names.insert(o.name).second)
      throw std::invalid_argument("ModelSpec: duplicate observable name '" + o.name + "'");
    if (o.op.layout().dims() != dims)
      throw std::invalid_argument("ModelSpec: observable '" + o.name + "' has the wrong layout");
    if (hermiticity_error(o.op.matrix()) > 1e-10)
      throw std::invalid_argument("ModelSpec: observable '" + o.name + "' is not Hermitian");
  }
  if (!(reference_rate > 0.0)) throw std::invalid_argument("ModelSpec: reference_rate must be > 0");
}

std::size_t Trajectory::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::out_of_range("Trajectory: no column '" + std::string(name) + "'");
}

CMatrix rhs(const ModelSpec& model, const CMatrix& rho) {
  const CMatrix& h = model.hamiltonian.matrix();
  if (rho.rows() != h.rows() || rho.cols() != h.cols())
    throw std::invalid_argument("rhs: state dimension does not match the model");
  CMatrix out = -kI * (h * rho - rho * h);
  for (const auto& d : model.dissipators) {
    const CMatrix& l = d.jump.matrix();
    const CMatrix ldl = l.adjoint() * l;
    out += d.rate * (2.0 * l * rho * l.adjoint() - ldl * rho - rho * ldl);
  }
  return out;
}

CMatrix rhs(const ModelSpec& model, const DensityMatrix& rho) {
  if (rho.layout().dims() != model.layout.dims())
    throw std::invalid_argument("rhs: layout mismatch");
  return rhs(model, rho.matrix());
}

// --- LindbladKernel --------------------------------------------------------

namespace {

// Compressed rows; both kernel products below walk whole columns of the dense
// operand so they stay cache friendly for column-major storage.
struct Csr {
  std::vector<Eigen::Index> row_ptr;
  std::vector<Eigen::Index> col;
  std::vector<cplx> val;
  Eigen::Index n = 0;

  explicit Csr(const CMatrix& m) : n(m.rows()) {
    row_ptr.reserve(std::size_t(n) + 1);
    row_ptr.push_back(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (m(i, j) != cplx(0.0)) {
          col.push_back(j);
          val.push_back(m(i, j));
        }
      row_ptr.push_back(Eigen::Index(col.size()));
    }
  }

  // out = s * (A x)
  void left(const CMatrix& x, cplx s, CMatrix& out) const {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const cplx* xc = x.col(c).data();
      cplx* oc = out.col(c).data();
      for (Eigen::Index i = 0; i < n; ++i) {
        cplx acc(0.0);
        for (Eigen::Index k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += val[k] * xc[col[k]];
        oc[i] = s * acc;
      }
    }
  }

  // out += s * (x A^dag): column c of x A^dag is sum_j conj(A(c, j)) x(:, j)
  void right_adjoint_add(const CMatrix& x, cplx s, CMatrix& out) const {
    const Eigen::Index rows = x.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
      cplx* oc = out.col(c).data();
      for (Eigen::Index k = row_ptr[c]; k < row_ptr[c + 1]; ++k) {
        const cplx w = s * std::conj(val[k]);
        const cplx* xj = x.col(col[k]).data();
        for (Eigen::Index i = 0; i < rows; ++i) oc[i] += w * xj[i];
      }
    }
  }
};

}  // namespace

struct LindbladKernel::Impl {
  Csr k;  // H - i sum r L^dag L
  std::vector<Csr> jumps;
  std::vector<double> weights;  // 2 r
  mutable CMatrix scratch;

  explicit Impl(const CMatrix& k_eff) : k(k_eff) {}
};

LindbladKernel::LindbladKernel(const ModelSpec& model) {
  CMatrix k = model.hamiltonian.matrix();
  norm_estimate_ = induced_one_norm(k);
  std::vector<Csr> jumps;
  std::vector<double> weights;
  for (const auto& d : model.dissipators) {
    if (d.rate == 0.0) continue;
    const CMatrix& l = d.jump.matrix();
    const CMatrix ldl = l.adjoint() * l;
    k -= kI * d.rate * ldl;
    jumps.emplace_back(l);
    weights.push_back(2.0 * d.rate);
    norm_estimate_ += 3.0 * d.rate * induced_one_norm(ldl);
  }
  norm_estimate_ *= 2.0;
  auto impl = std::make_shared<Impl>(k);
  impl->jumps = std::move(jumps);
  impl->weights = std::move(weights);
  impl_ = std::move(impl);
}

void LindbladKernel::apply(const CMatrix& rho, CMatrix& out) const {
  const Impl& p = *impl_;
  out.resize(rho.rows(), rho.cols());
  // -i (K rho - rho K^dag)
  p.k.left(rho, -kI, out);
  p.k.right_adjoint_add(rho, kI, out);
  for (std::size_t j = 0; j < p.jumps.size(); ++j) {
    p.scratch.resize(rho.rows(), rho.cols());
    p.jumps[j].left(rho, cplx(1.0), p.scratch);
    p.jumps[j].right_adjoint_add(p.scratch, cplx(p.weights[j]), out);
  }
}

// --- evolve ----------------------------------------------------------------

std::vector<std::pair<std::size_t, double>> top_level_populations(const DensityMatrix& rho) {
  const SpaceLayout& layout = rho.layout();
  const auto dims = layout.dims();
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t s = 0; s < dims.size(); ++s) {
    if (layout.factor(s).kind != FactorKind::boson) continue;
    Eigen::Index right = 1;
    for (std::size_t r = s + 1; r < dims.size(); ++r) right *= dims[r];
    const Eigen::Index d = dims[s];
    double pop = 0.0;
    for (Eigen::Index i = 0; i < rho.dim(); ++i)
      if ((i / right) % d == d - 1) pop += rho.matrix()(i, i).real();
    out.emplace_back(s, pop);
  }
  return out;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class DormandPrince {
 public:
  DormandPrince(const LindbladKernel& kernel, Eigen::Index dim, const Tolerances& tol)
      : f_(kernel), tol_(tol) {
    for (auto* m : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &err_})
      m->resize(dim, dim);
  }

  void reset(const CMatrix& y) { f_.apply(y, k1_); }

  // One attempted step of size h from y. Returns the scaled error norm; on
  // acceptance (norm <= 1) the caller commits via accept().
  double attempt(const CMatrix& y, double h) {
    ytmp_ = y + h * a21 * k1_;
    f_.apply(ytmp_, k2_);
    ytmp_ = y + h * (a31 * k1_ + a32 * k2_);
    f_.apply(ytmp_, k3_);
    ytmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    f_.apply(ytmp_, k4_);
    ytmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    f_.apply(ytmp_, k5_);
    ytmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    f_.apply(ytmp_, k6_);
    ynew_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    f_.apply(ynew_, k7_);
    err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

    const Eigen::ArrayXXd scale =
        tol_.abs + tol_.rel * y.cwiseAbs().array().max(ynew_.cwiseAbs().array());
    const double sq = (err_.cwiseAbs().array() / scale).square().sum();
    return std::sqrt(sq / double(err_.size()));
  }

  void accept(CMatrix& y) {
    y.swap(ynew_);
    k1_.swap(k7_);
  }

 private:
  const LindbladKernel& f_;
  Tolerances tol_;
  CMatrix k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, err_;
};

}  // namespace

Trajectory evolve(const ModelSpec& model, const DensityMatrix& rho0, double t_end, double sample_dt,
                  const EvolveOptions& options, const SampleObserver& observer) {
  if (!(t_end > 0.0)) throw std::invalid_argument("evolve: t_end must be > 0");
  if (!(sample_dt > 0.0)) throw std::invalid_argument("evolve: sample_dt must be > 0");
  if (!(options.tol.rel > 0.0) || !(options.tol.abs > 0.0))
    throw std::invalid_argument("evolve: tolerances must be > 0");
  if (rho0.layout().dims() != model.layout.dims())
    throw std::invalid_argument("evolve: initial state layout does not match the model");
  model.validate();

  const Eigen::Index dim = model.layout.total_dim();
  const auto n_samples = static_cast<std::size_t>(std::floor(t_end / sample_dt + 1e-9)) + 1;

  Trajectory traj;
  traj.times.reserve(n_samples);
  traj.values.resize(Eigen::Index(n_samples), Eigen::Index(model.observables.size()));
  for (const auto& o : model.observables) traj.names.push_back(o.name);
  traj.diagnostics.reserve(n_samples);

  // Observable matrices pre-transposed so tr(rho A) is a flat dot product.
  std::vector<CMatrix> obs_t;
  for (const auto& o : model.observables) obs_t.push_back(o.op.matrix().transpose());

  CMatrix y = rho0.matrix();

  auto record = [&](std::size_t idx, double t) {
    SampleDiagnostics diag;
    const cplx tr = y.trace();
    diag.trace_error = std::abs(tr - cplx(1.0));
    y = (y + y.adjoint()).eval() / 2.0;
    if (diag.trace_error > 1e-10) y /= y.trace().real();
    diag.min_eigenvalue = min_eigenvalue(y);

    for (std::size_t j = 0; j < obs_t.size(); ++j)
      traj.values(Eigen::Index(idx), Eigen::Index(j)) = y.cwiseProduct(obs_t[j]).sum().real();
    traj.times.push_back(t);
    traj.diagnostics.push_back(diag);

    DensityMatrix state(model.layout, y, DensityMatrix::Unchecked{});
    for (const auto& [slot, pop] : top_level_populations(state)) {
      if (pop > options.truncation_limit) {
        std::ostringstream msg;
        msg << "truncation guard: top Fock level of factor '" << model.layout.factor(slot).label
            << "' holds population " << pop << " > " << options.truncation_limit << " at t = " << t;
        throw TruncationError(msg.str());
      }
    }
    if (observer) observer(t, state);
  };

  record(0, 0.0);

  LindbladKernel kernel(model);
  DormandPrince stepper(kernel, dim, options.tol);
  stepper.reset(y);

  double t = 0.0;
  double h = options.initial_step > 0.0 ? options.initial_step
                                        : std::min(sample_dt, 0.01 / std::max(kernel.norm_estimate(), 1e-12));
  std::size_t steps = 0;
  for (std::size_t k = 1; k < n_samples; ++k) {
    const double t_target = double(k) * sample_dt;
    while (t < t_target) {
      const double remaining = t_target - t;
      const bool last = h >= remaining * (1.0 - 1e-12);
      const double h_try = last ? remaining : h;
      if (h_try < 1e-13 * std::max(1.0, std::abs(t)))
        throw IntegrationError("evolve: step size underflow at t = " + std::to_string(t));
      if (++steps > options.max_steps)
        throw IntegrationError("evolve: step budget exhausted at t = " + std::to_string(t));

      const double err = stepper.attempt(y, h_try);
      if (!std::isfinite(err)) {
        h = 0.2 * h_try;
        ++traj.steps_rejected;
        continue;
      }
      if (err <= 1.0) {
        stepper.accept(y);
        t = last ? t_target : t + h_try;
        ++traj.steps_accepted;
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // A step shortened to land on the sample must not shrink the next one.
        h = std::max(h, h_try * fac);
        if (!last) h = h_try * fac;
      } else {
        ++traj.steps_rejected;
        h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
      }
    }
    record(k, t_target);
    stepper.reset(y);
  }

  traj.final_state = DensityMatrix(model.layout, y, DensityMatrix::Unchecked{});
  return traj;
}

}  // namespace qsync
