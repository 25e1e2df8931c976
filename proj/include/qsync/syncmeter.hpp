#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsync/lindblad.hpp"
#include "qsync/models.hpp"
#include "qsync/pencil.hpp"

namespace qsync {

struct FitSettings {
  double amp_min = 1e-3;           // relative to max |y| in the window
  double fit_tol = 0.1;            // residual RMS relative to the amplitude
  double min_cycles = 1.0;         // full periods required inside the window
  double max_damping_ratio = 0.5;  // decay / frequency
  PencilSettings pencil;
  int min_samples = 64;
  /// Relative step size at which the (frequency, decay) refinement stops.
  double refine_tol = 1e-6;
};

/// Dominant damped oscillation amplitude * exp(-decay (t - t_ref)) *
/// cos(frequency (t - t_ref) + phase) + background, t_ref = window start.
struct OscillationFit {
  double frequency = 0.0;
  double decay = 0.0;
  double phase = 0.0;  // (-pi, pi]
  double amplitude = 0.0;
  double offset = 0.0;  // mean of the non-dominant part over the window
  double residual_rms = 0.0;
  double signal_scale = 0.0;
  double t_ref = 0.0;
  double window_length = 0.0;
  int samples = 0;
  int model_order = 0;
  bool oscillating = false;
  std::string diagnostic;
};

/// Throws std::invalid_argument when fewer than settings.min_samples samples
/// fall inside [t0, t1] or the grid is not uniform.
OscillationFit fit_oscillation(std::span<const double> times, std::span<const double> values, AnalysisWindow window,
                               const FitSettings& settings = {});

enum class PhaseClass { in_phase, anti_phase, phase_locked_other };
std::string_view to_string(PhaseClass c);

struct PairThresholds {
  double tol_freq = 0.01;  // relative frequency mismatch
  double tol_phase = 0.2;  // rad
  /// Frequencies closer than this fraction of 2 pi / window length are
  /// indistinguishable inside the window and count as locked.
  double freq_resolution = 0.5;
};

struct PairVerdict {
  bool synced = false;
  double freq_mismatch = 0.0;
  double phase_diff = 0.0;  // phase(a) - phase(b), wrapped to (-pi, pi]
  PhaseClass phase_class = PhaseClass::phase_locked_other;
  double amplitude_ratio = 0.0;  // amplitude(b) / amplitude(a)
};

PairVerdict classify_pair(const OscillationFit& a, const OscillationFit& b, const PairThresholds& thresholds = {});

/// Single-subsystem observables whose two embeddings appear in a trajectory
/// as `<name>_1` and `<name>_2`.
struct Catalog {
  std::string spec;  // "pauli" or "vdp_moments:<N>"
  int dim = 0;
  std::vector<NamedOperator> ops;
};

/// Accepts "pauli", "vdp_moments" (N = 12) and "vdp_moments:<N>".
Catalog catalog_from_spec(std::string_view spec);

struct Quantumness {
  int chi = 0;
  int c = 0;
  int xi = 0;
};

inline constexpr double kCommuteTol = 1e-10;

/// chi = |S|, c = max_k |{A_i : [A_k, A_i] = 0}|, xi = chi - c. Commutation
/// is tested relative to the operator scales. Empty S gives (0, 0, 0).
/// Throws std::invalid_argument on mixed dimensions and std::logic_error when
/// xi leaves [0, d^2 - d].
Quantumness degree_of_quantumness(std::span<const Operator> s);

inline constexpr double kRankTol = 1e-10;

/// Indices of a linearly independent subset chosen greedily in order, using
/// the Hilbert-Schmidt Gram matrix of the normalized operators.
std::vector<std::size_t> independent_subset(std::span<const Operator> ops, double rank_tol = kRankTol);

struct SyncThresholds {
  FitSettings fit;
  PairThresholds pair;
};

struct PairReport {
  std::string name;
  OscillationFit first;
  OscillationFit second;
  PairVerdict verdict;
};

struct SyncReport {
  std::string catalog;
  AnalysisWindow window;
  std::vector<PairReport> pairs;
  std::vector<std::string> synced;     // passed classify_pair, in catalog order
  std::vector<std::string> S;          // after the independence filter
  Quantumness q;
  int subsystem_dim = 0;
  std::optional<double> mutual_info_final;
  SyncThresholds thresholds;
  std::map<std::string, std::string> notes;
};

/// Column-major view of recorded series, as stored in a Trajectory or CSV.
struct SeriesTable {
  std::vector<double> times;
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // rows: samples
};

SeriesTable table_from(const Trajectory& t);

SyncReport analyze(const SeriesTable& table, const Catalog& catalog, AnalysisWindow window,
                   const SyncThresholds& thresholds = {}, std::optional<double> mutual_info_final = std::nullopt);

/// Members of the catalog that synchronize in both subsystems, after the
/// independence filter.
std::vector<std::string> synchronized_set(const Trajectory& t, const Catalog& catalog, AnalysisWindow window,
                                          const SyncThresholds& thresholds = {});

/// S(A) + S(B) - S(AB) in nats, B the complement of `part_a`.
double mutual_information(const DensityMatrix& rho, std::span<const std::size_t> part_a);

/// 1 / <x-^2 + p-^2> with x- = (x1 - x2)/sqrt2, for a state on two bosonic factors.
double mari_measure(const DensityMatrix& rho);

}  // namespace qsync
