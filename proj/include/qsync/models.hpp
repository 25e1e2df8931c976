#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qsync/lindblad.hpp"

namespace qsync {

/// Two driven qubits, each coupled to its own cavity, with hopping between the
/// cavities. Written in the frame rotating at the drive frequency; every
/// quantity is in units of the cavity decay rate kappa.
struct CavityQubitParams {
  double delta1 = 0.0;   // cavity detunings
  double delta2 = 0.0;
  double deltaq1 = 0.0;  // qubit detunings
  double deltaq2 = 0.0;
  double g0 = 0.0;
  double J = 0.0;
  double Omega = 0.0;    // drive on qubit 1 only
  double kappa = 1.0;
  int Nc = 4;

  void validate() const;
};

enum class CollectiveChannel { symmetric, antisymmetric };

/// Two qubits after adiabatic elimination of the cavities: a single collective
/// decay channel at rate gamma_eff = g0^2 / kappa.
struct ReducedQubitParams {
  double deltaq1 = 0.0;
  double deltaq2 = 0.0;
  double Omega = 0.0;
  double gamma_eff = 0.25;
  /// symmetric: S- = (s1- + s2-)/sqrt2; antisymmetric: Q- = (s1- - s2-)/sqrt2.
  CollectiveChannel collective = CollectiveChannel::symmetric;

  void validate() const;
};

/// Two quantum van der Pol oscillators with a two-mode squeezing coupling.
/// Units of omega1.
struct VdpParams {
  double omega1 = 1.0;
  double omega2 = 1.0;
  double J = 0.0;
  double Omega1 = 0.0;  // linear gain
  double Omega2 = 0.0;
  double kappa1 = 0.0;  // two-photon loss
  double kappa2 = 0.0;
  int N = 12;

  void validate() const;
};

using ModelParams = std::variant<CavityQubitParams, ReducedQubitParams, VdpParams>;

/// Layout [q1, q2, c1, c2]; observables sx_j, sy_j, sz_j.
ModelSpec build_cavity_qubit(const CavityQubitParams& p);

/// Layout [q1, q2]; observables sx_j, sy_j, sz_j.
ModelSpec build_reduced_qubit(const ReducedQubitParams& p);

/// Layout [m1, m2]; per-mode moments x_j, p_j, n_j, x2_j, p2_j, xp_j plus the
/// joint relative-quadrature moment rel_quad_sq = x-^2 + p-^2.
ModelSpec build_vdp(const VdpParams& p);

ModelSpec build_model(const ModelParams& p);

std::string_view model_kind(const ModelParams& p);

/// Single-excitation matrix M of the cavity part a^dag M a, read off the
/// Hamiltonian that build_cavity_qubit produces with the qubit couplings and
/// drive switched off.
Eigen::Matrix2d cavity_quadratic_form(const CavityQubitParams& p);

/// Per-mode moment operators on an n-level mode, in catalog order
/// x, p, n, x2, p2, xp.
std::vector<NamedOperator> vdp_moment_catalog(int n);

/// Pauli operators sx, sy, sz.
std::vector<NamedOperator> pauli_catalog();

/// Pure product state from one amplitude vector per factor. Shorter vectors
/// are zero padded; the total norm must be 1 to 1e-6.
DensityMatrix product_state(const SpaceLayout& layout, const std::vector<CVector>& amplitudes);

struct AnalysisWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

struct Preset {
  std::string name;
  std::string description;
  ModelParams params;
  std::vector<CVector> initial_amplitudes;  // one per factor
  double t_end = 0.0;
  double sample_dt = 0.0;
  AnalysisWindow window;
  std::string catalog;  // "pauli" or "vdp_moments"
};

/// Throws std::invalid_argument for an unknown name.
Preset preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace qsync
