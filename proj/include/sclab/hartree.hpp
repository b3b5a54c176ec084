#pragma once

// Mean-field Hartree dynamics for finite-rank ensembles,
//   i hbar dt psi_j = -hbar^2/2 Delta psi_j + Phi psi_j,
//   Phi = w * rho,  rho = (2 pi hbar)^d sum lambda_j |psi_j|^2,
// by Strang splitting. The potential substep is an exact phase: it leaves
// every |psi_j| unchanged, so Phi is constant along it.

#include "sclab/fit.hpp"
#include "sclab/lattice.hpp"
#include "sclab/propagate.hpp"
#include "sclab/qstate.hpp"

#include <limits>
#include <string>

namespace sclab {

// Pair potential w = sign |x|^{-a} (Riesz, via the exact Fourier multiplier
// sign c_{d,a} |xi|^{a-d}, zero mode gauged to 0) or a sampled smooth override
// carrying `a` only as its tail label.
struct Interaction {
  enum class Mode { Riesz, Smooth };
  Mode mode = Mode::Riesz;
  int sign = 1;
  double a = 1.0;
  Field smooth_w; // Smooth mode only

  static Interaction riesz(int sign, double a, int d); // requires a in (0, d)
  static Interaction smooth(int sign, double a_label, Field w);
  static Interaction none(const Lattice& lat); // zero coupling
};

// lattice-free description, materialized per grid; Smooth samples
// amp (core^2 + |x|^2)^{-a/2}
struct InteractionSpec {
  enum class Kind { None, Riesz, Smooth };
  Kind kind = Kind::None;
  int sign = 1;
  double a = 1.2;
  double core = 0.5;
  double amp = 1.0;

  Interaction make(const Lattice& lat) const;
  std::string tag() const;
};

struct MeanField {
  Field phi;               // zero-mean on the torus
  std::vector<Field> grad; // per axis
  double grad_inf() const;
  double phi_inf() const;
};

MeanField mean_field(const Density& rho, const Interaction& w);

// c_{d,a} = 2^{d-a} pi^{d/2} Gamma((d-a)/2) / Gamma(a/2)
double riesz_multiplier_constant(int d, double a);

// Lemma-style interpolation ratios: LHS / ( ||zeta||_{r_eps}^theta ||zeta||_1^{1-theta} )
struct InterpolationReport {
  double phi_inf = 0.0, grad_inf = 0.0;     // LHS values
  double rhs_phi = 0.0, rhs_grad = 0.0;     // RHS products
  double ratio_phi = 0.0, ratio_grad = 0.0; // zero for zero input
};
InterpolationReport interpolation_check(const Density& zeta, const Interaction& w,
                                        const Params& params);

// dt = safety * hbar / ||gamma0||_{X_in}
double lwp_timestep(const OrbitalEnsemble& gamma0, double safety);

struct HartreeOptions {
  double conservation_tol = 1e-8; // relative trace drift per unit time
  double blowup_ceiling = std::numeric_limits<double>::infinity();
  bool allow_step_override = false; // permit dt above the LWP scale
  int diag_stride = 1;              // cheap diagnostics every k steps
};

struct HartreeDiagRow {
  double t = 0.0;
  double trace = 0.0;
  double rho_l1 = 0.0;
  double rho_lr = 0.0;   // L^{r_eps}
  double rho_linf = 0.0;
  double phi_inf = 0.0;
  double grad_phi_inf = 0.0;
};

struct HartreeSnapshot {
  double t = 0.0;
  OrbitalEnsemble state;
  Density rho;
  Field phi;
  double l2_norm = 0.0;       // ||gamma||_{L^2_hbar}
  double weighted_mom = 0.0;  // ||<hbar grad>^{sig} gamma <hbar grad>^{sig}||_{L^{r_eps}}
};

struct HartreeTrajectory {
  Params params;
  TimeGrid grid;
  std::vector<HartreeDiagRow> diag;
  std::vector<HartreeSnapshot> snapshots;
  PotentialTrajectory phi_samples; // at snapshot times
  bool halted = false;
  std::string halt_reason;

  const HartreeSnapshot& last() const { return snapshots.back(); }
};

HartreeTrajectory evolve(const OrbitalEnsemble& gamma0, const Interaction& w,
                         const TimeGrid& grid, const HartreeOptions& opts = {});

// slopes of log||rho(t)||_{L^r} and log||grad Phi(t)||_inf against log<t> over
// [t_lo, t_hi], with the generalized-d target exponents -(d-2+a+eps), -(d-2+a)
struct DecayReport {
  PowerLawFit rho_fit;
  PowerLawFit grad_phi_fit;
  double target_rho = 0.0;
  double target_grad_phi = 0.0;
  double r = 0.0;
};
DecayReport decay_report(const HartreeTrajectory& traj, double r, double t_lo, double t_hi);

// backward-frame Cauchy series D(t_k, t_{k+1}) = || U*(t_{k+1}) gamma U(t_{k+1})
// - U*(t_k) gamma U(t_k) ||_{L^1_hbar} over snapshot checkpoints
struct ScatteringReport {
  std::vector<double> t_lo, t_hi, cauchy;
  OrbitalEnsemble gamma_plus; // last backward-propagated snapshot
  PowerLawFit tail_fit;       // log D against log<t_lo>
  double predicted_tail = 0.0; // 1 - a
  bool no_scattering = false;
};
ScatteringReport scattering_report(const HartreeTrajectory& traj);

OrbitalEnsemble backward_frame(const OrbitalEnsemble& gamma, double t);

} // namespace sclab
