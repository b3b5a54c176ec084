#pragma once

// Semi-Lagrangian spectral Vlasov solver on the (q,p) torus (d = 1 phase
// space is the supported production dimension),
//   dt f + p . grad_q f - grad Phi . grad_p f = 0,   Phi = w * rho_f,
// by Strang splitting: half free transport, exact p-shift by Delta t grad Phi
// per q column, half free transport. Both shifts are spectral phase
// multiplications, so mass (the zero mode) is conserved to roundoff.

#include "sclab/fit.hpp"
#include "sclab/hartree.hpp"
#include "sclab/lattice.hpp"
#include "sclab/propagate.hpp"

namespace sclab {

// p-quadrature of f per q cell
Density vlasov_density(const PhaseSpaceField& f);

struct VlasovOptions {
  double cfl_safety = 1.0;        // |grad Phi| dt <= safety * h_p
  double mass_tol = 1e-6;         // relative drift per unit time
  double undershoot_tol = 1e-9;   // f >= -tol * max f
  TransportOptions transport{};
};

PhaseSpaceField vlasov_step(const PhaseSpaceField& f, const Interaction& w, double dt,
                            const VlasovOptions& opts = {});

struct VlasovDiagRow {
  double t = 0.0;
  double mass = 0.0;
  double l2 = 0.0;
  double rho_l1 = 0.0, rho_lr = 0.0, rho_linf = 0.0;
  double grad_phi_inf = 0.0;
  double min_f = 0.0;
};

struct VlasovSnapshot {
  double t = 0.0;
  PhaseSpaceField f;
  Density rho;
  Field phi;
};

struct VlasovTrajectory {
  TimeGrid grid;
  double r_eps = 2.0; // norm exponent used for rho_lr
  std::vector<VlasovDiagRow> diag;
  std::vector<VlasovSnapshot> snapshots;
  bool halted = false;
  std::string halt_reason;
};

VlasovTrajectory vlasov_run(const PhaseSpaceField& f0, const Interaction& w,
                            const TimeGrid& grid, double r_eps,
                            const VlasovOptions& opts = {});

// g(t_k) = U(-t_k) f(t_k) per snapshot
std::vector<PhaseSpaceField> moving_frame(const VlasovTrajectory& traj,
                                          const TransportOptions& opts = {});

struct VlasovScatteringReport {
  std::vector<double> t_lo, t_hi, cauchy; // ||g(t_{k+1}) - g(t_k)||_{H^-1}
  PhaseSpaceField f_plus;                 // last moving-frame snapshot
  PowerLawFit density_decay;              // log||rho(t)||_{L^r} fit over t >= 1
  double density_decay_r = 0.0;
  bool no_scattering = false;
};

VlasovScatteringReport vlasov_scattering_report(const VlasovTrajectory& traj,
                                                double fit_r = -1.0);

} // namespace sclab
