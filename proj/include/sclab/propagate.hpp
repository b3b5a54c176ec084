#pragma once

// Linear flows and their diagnostics: the free Schroedinger group
// U(t) = e^{i t hbar Delta / 2}, potential-perturbed flows by Strang
// splitting, free transport on phase space, finite-time wave operators
// W_V(t) = U(t)* U_V(t,0) U(0), and the time-weighted potential norm
//   ||V||_{Z^sigma} = int <t> ( ||V(t)||_{W^{1,inf}} + ||V(t)||_{W^{sigma, d/(sigma-1)}} ) dt.

#include "sclab/lattice.hpp"
#include "sclab/qstate.hpp"

#include <cstdint>

namespace sclab {

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 0.0;
  double dt = 0.0;
  int snapshot_stride = 1;

  TimeGrid() = default;
  TimeGrid(double t0_, double t1_, double dt_, int stride = 1);

  std::int64_t steps() const { return steps_; }

private:
  std::int64_t steps_ = 0;
};

struct PotentialTrajectory {
  std::vector<double> times;
  std::vector<Field> potentials; // real fields

  void add(double t, Field V);
  bool empty() const { return times.empty(); }
  // piecewise-linear sample; clamped at the ends
  Field at(double t) const;
};

// spectral multiplier e^{-i t hbar |xi|^2 / 2}; unitary
Field free_schrodinger(const Field& u, double t, double hbar);
OrbitalEnsemble free_schrodinger(const OrbitalEnsemble& gamma, double t);

// f(q - t p, p) by exact per-row phase shift; warns (optionally throws) when a
// row's support leaves the box
struct TransportOptions {
  bool strict_support = false;
  double support_tol = 1e-10; // relative row magnitude that counts as support
};
PhaseSpaceField free_transport(const PhaseSpaceField& f, double t,
                               const TransportOptions& opts = {});

// Strang splitting for i hbar u_t = (-hbar^2/2 Delta + V(t)) u.
// Refuses steps with ||V||_inf dt / hbar > stability_cap unless overridden.
struct FlowOptions {
  double stability_cap = 2.0;
  bool override_stability = false;
};

struct FlowTrajectory {
  std::vector<double> times;
  std::vector<Field> states; // at snapshot times (always includes t0 and t1)
};

FlowTrajectory perturbed_flow(const Field& u, const PotentialTrajectory& V,
                              const TimeGrid& grid, double hbar,
                              const FlowOptions& opts = {});

// endpoint-only helpers; t may be negative (reverse evolution)
Field evolve_perturbed(const Field& u, const PotentialTrajectory& V, double t0, double t1,
                       double dt, double hbar, const FlowOptions& opts = {});

// U(t)* U_V(t,0) U(0) u
Field wave_operator_apply(const Field& u, const PotentialTrajectory& V, double t,
                          double dt, double hbar, const FlowOptions& opts = {});
// adjoint W* u = U(0)* U_V(0,t) U(t) u
Field wave_operator_adjoint_apply(const Field& u, const PotentialTrajectory& V, double t,
                                  double dt, double hbar, const FlowOptions& opts = {});

// time quadrature (trapezoid over the stored samples) of
// <t> ( || |grad| V ||_inf + || |grad|^sigma V ||_{d/(sigma-1)} ); sigma > 1
double z_norm(const PotentialTrajectory& V, double sigma);
double z_integrand(const Field& V, double sigma); // the instantaneous bracket

// one decay-series row: measured norm plus the two Proposition-style ceilings
struct DecayRow {
  double t = 0.0;
  double norm = 0.0;
  double ceiling_static = 0.0;
  double ceiling_decay = 0.0;
};

// || rho_{U(t) gamma0 U(t)*} ||_{L^r} at the given times, with ceilings
// C_{sigma,r} ||<hbar grad>^s g <hbar grad>^s||_{L^r} and
// C_{sigma,r} |t|^{-d/r'} ||<x>^s g <x>^s||_{L^r};  sigma defaults to the
// smallest admissible weight above d/(2 r').
std::vector<DecayRow> free_dispersion_probe(const OrbitalEnsemble& gamma0, double r,
                                            std::span<const double> times,
                                            double sigma = -1.0);

// power-iteration estimate of || <x>^alpha W_V(t) <x>^{-alpha} ||_{B(L^2)};
// deterministic seeded starts, reported as (best estimate, spread over starts)
struct OperatorNormEstimate {
  double value = 0.0;
  double spread = 0.0; // max - min over starts
  int iterations = 0;
};

OperatorNormEstimate weighted_wave_operator_norm(const Lattice& lat,
                                                 const PotentialTrajectory& V, double t,
                                                 double dt, double hbar, double alpha,
                                                 int starts = 20, int iters = 30,
                                                 std::uint64_t seed = 12345,
                                                 const FlowOptions& opts = {});

} // namespace sclab
