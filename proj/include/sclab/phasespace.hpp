#pragma once

// Phase-space toolkit: Wigner transform, Weyl quantization, Husimi transform,
// Toeplitz quantization, coherent states, the semi-classical commutator
// remainder, the weak-topology metric and H^{-1} norms.
//
// Wigner convention:
//   Wig[gamma](q,p) = int gamma(q + y/2, q - y/2) e^{-i y.p / hbar} dy
// realized per orbital through the ambiguity products
//   A(q,y) = psi(q + y/2) conj(psi(q - y/2))
// with half-shifts taken from the band-limited interpolant (spectral zero
// padding) and a plain y -> p transform. The momentum grid is the image of the
// lattice frequencies, p = hbar * xi, so no resampling is ever needed:
//   n_p = n,  P = hbar * pi * n / L,  h_p = 2 pi hbar / L.

#include "sclab/lattice.hpp"
#include "sclab/qstate.hpp"

namespace sclab {

struct TransformOptions {
  bool strict_aliasing = false; // throw instead of warn when spectra touch Nyquist
  double tail_tol = 1e-8;       // top-octave spectral mass triggering the alias check
};

struct CoherentState {
  std::vector<double> q0, p0;
  double hbar = 1.0;
  Field field; // (pi hbar)^{-d/4} e^{-|x-q0|^2/(2 hbar)} e^{i (x-q0).p0 / hbar}, min-image
};

CoherentState make_coherent_state(const Lattice& lat, double hbar,
                                  std::span<const double> q0, std::span<const double> p0);

// hbar-adapted momentum grid for Wigner-type transforms of states on `lat`
PhaseSpaceLattice wigner_lattice(const Lattice& lat, double hbar);

// band-limited samples on the 2x refined grid (spectral zero padding)
Field half_grid_interpolant(const Field& f);

PhaseSpaceField wigner(const OrbitalEnsemble& gamma, const TransformOptions& opts = {});

// cross term  sum_j lambda_j int phi_j(q+y/2) conj(psi_j(q-y/2)) e^{-iy.p/hbar} dy
PhaseSpaceField cross_wigner(const Lattice& lat, double hbar,
                             std::span<const Field> left, std::span<const Field> right,
                             std::span<const double> weights);

// Dense Weyl kernel, d = 1 only:
//   K(x,x') = (2 pi hbar)^{-1} int f((x+x')/2, p) e^{i p (x-x')/hbar} dp
struct WeylKernel {
  Lattice lat;
  double hbar = 1.0;
  std::vector<cplx> k; // row-major K(x_i, x_j)

  cplx at(int i, int j) const { return k[static_cast<std::int64_t>(i) * lat.n + j]; }
};

WeylKernel weyl(const PhaseSpaceField& f, double hbar);
Field apply(const WeylKernel& kernel, const Field& u);
std::vector<double> eigenvalues(const WeylKernel& kernel); // ascending, real part of spectrum
PhaseSpaceField wigner_of_kernel(const WeylKernel& kernel);

// matrix-free Weyl action, any d
Field weyl_apply(const PhaseSpaceField& f, const Field& u, double hbar);

// (2 pi hbar)^d Tr(gamma . Weyl[f]) for self-adjoint finite-rank gamma (d = 1)
double trace_weyl(const OrbitalEnsemble& gamma, const WeylKernel& kernel);

// Hus[gamma](q,p) = <phi_(q,p) | gamma | phi_(q,p)>, computed by Gabor-windowed
// transforms (coherent-state overlaps), not by smoothing the Wigner transform.
PhaseSpaceField husimi(const OrbitalEnsemble& gamma);

// G^hbar * f with G^hbar(z) = e^{-|z|^2/hbar} / (pi hbar)^d on phase space
PhaseSpaceField gaussian_smooth(const PhaseSpaceField& f, double hbar);

// Toep[f] ~ (2 pi hbar)^{-d} sum_k w_k f(q_k,p_k) |phi_k><phi_k| over the grid
// quadrature, truncated to the rank_budget largest weights. f must be >= 0.
OrbitalEnsemble toeplitz(const PhaseSpaceField& f, int rank_budget,
                         const Lattice& target, const Params& params);

// R[gamma; V](q,p) = F_{y->p}[ hbar^2 Q[V](q,y) gamma(q + hbar y/2, q - hbar y/2) ],
// Q[V](q,y) = V(q + hbar y/2) - V(q - hbar y/2) - grad V(q) . hbar y.
// Vanishes identically for affine V; purely imaginary for self-adjoint gamma.
PhaseSpaceField remainder(const OrbitalEnsemble& gamma, const Field& V);

// || <grad_q>^{-sq} <grad_p>^{-sp} R ||_{L^2}
double remainder_weighted_norm(const PhaseSpaceField& R, double sq, double sp);

// finite-difference gradient (6th order centered, periodic); exact for affine
// data away from the wrap cells, used where spectral derivatives of
// non-periodic-compatible fields would ring
std::vector<Field> gradient_fd6(const Field& V);

// ---------------------------------------------------------------------------
// weak-topology metric machinery

// Hermite tensor products on (q,p), enumerated by total degree then
// lexicographic multi-index; stored as separable per-axis factors.
struct TestSet {
  PhaseSpaceLattice lat;
  double scale = 1.0;
  std::vector<std::vector<int>> degrees;    // member -> multi-index over 2d axes
  std::vector<std::vector<double>> q_factor; // degree -> values on the q axis
  std::vector<std::vector<double>> p_factor; // degree -> values on the p axis

  int size() const { return static_cast<int>(degrees.size()); }
  cplx pairing(const PhaseSpaceField& g, int member) const; // <psi_member | g>
  PhaseSpaceField materialize(int member) const;
};

// cap_q / cap_p bound the per-axis Hermite degree; -1 derives them from
// containment in the box. Explicit caps beyond containment are a capability
// error. Cross-lattice comparisons must pass common explicit caps so the
// degree enumeration agrees.
TestSet make_test_set(int N, const PhaseSpaceLattice& lat, double scale = 1.0,
                      int cap_q = -1, int cap_p = -1);

// containment-derived per-axis degree caps (q, p) for the given scale
std::pair<int, int> test_set_caps(const PhaseSpaceLattice& lat, double scale);

struct WeakMetric {
  double value = 0.0;
  double truncation_bound = 0.0; // 2^-N ||g1 - g2||_2
};

WeakMetric weak_metric(const PhaseSpaceField& g1, const PhaseSpaceField& g2,
                       const TestSet& tests);

// same series with each pairing quadratured on its own lattice; used when the
// two fields live on different (hbar-adapted) momentum grids
double weak_metric_cross(const PhaseSpaceField& g1, const TestSet& tests1,
                         const PhaseSpaceField& g2, const TestSet& tests2);

// || <(xi_q, eta_p)>^{-1} ghat ||_2 under the module transform convention
double hminus1_norm(const PhaseSpaceField& g);

double max_imag(const PhaseSpaceField& f);
double min_real(const PhaseSpaceField& f);

} // namespace sclab
