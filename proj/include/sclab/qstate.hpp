#pragma once

// Finite-rank density operators gamma = sum_j lambda_j |psi_j><psi_j|, their
// semi-classically rescaled densities rho(x) = (2 pi hbar)^d sum lambda |psi|^2,
// rescaled Schatten norms ||.||_{L^r_hbar} = (2 pi hbar)^{d/r} ||.||_{S^r}, and
// the scattering vector field  J_t = x + i t hbar grad.

#include "sclab/lattice.hpp"

#include <optional>
#include <string>

namespace sclab {

// Physical / exponent bookkeeping. The derived pair
//   r_eps     = d / (2 - a - eps)      (clamped to >= 1)
//   sigma_eps = (1 + a + 2 eps) / 2
// reduces to the d = 3 originals 3/(2-a-eps), (1+a+2eps)/2; see README for the
// full general-d exponent table.
struct Params {
  double hbar = 1.0;
  int d = 1;
  double a = 1.2;       // interaction exponent (tail label in smooth mode)
  int sign = 1;         // +1 repulsive / defocusing, -1 attractive / focusing
  double epsilon = 0.01;

  Params() = default;
  Params(double hbar_, int d_, double a_, int sign_, double eps_);

  double r_eps() const;
  double sigma_eps() const;
  // set when a falls outside (0, d) or outside the short-range window (1, 5/3)
  std::optional<std::string> range_warning() const;
};

struct OrbitalEnsemble {
  Lattice lat;
  Params params;
  std::vector<Field> orbitals;
  std::vector<double> occupations; // lambda_j >= 0

  static constexpr int kDefaultRankCap = 8192;

  OrbitalEnsemble() = default;
  OrbitalEnsemble(const Lattice& l, const Params& p) : lat(l), params(p) {}

  int rank() const { return static_cast<int>(orbitals.size()); }
  void add(Field orbital, double occupation, int rank_cap = kDefaultRankCap);
  double trace() const; // sum lambda_j ||psi_j||^2
};

struct Density {
  Lattice lat;
  std::vector<double> v;

  Density() = default;
  explicit Density(const Lattice& l) : lat(l), v(l.size(), 0.0) {}

  double integral() const;      // sum rho h^d
  double lp(double r) const;    // lattice quadrature norm
  Field as_field() const;
};

// rho(x) = (2 pi hbar)^d sum_j lambda_j |psi_j(x)|^2
Density density(const OrbitalEnsemble& gamma);

// (2 pi hbar)^{d/r} (sum mu_k^r)^{1/r}, mu_k the eigenvalues of the Gram
// matrix G_jk = sqrt(lambda_j lambda_k) <psi_j|psi_k>. r = inf gives the
// rescaling-free operator norm (largest eigenvalue).
double schatten_norm(const OrbitalEnsemble& gamma, double r);

enum class WeightKind { Position, Momentum, VectorField };

// schatten_norm of the ensemble with every orbital replaced by W psi_j, where
// W is <x>^sigma, <hbar grad>^sigma, or <J_t>^sigma. All three weights are
// self-adjoint, so Gram eigenvalues are the singular values.
double weighted_schatten_norm(const OrbitalEnsemble& gamma, double r, double sigma,
                              WeightKind kind, double t = 0.0);

// ||gamma||_{L^1_hbar} + ||<hbar grad>^{sigma_eps} gamma <hbar grad>^{sigma_eps}||_{L^{r_eps}_hbar}
double xin_norm(const OrbitalEnsemble& gamma);

enum class BracketKind { Japanese, Absolute }; // <J>^sigma vs |J|^sigma

// <J_t>^sigma psi = e^{i|x|^2/(2 t hbar)} <t hbar grad>^sigma e^{-i|x|^2/(2 t hbar)} psi
// for t != 0; <x>^sigma psi at t = 0 (J_0 = x). sigma = 0 returns psi.
Field apply_vector_field(const Field& psi, double t, double sigma, double hbar,
                         BracketKind kind = BracketKind::Japanese);

// orbital-wise map, occupations kept
OrbitalEnsemble map_orbitals(const OrbitalEnsemble& gamma,
                             const std::function<Field(const Field&)>& op);

// Trace-norm of the signed difference gamma1 - gamma2 (rescaled by (2 pi hbar)^d),
// via the Hermitian form G^{1/2} diag(c) G^{1/2} of the stacked ensemble.
double trace_norm_difference(const OrbitalEnsemble& g1, const OrbitalEnsemble& g2);

// Gram eigenvalues of the (possibly weighted) ensemble, ascending; tiny
// negatives (discretization noise) are floored to zero.
std::vector<double> gram_eigenvalues(const OrbitalEnsemble& gamma);

} // namespace sclab
