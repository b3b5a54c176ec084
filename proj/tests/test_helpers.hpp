#pragma once

#include "sclab/lattice.hpp"
#include "sclab/phasespace.hpp"
#include "sclab/qstate.hpp"

#include <random>

namespace sclab::testing {

inline Field gaussian_field(const Lattice& lat, double width = 1.0, double center = 0.0) {
  return sample(lat, [&](std::span<const double> x) -> cplx {
    double e = 0.0;
    for (double c : x) e += (c - center) * (c - center);
    return std::exp(-e / (2.0 * width * width));
  });
}

// random superposition of coherent states, deterministic in the seed
inline OrbitalEnsemble random_ensemble(const Lattice& lat, const Params& par, int rank,
                                       std::uint64_t seed, double spread = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-spread, spread);
  std::uniform_real_distribution<double> occ(0.2, 1.0);
  OrbitalEnsemble gamma(lat, par);
  std::vector<double> q0(lat.d), p0(lat.d);
  for (int j = 0; j < rank; ++j) {
    for (int a = 0; a < lat.d; ++a) {
      q0[a] = uni(rng);
      p0[a] = uni(rng);
    }
    gamma.add(make_coherent_state(lat, par.hbar, q0, p0).field, occ(rng));
  }
  return gamma;
}

inline double sup_diff(const PhaseSpaceField& a, const PhaseSpaceField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

inline double sup_abs(const PhaseSpaceField& a) {
  double m = 0.0;
  for (const cplx& z : a.v) m = std::max(m, std::abs(z));
  return m;
}

inline double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

inline double sup_abs(const Field& a) {
  double m = 0.0;
  for (const cplx& z : a.v) m = std::max(m, std::abs(z));
  return m;
}

} // namespace sclab::testing
