#pragma once

// Periodic spatial and phase-space lattices with their discrete Fourier duals.
//
// Conventions (everything downstream depends on these):
//   grid        x_j = -L/2 + j*h,  h = L/n,  j = 0..n-1, per axis
//   frequencies xi_k = 2*pi*k/L,   k in {-n/2, ..., n/2-1} stored in FFT order
//                (index k holds frequency 2*pi*signed(k)/L, signed(k) = k < n/2 ? k : k-n)
//   forward     ghat(xi) = sum_x g(x) e^{-i x.xi} h^d      (quadrature of int g e^{-ix.xi} dx)
//   inverse     g(x)     = L^{-d} sum_xi ghat(xi) e^{+i x.xi}
//   Parseval    sum_x |g|^2 h^d = L^{-d} sum_xi |ghat|^2
//
// Phase-space lattices pair a position lattice (q axes) with an independent
// momentum box p in [-P, P), n_p points per axis; the p axes use the same
// conventions with box length 2P.

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sclab {

using cplx = std::complex<double>;

inline constexpr double PI = 3.14159265358979323846;

// <x> = sqrt(1 + |x|^2)
inline double jbracket(double x) { return std::sqrt(1.0 + x * x); }

struct Lattice {
  int d = 1;        // spatial dimension, 1..3
  int n = 0;        // points per axis, power of two
  double length = 0; // box length L, grid spans [-L/2, L/2) per axis

  Lattice() = default;
  Lattice(int d_, int n_, double length_);

  double spacing() const { return length / n; }
  std::int64_t size() const;
  double cell_volume() const; // h^d

  double coord(int j) const { return -0.5 * length + j * spacing(); }
  // frequency of FFT-ordered index k
  double freq(int k) const {
    int s = (k < n / 2) ? k : k - n;
    return 2.0 * PI * s / length;
  }

  bool operator==(const Lattice&) const = default;
};

struct Field {
  Lattice lat;
  std::vector<cplx> v;

  Field() = default;
  explicit Field(const Lattice& l) : lat(l), v(l.size(), cplx(0.0)) {}

  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }
  cplx& operator[](std::int64_t i) { return v[i]; }
  const cplx& operator[](std::int64_t i) const { return v[i]; }
};

// Sample a scalar function of the position coordinates.
Field sample(const Lattice& lat, const std::function<cplx(std::span<const double>)>& fn);

// Transforms under the conventions above. Out-of-place, input untouched.
Field to_fourier(const Field& f);
Field from_fourier(const Field& fhat);

// inverse( symbol(xi) * forward(f) ); symbol receives the frequency vector.
Field fourier_multiplier(const Field& f,
                         const std::function<cplx(std::span<const double>)>& symbol);

// (sum |f|^r h^d)^{1/r}; max|f| for r = infinity. r < 1 is a domain error.
double lp_norm(const Field& f, double r);

double l2_inner_real(const Field& a, const Field& b); // Re <a|b> with h^d weight
cplx l2_inner(const Field& a, const Field& b);        // <a|b> = sum conj(a) b h^d

// ---------------------------------------------------------------------------
// phase space

struct PhaseSpaceLattice {
  Lattice q;     // position axes
  int np = 0;    // points per momentum axis (power of two)
  double pmax = 0; // momentum box [-P, P) per axis

  PhaseSpaceLattice() = default;
  PhaseSpaceLattice(const Lattice& q_, int np_, double pmax_);

  int d() const { return q.d; }
  double p_spacing() const { return 2.0 * pmax / np; }
  double p_coord(int j) const { return -pmax + j * p_spacing(); }
  double p_freq(int k) const { // dual of the p axes (box length 2P)
    int s = (k < np / 2) ? k : k - np;
    return 2.0 * PI * s / (2.0 * pmax);
  }
  std::int64_t q_size() const { return q.size(); }
  std::int64_t p_size() const;
  std::int64_t size() const { return q_size() * p_size(); }
  double cell_volume() const; // h_q^d * h_p^d

  bool operator==(const PhaseSpaceLattice&) const = default;
};

// Values stored q-major: v[iq * p_size() + ip], p fastest.
struct PhaseSpaceField {
  PhaseSpaceLattice lat;
  std::vector<cplx> v;

  PhaseSpaceField() = default;
  explicit PhaseSpaceField(const PhaseSpaceLattice& l) : lat(l), v(l.size(), cplx(0.0)) {}

  cplx& at(std::int64_t iq, std::int64_t ip) { return v[iq * lat.p_size() + ip]; }
  const cplx& at(std::int64_t iq, std::int64_t ip) const { return v[iq * lat.p_size() + ip]; }
};

PhaseSpaceField sample(const PhaseSpaceLattice& lat,
                       const std::function<cplx(std::span<const double>, std::span<const double>)>& fn);

double lp_norm(const PhaseSpaceField& f, double r);
cplx l2_inner(const PhaseSpaceField& a, const PhaseSpaceField& b);

// ||<q>^sigma f||_r + ||<p>^sigma f||_r
double weighted_norm(const PhaseSpaceField& f, double r, double sigma);

// Full 2d-dimensional transform of a phase-space field (q axes then p axes),
// and a multiplier acting on (xi_q, eta_p).
PhaseSpaceField ps_to_fourier(const PhaseSpaceField& f);
PhaseSpaceField ps_from_fourier(const PhaseSpaceField& fhat);
PhaseSpaceField ps_fourier_multiplier(
    const PhaseSpaceField& f,
    const std::function<cplx(std::span<const double>, std::span<const double>)>& symbol);

// Axis-wise helpers used by the transport and transform kernels. `axis` counts
// q axes first, then p axes. The per-line shift phase is supplied by `phase`,
// which receives the flat index of the orthogonal slice and the axis frequency.
namespace detail {
void fft_axis_inplace(std::vector<cplx>& v, std::span<const std::int64_t> dims,
                      int axis, int sign);
// 1-d complex FFT, length power of two; sign -1 forward (e^{-2pi i jk/n})
void dft_pow2(cplx* data, int n, int sign);
// apply scale * (-1)^{k1+...+kd} (the half-box offset phase), in place
void checker_scale(std::vector<cplx>& v, std::span<const std::int64_t> dims, double scale);
} // namespace detail

} // namespace sclab
