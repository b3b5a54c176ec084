#include "sclab/phasespace.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace sclab {

// ---------------------------------------------------------------------------
// coherent states

CoherentState make_coherent_state(const Lattice& lat, double hbar,
                                  std::span<const double> q0, std::span<const double> p0) {
  if (static_cast<int>(q0.size()) != lat.d || static_cast<int>(p0.size()) != lat.d)
    throw std::invalid_argument("make_coherent_state: center dimension mismatch");
  CoherentState cs;
  cs.q0.assign(q0.begin(), q0.end());
  cs.p0.assign(p0.begin(), p0.end());
  cs.hbar = hbar;
  const double L = lat.length;
  const double amp = std::pow(PI * hbar, -0.25 * lat.d);
  cs.field = sample(lat, [&](std::span<const double> x) -> cplx {
    double r2 = 0.0, phase = 0.0;
    for (int a = 0; a < lat.d; ++a) {
      double dx = x[a] - q0[a];
      dx -= L * std::round(dx / L); // min-image displacement on the torus
      r2 += dx * dx;
      phase += dx * p0[a];
    }
    return amp * std::exp(-r2 / (2.0 * hbar)) * std::polar(1.0, phase / hbar);
  });
  return cs;
}

PhaseSpaceLattice wigner_lattice(const Lattice& lat, double hbar) {
  return PhaseSpaceLattice(lat, lat.n, hbar * PI * lat.n / lat.length);
}

Field half_grid_interpolant(const Field& f) {
  const Lattice& lat = f.lat;
  Field fhat = to_fourier(f);
  Lattice big(lat.d, 2 * lat.n, lat.length);
  Field bighat(big);
  const int n = lat.n, N = 2 * lat.n;
  std::vector<int> idx(lat.d, 0);
  for (std::int64_t flat = 0; flat < fhat.size(); ++flat) {
    std::int64_t bflat = 0;
    for (int a = 0; a < lat.d; ++a) {
      int s = (idx[a] < n / 2) ? idx[a] : idx[a] - n; // signed frequency index
      int b = (s + N) % N;
      bflat = bflat * N + b;
    }
    bighat.v[bflat] = fhat.v[flat];
    for (int a = lat.d - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  return from_fourier(bighat);
}

// ---------------------------------------------------------------------------
// ambiguity -> phase-space core

namespace {

// y -> p transform of the trailing d axes of A (layout [q^d, y^d], all length n),
// accumulated into `out` with weight w. The p axes come out in linear order.
void ambiguity_to_phase_space(std::vector<cplx>& A, const Lattice& lat,
                              PhaseSpaceField& out, double w) {
  const int d = lat.d, n = lat.n;
  std::vector<std::int64_t> dims(2 * d, n);
  for (int a = 0; a < d; ++a) detail::fft_axis_inplace(A, dims, d + a, -1);

  const double hd = lat.cell_volume();
  const std::int64_t nd = lat.size();
  std::vector<int> jp(d, 0);
  for (std::int64_t q = 0; q < nd; ++q) {
    std::fill(jp.begin(), jp.end(), 0);
    for (std::int64_t pl = 0; pl < nd; ++pl) {
      std::int64_t kflat = 0;
      int parity = 0;
      for (int a = 0; a < d; ++a) {
        int k = (jp[a] + n / 2) % n;
        kflat = kflat * n + k;
        parity += jp[a] + n / 2;
      }
      double s = (parity & 1) ? -hd : hd;
      out.v[q * nd + pl] += w * s * A[q * nd + kflat];
      for (int a = d - 1; a >= 0; --a) {
        if (++jp[a] < n) break;
        jp[a] = 0;
      }
    }
  }
}

// A(q_j, y_m) = lh(q + y/2) * conj(rh(q - y/2)) from half-grid interpolants
void fill_ambiguity(std::vector<cplx>& A, const Lattice& lat,
                    const Field& lh, const Field& rh) {
  const int d = lat.d, n = lat.n, N = 2 * n;
  const std::int64_t nd = lat.size();
  if (d == 1) {
    for (int j = 0; j < n; ++j) {
      const int base = 2 * j - n / 2 + 2 * N; // keep mod arguments positive
      for (int m = 0; m < n; ++m) {
        int mp = (base + m) % N;
        int mm = (base - m + n) % N;
        A[static_cast<std::int64_t>(j) * n + m] = lh.v[mp] * std::conj(rh.v[mm]);
      }
    }
    return;
  }
  std::vector<int> jv(d, 0), mv(d, 0);
  for (std::int64_t q = 0; q < nd; ++q) {
    std::fill(mv.begin(), mv.end(), 0);
    for (std::int64_t y = 0; y < nd; ++y) {
      std::int64_t mp = 0, mm = 0;
      for (int a = 0; a < d; ++a) {
        int bp = (2 * jv[a] + mv[a] - n / 2 + 2 * N) % N;
        int bm = (2 * jv[a] - mv[a] + n / 2 + 2 * N) % N;
        mp = mp * N + bp;
        mm = mm * N + bm;
      }
      A[q * nd + y] = lh.v[mp] * std::conj(rh.v[mm]);
      for (int a = d - 1; a >= 0; --a) {
        if (++mv[a] < n) break;
        mv[a] = 0;
      }
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++jv[a] < n) break;
      jv[a] = 0;
    }
  }
}

void check_alias(const Field& psi, const TransformOptions& opts) {
  Field ph = to_fourier(psi);
  const Lattice& lat = psi.lat;
  double total = 0.0, tail = 0.0;
  std::vector<int> idx(lat.d, 0);
  for (std::int64_t flat = 0; flat < ph.size(); ++flat) {
    double m = std::norm(ph.v[flat]);
    total += m;
    for (int a = 0; a < lat.d; ++a) {
      int s = (idx[a] < lat.n / 2) ? idx[a] : idx[a] - lat.n;
      if (std::abs(s) > lat.n / 4) {
        tail += m;
        break;
      }
    }
    for (int a = lat.d - 1; a >= 0; --a) {
      if (++idx[a] < lat.n) break;
      idx[a] = 0;
    }
  }
  if (total > 0.0 && tail > opts.tail_tol * total) {
    if (opts.strict_aliasing)
      throw std::runtime_error("wigner: orbital spectrum reaches the top octave (aliasing)");
    std::fprintf(stderr, "sclab warning: wigner input has %.2e of its spectral mass "
                         "in the top octave; half-shift products may alias\n",
                 tail / total);
  }
}

void guard_size(const Lattice& lat) {
  if (lat.size() * lat.size() > (std::int64_t{1} << 26))
    throw std::runtime_error("phase-space transform: n^(2d) grid too large at this dimension");
}

} // namespace

PhaseSpaceField cross_wigner(const Lattice& lat, double hbar,
                             std::span<const Field> left, std::span<const Field> right,
                             std::span<const double> weights) {
  if (left.size() != right.size() || left.size() != weights.size())
    throw std::invalid_argument("cross_wigner: mismatched orbital lists");
  guard_size(lat);
  PhaseSpaceField out(wigner_lattice(lat, hbar));
  const std::int64_t nd = lat.size();
  std::vector<cplx> A(nd * nd);
  for (std::size_t j = 0; j < left.size(); ++j) {
    if (weights[j] == 0.0) continue;
    Field lh = half_grid_interpolant(left[j]);
    Field rh = half_grid_interpolant(right[j]);
    fill_ambiguity(A, lat, lh, rh);
    ambiguity_to_phase_space(A, lat, out, weights[j]);
  }
  return out;
}

PhaseSpaceField wigner(const OrbitalEnsemble& gamma, const TransformOptions& opts) {
  for (const Field& psi : gamma.orbitals) check_alias(psi, opts);
  return cross_wigner(gamma.lat, gamma.params.hbar, gamma.orbitals, gamma.orbitals,
                      gamma.occupations);
}

// ---------------------------------------------------------------------------
// Weyl quantization

// On the torus a pair (x, x') is parametrized by the min-image difference
// y in [-L/2, L/2)^d and the midpoint x' + y/2 taken mod L; pairing the
// quadrature phases with the inside midpoint instead would alias O(1) kernel
// mass into the box corners.

WeylKernel weyl(const PhaseSpaceField& f, double hbar) {
  const PhaseSpaceLattice& lat = f.lat;
  if (lat.d() != 1) throw std::runtime_error("weyl: dense kernels are d = 1 only");
  if (lat.q.n > 1024) throw std::runtime_error("weyl: dense kernels limited to n <= 1024");
  const int n = lat.q.n, np = lat.np, N = 2 * n;
  const double h = lat.q.spacing();

  // f on the q half-grid, per p slice
  std::vector<cplx> fh(static_cast<std::int64_t>(N) * np);
  for (int k = 0; k < np; ++k) {
    Field slice(lat.q);
    for (int j = 0; j < n; ++j) slice.v[j] = f.v[static_cast<std::int64_t>(j) * np + k];
    Field hg = half_grid_interpolant(slice);
    for (int m = 0; m < N; ++m) fh[static_cast<std::int64_t>(m) * np + k] = hg.v[m];
  }

  // T(m, delta) = (2 pi hbar)^{-1} sum_k f_h(m, p_k) e^{i p_k delta h / hbar} h_p
  const double pref = lat.p_spacing() / (2.0 * PI * hbar);
  std::vector<cplx> T(static_cast<std::int64_t>(N) * n);
  for (int dl = 0; dl < n; ++dl) {
    const int delta = dl - n / 2;
    const double y = delta * h;
    const cplx step = std::polar(1.0, lat.p_spacing() * y / hbar);
    const cplx phase0 = std::polar(1.0, -lat.pmax * y / hbar);
    for (int m = 0; m < N; ++m) {
      cplx phase = phase0, acc = 0.0;
      const cplx* col = fh.data() + static_cast<std::int64_t>(m) * np;
      for (int k = 0; k < np; ++k) {
        acc += col[k] * phase;
        phase *= step;
      }
      T[static_cast<std::int64_t>(m) * n + dl] = pref * acc;
    }
  }

  WeylKernel ker{lat.q, hbar, std::vector<cplx>(static_cast<std::int64_t>(n) * n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int delta = i - j;
      if (delta >= n / 2) delta -= n;
      if (delta < -n / 2) delta += n;
      const int mid = ((2 * j + delta) % N + N) % N;
      ker.k[static_cast<std::int64_t>(i) * n + j] =
          T[static_cast<std::int64_t>(mid) * n + (delta + n / 2)];
    }
  }
  return ker;
}

Field apply(const WeylKernel& kernel, const Field& u) {
  if (!(u.lat == kernel.lat)) throw std::invalid_argument("WeylKernel apply: lattice mismatch");
  const int n = kernel.lat.n;
  Field out(kernel.lat);
  const double h = kernel.lat.spacing();
  for (int i = 0; i < n; ++i) {
    cplx acc = 0.0;
    const cplx* row = kernel.k.data() + static_cast<std::int64_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += row[j] * u.v[j];
    out.v[i] = acc * h;
  }
  return out;
}

std::vector<double> eigenvalues(const WeylKernel& kernel) {
  const int n = kernel.lat.n;
  const double h = kernel.lat.spacing();
  Eigen::MatrixXcd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      M(i, j) = kernel.k[static_cast<std::int64_t>(i) * n + j] * h;
  Eigen::MatrixXcd H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("WeylKernel eigenvalues failed");
  return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + n);
}

PhaseSpaceField wigner_of_kernel(const WeylKernel& kernel) {
  const int n = kernel.lat.n, N = 2 * n;
  Lattice two(2, n, kernel.lat.length);
  Field K2(two);
  K2.v = kernel.k;
  Field Kh = half_grid_interpolant(K2); // (2n)^2 samples of K(x, x')

  PhaseSpaceField out(wigner_lattice(kernel.lat, kernel.hbar));
  std::vector<cplx> A(static_cast<std::int64_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    const int base = 2 * j - n / 2 + 2 * N;
    for (int m = 0; m < n; ++m) {
      int mp = (base + m) % N;
      int mm = (base - m + n) % N;
      A[static_cast<std::int64_t>(j) * n + m] = Kh.v[static_cast<std::int64_t>(mp) * N + mm];
    }
  }
  ambiguity_to_phase_space(A, kernel.lat, out, 1.0);
  return out;
}

Field weyl_apply(const PhaseSpaceField& f, const Field& u, double hbar) {
  const PhaseSpaceLattice& lat = f.lat;
  if (!(u.lat == lat.q)) throw std::invalid_argument("weyl_apply: lattice mismatch");
  const int d = lat.d(), n = lat.q.n, N = 2 * n;
  const std::int64_t nd = lat.q_size(), npd = lat.p_size();
  std::int64_t Nd = 1;
  for (int a = 0; a < d; ++a) Nd *= N;
  if (nd * Nd * npd > (std::int64_t{1} << 31))
    throw std::runtime_error("weyl_apply: grid too large for the dense action");

  // f on the q half-grid: fh[mbig * npd + k]
  std::vector<cplx> fh(Nd * npd);
  for (std::int64_t k = 0; k < npd; ++k) {
    Field slice(lat.q);
    for (std::int64_t j = 0; j < nd; ++j) slice.v[j] = f.v[j * npd + k];
    Field hg = half_grid_interpolant(slice);
    for (std::int64_t m = 0; m < Nd; ++m) fh[m * npd + k] = hg.v[m];
  }

  // v(x) = (2 pi hbar)^{-d} h^d sum_{y} u(x - y) sum_p f((x - y/2) mod L, p) e^{i p.y/hbar} h_p^d
  Field out(lat.q);
  const double w = std::pow(lat.p_spacing(), d) * std::pow(2.0 * PI * hbar, -d) *
                   lat.q.cell_volume();
  const double h = lat.q.spacing();

  std::vector<int> dv(d, 0), kp(d, 0), iv(d, 0);
  std::vector<cplx> T(Nd);
  std::vector<double> pv(d);
  for (std::int64_t dl = 0; dl < nd; ++dl) { // y = delta * h, delta in [-n/2, n/2)^d
    // T(mbig) = sum_p fh(mbig, p) e^{i p.y / hbar} h_p^d-ish (weights folded below)
    std::fill(kp.begin(), kp.end(), 0);
    std::fill(T.begin(), T.end(), cplx(0.0));
    for (std::int64_t k = 0; k < npd; ++k) {
      double py = 0.0;
      for (int a = 0; a < d; ++a) py += lat.p_coord(kp[a]) * (dv[a] - n / 2) * h;
      const cplx ph = std::polar(1.0, py / hbar);
      for (std::int64_t m = 0; m < Nd; ++m) T[m] += fh[m * npd + k] * ph;
      for (int a = d - 1; a >= 0; --a) {
        if (++kp[a] < lat.np) break;
        kp[a] = 0;
      }
    }
    std::fill(iv.begin(), iv.end(), 0);
    for (std::int64_t i = 0; i < nd; ++i) {
      std::int64_t jsrc = 0, mbig = 0;
      for (int a = 0; a < d; ++a) {
        const int delta = dv[a] - n / 2;
        jsrc = jsrc * n + ((iv[a] - delta) % n + n) % n;
        mbig = mbig * N + ((2 * iv[a] - delta) % N + N) % N;
      }
      out.v[i] += w * u.v[jsrc] * T[mbig];
      for (int a = d - 1; a >= 0; --a) {
        if (++iv[a] < n) break;
        iv[a] = 0;
      }
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++dv[a] < n) break;
      dv[a] = 0;
    }
  }
  return out;
}

double trace_weyl(const OrbitalEnsemble& gamma, const WeylKernel& kernel) {
  double acc = 0.0;
  for (int j = 0; j < gamma.rank(); ++j) {
    Field Ku = apply(kernel, gamma.orbitals[j]);
    acc += gamma.occupations[j] * l2_inner(gamma.orbitals[j], Ku).real();
  }
  return std::pow(2.0 * PI * kernel.hbar, kernel.lat.d) * acc;
}

// ---------------------------------------------------------------------------
// Husimi / Toeplitz

PhaseSpaceField husimi(const OrbitalEnsemble& gamma) {
  const Lattice& lat = gamma.lat;
  guard_size(lat);
  const double hbar = gamma.params.hbar;
  PhaseSpaceField out(wigner_lattice(lat, hbar));
  const int d = lat.d, n = lat.n;
  const std::int64_t nd = lat.size();
  const double pref = std::pow(PI * hbar, -0.5 * d);
  const double L = lat.length;

  std::vector<int> jv(d, 0), xv(d, 0), kp(d, 0);
  Field win(lat);
  for (std::int64_t q = 0; q < nd; ++q) {
    // Gabor window e^{-|x-q|^2/(2 hbar)} (min-image) applied to each orbital
    std::fill(xv.begin(), xv.end(), 0);
    for (std::int64_t x = 0; x < nd; ++x) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        double dx = lat.coord(xv[a]) - lat.coord(jv[a]);
        dx -= L * std::round(dx / L);
        r2 += dx * dx;
      }
      win.v[x] = std::exp(-r2 / (2.0 * hbar));
      for (int a = d - 1; a >= 0; --a) {
        if (++xv[a] < n) break;
        xv[a] = 0;
      }
    }
    for (int j = 0; j < gamma.rank(); ++j) {
      if (gamma.occupations[j] == 0.0) continue;
      Field g = gamma.orbitals[j];
      for (std::int64_t x = 0; x < nd; ++x) g.v[x] *= win.v[x];
      Field ghat = to_fourier(g);
      std::fill(kp.begin(), kp.end(), 0);
      for (std::int64_t pl = 0; pl < nd; ++pl) {
        std::int64_t kflat = 0;
        for (int a = 0; a < d; ++a) kflat = kflat * n + (kp[a] + n / 2) % n;
        out.v[q * nd + pl] += gamma.occupations[j] * pref * std::norm(ghat.v[kflat]);
        for (int a = d - 1; a >= 0; --a) {
          if (++kp[a] < n) break;
          kp[a] = 0;
        }
      }
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++jv[a] < n) break;
      jv[a] = 0;
    }
  }
  return out;
}

PhaseSpaceField gaussian_smooth(const PhaseSpaceField& f, double hbar) {
  return ps_fourier_multiplier(f, [hbar](std::span<const double> xiq,
                                         std::span<const double> etap) -> cplx {
    double z2 = 0.0;
    for (double x : xiq) z2 += x * x;
    for (double e : etap) z2 += e * e;
    return std::exp(-hbar * z2 / 4.0);
  });
}

OrbitalEnsemble toeplitz(const PhaseSpaceField& f, int rank_budget,
                         const Lattice& target, const Params& params) {
  if (rank_budget < 1) throw std::invalid_argument("toeplitz: rank_budget must be >= 1");
  const PhaseSpaceLattice& lat = f.lat;
  const std::int64_t nodes = lat.size();
  if (rank_budget > nodes)
    throw std::runtime_error("toeplitz: rank_budget exceeds quadrature node count");

  double fmax = 0.0;
  for (const cplx& z : f.v) fmax = std::max(fmax, std::abs(z.real()));
  for (const cplx& z : f.v)
    if (z.real() < -1e-12 * std::max(fmax, 1.0))
      throw std::domain_error("toeplitz: f must be nonnegative");

  const double hbar = params.hbar;
  const double w = lat.cell_volume() * std::pow(2.0 * PI * hbar, -lat.d());
  std::vector<std::int64_t> order(nodes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    double fa = f.v[a].real(), fb = f.v[b].real();
    if (fa != fb) return fa > fb;
    return a < b;
  });

  OrbitalEnsemble gamma(target, params);
  const int d = lat.d();
  const std::int64_t npd = lat.p_size();
  std::vector<double> q0(d), p0(d);
  for (int r = 0; r < rank_budget; ++r) {
    const std::int64_t flat = order[r];
    const double occ = w * std::max(f.v[flat].real(), 0.0);
    if (occ == 0.0) break;
    std::int64_t iq = flat / npd, ip = flat % npd;
    for (int a = d - 1; a >= 0; --a) {
      q0[a] = lat.q.coord(static_cast<int>(iq % lat.q.n));
      iq /= lat.q.n;
      p0[a] = lat.p_coord(static_cast<int>(ip % lat.np));
      ip /= lat.np;
    }
    gamma.add(make_coherent_state(target, hbar, q0, p0).field, occ);
  }
  return gamma;
}

// ---------------------------------------------------------------------------
// semi-classical remainder

std::vector<Field> gradient_fd6(const Field& V) {
  const Lattice& lat = V.lat;
  const int n = lat.n, d = lat.d;
  const double h = lat.spacing();
  static const double c1 = 3.0 / 4.0, c2 = -3.0 / 20.0, c3 = 1.0 / 60.0;
  std::vector<Field> grad(d, Field(lat));

  std::vector<std::int64_t> dims(d, n);
  for (int ax = 0; ax < d; ++ax) {
    std::int64_t stride = 1;
    for (int a = ax + 1; a < d; ++a) stride *= n;
    std::int64_t outer = 1;
    for (int a = 0; a < ax; ++a) outer *= n;
    const std::int64_t block = stride * n;
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t s = 0; s < stride; ++s) {
        const cplx* in = V.v.data() + o * block + s;
        cplx* outp = grad[ax].v.data() + o * block + s;
        auto val = [&](int j) { return in[((j % n + n) % n) * stride]; };
        for (int j = 0; j < n; ++j) {
          outp[j * stride] = (c1 * (val(j + 1) - val(j - 1)) +
                              c2 * (val(j + 2) - val(j - 2)) +
                              c3 * (val(j + 3) - val(j - 3))) / h;
        }
      }
    }
  }
  return grad;
}

PhaseSpaceField remainder(const OrbitalEnsemble& gamma, const Field& V) {
  const Lattice& lat = gamma.lat;
  if (!(V.lat == lat)) throw std::invalid_argument("remainder: potential lattice mismatch");
  guard_size(lat);
  const int d = lat.d, n = lat.n, N = 2 * n;
  const double hbar = gamma.params.hbar;
  const std::int64_t nd = lat.size();

  std::vector<Field> gradV = gradient_fd6(V);
  PhaseSpaceField out(wigner_lattice(lat, hbar));
  std::vector<cplx> B(nd * nd);
  const double hpow = std::pow(hbar, 2 - d);

  std::vector<int> jv(d, 0), mv(d, 0);
  for (int orb = 0; orb < gamma.rank(); ++orb) {
    const double lam = gamma.occupations[orb];
    if (lam == 0.0) continue;
    const Field& psi = gamma.orbitals[orb];
    Field Vpsi = psi;
    for (std::int64_t i = 0; i < nd; ++i) Vpsi.v[i] *= V.v[i].real();
    Field ph = half_grid_interpolant(psi);
    Field vh = half_grid_interpolant(Vpsi);

    // B(q,y) = hbar^{2-d} [ (V psi)(q+y/2) conj(psi(q-y/2))
    //                       - psi(q+y/2) conj((V psi)(q-y/2))
    //                       - grad V(q) . y  psi(q+y/2) conj(psi(q-y/2)) ]
    std::fill(jv.begin(), jv.end(), 0);
    for (std::int64_t q = 0; q < nd; ++q) {
      std::fill(mv.begin(), mv.end(), 0);
      for (std::int64_t y = 0; y < nd; ++y) {
        std::int64_t mp = 0, mm = 0;
        double gdoty = 0.0;
        for (int a = 0; a < d; ++a) {
          int bp = (2 * jv[a] + mv[a] - n / 2 + 2 * N) % N;
          int bm = (2 * jv[a] - mv[a] + n / 2 + 2 * N) % N;
          mp = mp * N + bp;
          mm = mm * N + bm;
          gdoty += gradV[a].v[q].real() * lat.coord(mv[a]);
        }
        cplx amb = ph.v[mp] * std::conj(ph.v[mm]);
        cplx cross = vh.v[mp] * std::conj(ph.v[mm]) - ph.v[mp] * std::conj(vh.v[mm]);
        B[q * nd + y] = hpow * (cross - gdoty * amb);
        for (int a = d - 1; a >= 0; --a) {
          if (++mv[a] < n) break;
          mv[a] = 0;
        }
      }
      for (int a = d - 1; a >= 0; --a) {
        if (++jv[a] < n) break;
        jv[a] = 0;
      }
    }
    ambiguity_to_phase_space(B, lat, out, lam);
  }
  return out;
}

double remainder_weighted_norm(const PhaseSpaceField& R, double sq, double sp) {
  PhaseSpaceField w = ps_fourier_multiplier(
      R, [sq, sp](std::span<const double> xiq, std::span<const double> etap) -> cplx {
        double q2 = 0.0, p2 = 0.0;
        for (double x : xiq) q2 += x * x;
        for (double e : etap) p2 += e * e;
        return std::pow(1.0 + q2, -0.5 * sq) * std::pow(1.0 + p2, -0.5 * sp);
      });
  return lp_norm(w, 2.0);
}

// ---------------------------------------------------------------------------
// test sets and weak metric

namespace {

// normalized Hermite function values h_m(x / s) / sqrt(s) on the given points,
// then grid-normalized
std::vector<double> hermite_factor(int m, const std::vector<double>& pts, double scale,
                                   double spacing) {
  const std::size_t n = pts.size();
  std::vector<double> h0(n), h1(n), cur(n);
  const double norm0 = std::pow(PI, -0.25) / std::sqrt(scale);
  for (std::size_t i = 0; i < n; ++i) {
    double x = pts[i] / scale;
    h0[i] = norm0 * std::exp(-0.5 * x * x);
  }
  if (m == 0) {
    cur = h0;
  } else {
    for (std::size_t i = 0; i < n; ++i) h1[i] = std::sqrt(2.0) * (pts[i] / scale) * h0[i];
    if (m == 1) {
      cur = h1;
    } else {
      std::vector<double> prev = h0, now = h1;
      for (int k = 1; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
          double x = pts[i] / scale;
          cur[i] = std::sqrt(2.0 / (k + 1.0)) * x * now[i] -
                   std::sqrt(static_cast<double>(k) / (k + 1.0)) * prev[i];
        }
        prev.swap(now);
        now = cur;
      }
      cur = now;
    }
  }
  double nrm2 = 0.0;
  for (double v : cur) nrm2 += v * v;
  nrm2 *= spacing;
  if (nrm2 <= 0.0) throw std::runtime_error("make_test_set: degenerate Hermite factor");
  const double inv = 1.0 / std::sqrt(nrm2);
  for (double& v : cur) v *= inv;
  return cur;
}

int containment_cap(double half_extent, double scale) {
  // sqrt(2M+1) * scale <= 0.9 * half_extent
  double u = 0.9 * half_extent / scale;
  if (u * u < 1.0) return -1;
  return static_cast<int>(std::floor((u * u - 1.0) / 2.0));
}

} // namespace

std::pair<int, int> test_set_caps(const PhaseSpaceLattice& lat, double scale) {
  return {containment_cap(0.5 * lat.q.length, scale), containment_cap(lat.pmax, scale)};
}

TestSet make_test_set(int N, const PhaseSpaceLattice& lat, double scale, int cap_q,
                      int cap_p) {
  if (N < 1) throw std::invalid_argument("make_test_set: N must be >= 1");
  const int d = lat.d();
  int capq = containment_cap(0.5 * lat.q.length, scale);
  int capp = containment_cap(lat.pmax, scale);
  if (capq < 0 || capp < 0)
    throw std::runtime_error("make_test_set: box too small for the Hermite ground state at this scale");
  if (cap_q >= 0) {
    if (cap_q > capq)
      throw std::runtime_error("make_test_set: requested q degree cap exceeds containment");
    capq = cap_q;
  }
  if (cap_p >= 0) {
    if (cap_p > capp)
      throw std::runtime_error("make_test_set: requested p degree cap exceeds containment");
    capp = cap_p;
  }

  TestSet ts;
  ts.lat = lat;
  ts.scale = scale;

  // enumerate 2d-tuples by total degree, then lexicographically
  const int axes = 2 * d;
  std::vector<int> caps(axes);
  for (int a = 0; a < d; ++a) caps[a] = capq;
  for (int a = d; a < axes; ++a) caps[a] = capp;
  int total_cap = 0;
  for (int c : caps) total_cap += c;

  std::vector<int> tuple(axes, 0);
  for (int D = 0; D <= total_cap && ts.size() < N; ++D) {
    std::function<void(int, int)> rec = [&](int axis, int rem) {
      if (ts.size() >= N) return;
      if (axis == axes - 1) {
        if (rem <= caps[axis]) {
          tuple[axis] = rem;
          ts.degrees.push_back(tuple);
        }
        return;
      }
      for (int v = 0; v <= std::min(rem, caps[axis]) && ts.size() < N; ++v) {
        tuple[axis] = v;
        rec(axis + 1, rem - v);
      }
    };
    rec(0, D);
  }
  if (ts.size() < N)
    throw std::runtime_error("make_test_set: N exceeds the contained Hermite basis size");

  int maxq = 0, maxp = 0;
  for (const auto& t : ts.degrees) {
    for (int a = 0; a < d; ++a) maxq = std::max(maxq, t[a]);
    for (int a = d; a < axes; ++a) maxp = std::max(maxp, t[a]);
  }
  std::vector<double> qpts(lat.q.n), ppts(lat.np);
  for (int j = 0; j < lat.q.n; ++j) qpts[j] = lat.q.coord(j);
  for (int j = 0; j < lat.np; ++j) ppts[j] = lat.p_coord(j);
  for (int m = 0; m <= maxq; ++m)
    ts.q_factor.push_back(hermite_factor(m, qpts, scale, lat.q.spacing()));
  for (int m = 0; m <= maxp; ++m)
    ts.p_factor.push_back(hermite_factor(m, ppts, scale, lat.p_spacing()));
  return ts;
}

cplx TestSet::pairing(const PhaseSpaceField& g, int member) const {
  if (!(g.lat == lat)) throw std::invalid_argument("TestSet::pairing: lattice mismatch");
  const int d = lat.d();
  const std::int64_t nd = lat.q_size(), npd = lat.p_size();
  const auto& deg = degrees.at(member);

  std::vector<int> iq(d, 0), ip(d, 0);
  cplx total = 0.0;
  for (std::int64_t q = 0; q < nd; ++q) {
    double wq = 1.0;
    for (int a = 0; a < d; ++a) wq *= q_factor[deg[a]][iq[a]];
    if (wq != 0.0) {
      cplx acc = 0.0;
      std::fill(ip.begin(), ip.end(), 0);
      const cplx* row = g.v.data() + q * npd;
      for (std::int64_t p = 0; p < npd; ++p) {
        double wp = 1.0;
        for (int a = 0; a < d; ++a) wp *= p_factor[deg[d + a]][ip[a]];
        acc += wp * row[p];
        for (int a = d - 1; a >= 0; --a) {
          if (++ip[a] < lat.np) break;
          ip[a] = 0;
        }
      }
      total += wq * acc;
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++iq[a] < lat.q.n) break;
      iq[a] = 0;
    }
  }
  return total * lat.cell_volume();
}

PhaseSpaceField TestSet::materialize(int member) const {
  PhaseSpaceField f(lat);
  const int d = lat.d();
  const auto& deg = degrees.at(member);
  const std::int64_t nd = lat.q_size(), npd = lat.p_size();
  std::vector<int> iq(d, 0), ip(d, 0);
  for (std::int64_t q = 0; q < nd; ++q) {
    double wq = 1.0;
    for (int a = 0; a < d; ++a) wq *= q_factor[deg[a]][iq[a]];
    std::fill(ip.begin(), ip.end(), 0);
    for (std::int64_t p = 0; p < npd; ++p) {
      double wp = 1.0;
      for (int a = 0; a < d; ++a) wp *= p_factor[deg[d + a]][ip[a]];
      f.v[q * npd + p] = wq * wp;
      for (int a = d - 1; a >= 0; --a) {
        if (++ip[a] < lat.np) break;
        ip[a] = 0;
      }
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++iq[a] < lat.q.n) break;
      iq[a] = 0;
    }
  }
  return f;
}

WeakMetric weak_metric(const PhaseSpaceField& g1, const PhaseSpaceField& g2,
                       const TestSet& tests) {
  if (!(g1.lat == g2.lat) || !(g1.lat == tests.lat))
    throw std::invalid_argument("weak_metric: mismatched lattices");
  WeakMetric wm;
  double w = 0.5;
  for (int m = 0; m < tests.size(); ++m) {
    wm.value += w * std::abs(tests.pairing(g1, m) - tests.pairing(g2, m));
    w *= 0.5;
  }
  double diff2 = 0.0;
  for (std::size_t i = 0; i < g1.v.size(); ++i) diff2 += std::norm(g1.v[i] - g2.v[i]);
  wm.truncation_bound = (w * 2.0) * std::sqrt(diff2 * g1.lat.cell_volume());
  return wm;
}

double weak_metric_cross(const PhaseSpaceField& g1, const TestSet& tests1,
                         const PhaseSpaceField& g2, const TestSet& tests2) {
  if (tests1.size() != tests2.size() || tests1.degrees != tests2.degrees)
    throw std::invalid_argument("weak_metric_cross: test sets must share the enumeration");
  double value = 0.0, w = 0.5;
  for (int m = 0; m < tests1.size(); ++m) {
    value += w * std::abs(tests1.pairing(g1, m) - tests2.pairing(g2, m));
    w *= 0.5;
  }
  return value;
}

double hminus1_norm(const PhaseSpaceField& g) {
  PhaseSpaceField w = ps_fourier_multiplier(
      g, [](std::span<const double> xiq, std::span<const double> etap) -> cplx {
        double z2 = 0.0;
        for (double x : xiq) z2 += x * x;
        for (double e : etap) z2 += e * e;
        return 1.0 / std::sqrt(1.0 + z2);
      });
  return lp_norm(w, 2.0);
}

double max_imag(const PhaseSpaceField& f) {
  double m = 0.0;
  for (const cplx& z : f.v) m = std::max(m, std::abs(z.imag()));
  return m;
}

double min_real(const PhaseSpaceField& f) {
  double m = 0.0;
  for (const cplx& z : f.v) m = std::min(m, z.real());
  return m;
}

} // namespace sclab
