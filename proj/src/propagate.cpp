#include "sclab/propagate.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace sclab {

TimeGrid::TimeGrid(double t0_, double t1_, double dt_, int stride)
    : t0(t0_), t1(t1_), dt(dt_), snapshot_stride(stride) {
  if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
  if (stride < 1) throw std::invalid_argument("TimeGrid: snapshot stride must be >= 1");
  const double raw = (t1 - t0) / dt;
  steps_ = static_cast<std::int64_t>(std::llround(raw));
  if (steps_ < 0 || std::abs(raw - steps_) > 1e-9 * std::max(1.0, std::abs(raw)))
    throw std::invalid_argument("TimeGrid: (t1 - t0)/dt must be a nonnegative integer");
}

void PotentialTrajectory::add(double t, Field V) {
  if (!times.empty() && t <= times.back())
    throw std::invalid_argument("PotentialTrajectory: sample times must increase strictly");
  times.push_back(t);
  potentials.push_back(std::move(V));
}

Field PotentialTrajectory::at(double t) const {
  if (empty()) throw std::runtime_error("PotentialTrajectory: no samples");
  if (times.size() == 1 || t <= times.front()) return potentials.front();
  if (t >= times.back()) return potentials.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times.begin());
  std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  Field out = potentials[lo];
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = (1.0 - w) * potentials[lo].v[i] + w * potentials[hi].v[i];
  return out;
}

Field free_schrodinger(const Field& u, double t, double hbar) {
  if (t == 0.0) return u;
  return fourier_multiplier(u, [t, hbar](std::span<const double> xi) -> cplx {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    return std::polar(1.0, -0.5 * t * hbar * k2);
  });
}

OrbitalEnsemble free_schrodinger(const OrbitalEnsemble& gamma, double t) {
  const double hbar = gamma.params.hbar;
  return map_orbitals(gamma, [&](const Field& psi) { return free_schrodinger(psi, t, hbar); });
}

PhaseSpaceField free_transport(const PhaseSpaceField& f, double t,
                               const TransportOptions& opts) {
  const PhaseSpaceLattice& lat = f.lat;
  const int d = lat.d(), n = lat.q.n;
  const std::int64_t npd = lat.p_size(), nqd = lat.q_size();
  PhaseSpaceField out = f;
  if (t == 0.0) return out;

  // row support check (d = 1): the shifted q-support of each p row must stay
  // in the box; support means cells above support_tol relative to the global max
  if (d == 1) {
    double fmax = 0.0;
    for (const cplx& z : f.v) fmax = std::max(fmax, std::abs(z));
    int bad_rows = 0;
    for (std::int64_t k = 0; k < npd && fmax > 0.0; ++k) {
      double lo = lat.q.length, hi = -lat.q.length;
      for (std::int64_t j = 0; j < nqd; ++j) {
        if (std::abs(f.v[j * npd + k]) > opts.support_tol * fmax) {
          lo = std::min(lo, lat.q.coord(static_cast<int>(j)));
          hi = std::max(hi, lat.q.coord(static_cast<int>(j)));
        }
      }
      if (lo > hi) continue; // empty row
      const double shift = t * lat.p_coord(static_cast<int>(k));
      if (lo + shift < -0.5 * lat.q.length || hi + shift >= 0.5 * lat.q.length) ++bad_rows;
    }
    if (bad_rows > 0) {
      if (opts.strict_support)
        throw std::runtime_error("free_transport: transported support leaves the box");
      std::fprintf(stderr, "sclab warning: free_transport support wraps in %d momentum rows\n",
                   bad_rows);
    }
  }

  // per-row spectral shift in q: fhat *= e^{-i t p . xi_q}
  std::vector<std::int64_t> dims;
  for (int a = 0; a < d; ++a) dims.push_back(n);
  for (int a = 0; a < d; ++a) dims.push_back(lat.np);
  for (int a = 0; a < d; ++a) detail::fft_axis_inplace(out.v, dims, a, -1);

  std::vector<int> iq(d, 0), ip(d, 0);
  std::int64_t flat = 0;
  for (std::int64_t aq = 0; aq < nqd; ++aq) {
    std::fill(ip.begin(), ip.end(), 0);
    for (std::int64_t bp = 0; bp < npd; ++bp) {
      double phase = 0.0;
      for (int a = 0; a < d; ++a) phase += lat.q.freq(iq[a]) * lat.p_coord(ip[a]);
      out.v[flat++] *= std::polar(1.0, -t * phase);
      for (int a = d - 1; a >= 0; --a) {
        if (++ip[a] < lat.np) break;
        ip[a] = 0;
      }
    }
    for (int a = d - 1; a >= 0; --a) {
      if (++iq[a] < n) break;
      iq[a] = 0;
    }
  }
  for (int a = 0; a < d; ++a) detail::fft_axis_inplace(out.v, dims, a, +1);
  const double inv = 1.0 / static_cast<double>(nqd);
  for (cplx& z : out.v) z *= inv;
  return out;
}

// ---------------------------------------------------------------------------
// Strang splitting

namespace {

void kinetic_half(Field& u, double dt, double hbar) {
  u = free_schrodinger(u, 0.5 * dt, hbar);
}

void potential_phase(Field& u, const Field& V, double dt, double hbar) {
  const double s = dt / hbar;
  for (std::size_t i = 0; i < u.v.size(); ++i)
    u.v[i] *= std::polar(1.0, -s * V.v[i].real());
}

double max_potential_inf(const PotentialTrajectory& V) {
  double m = 0.0;
  for (const Field& f : V.potentials)
    for (const cplx& z : f.v) m = std::max(m, std::abs(z.real()));
  return m;
}

} // namespace

Field evolve_perturbed(const Field& u, const PotentialTrajectory& V, double t0, double t1,
                       double dt, double hbar, const FlowOptions& opts) {
  if (t0 == t1) return u;
  if (V.empty()) return free_schrodinger(u, t1 - t0, hbar);
  const std::int64_t n = std::max<std::int64_t>(1, std::llround(std::abs(t1 - t0) / dt));
  const double h = (t1 - t0) / static_cast<double>(n);

  const double vmax = max_potential_inf(V);
  if (vmax * std::abs(h) / hbar > opts.stability_cap && !opts.override_stability)
    throw std::runtime_error("perturbed_flow: ||V||_inf dt / hbar exceeds the stability cap");

  Field w = u;
  double t = t0;
  for (std::int64_t k = 0; k < n; ++k) {
    kinetic_half(w, h, hbar);
    potential_phase(w, V.at(t + 0.5 * h), h, hbar);
    kinetic_half(w, h, hbar);
    t += h;
  }
  return w;
}

FlowTrajectory perturbed_flow(const Field& u, const PotentialTrajectory& V,
                              const TimeGrid& grid, double hbar, const FlowOptions& opts) {
  FlowTrajectory traj;
  traj.times.push_back(grid.t0);
  traj.states.push_back(u);
  if (!V.empty()) {
    const double vmax = max_potential_inf(V);
    if (vmax * grid.dt / hbar > opts.stability_cap && !opts.override_stability)
      throw std::runtime_error("perturbed_flow: ||V||_inf dt / hbar exceeds the stability cap");
  }
  Field w = u;
  double t = grid.t0;
  for (std::int64_t k = 0; k < grid.steps(); ++k) {
    if (V.empty()) {
      w = free_schrodinger(w, grid.dt, hbar);
    } else {
      kinetic_half(w, grid.dt, hbar);
      potential_phase(w, V.at(t + 0.5 * grid.dt), grid.dt, hbar);
      kinetic_half(w, grid.dt, hbar);
    }
    t = grid.t0 + (k + 1) * grid.dt;
    if ((k + 1) % grid.snapshot_stride == 0 || k + 1 == grid.steps()) {
      traj.times.push_back(t);
      traj.states.push_back(w);
    }
  }
  return traj;
}

Field wave_operator_apply(const Field& u, const PotentialTrajectory& V, double t,
                          double dt, double hbar, const FlowOptions& opts) {
  Field w = evolve_perturbed(u, V, 0.0, t, dt, hbar, opts);
  return free_schrodinger(w, -t, hbar);
}

Field wave_operator_adjoint_apply(const Field& u, const PotentialTrajectory& V, double t,
                                  double dt, double hbar, const FlowOptions& opts) {
  Field w = free_schrodinger(u, t, hbar);
  return evolve_perturbed(w, V, t, 0.0, dt, hbar, opts);
}

// ---------------------------------------------------------------------------
// Z norm

double z_integrand(const Field& V, double sigma) {
  if (!(sigma > 1.0)) throw std::domain_error("z_norm: sigma must exceed 1");
  const Lattice& lat = V.lat;
  const double rho = lat.d / (sigma - 1.0);
  if (rho < 1.0)
    throw std::domain_error("z_norm: Sobolev exponent d/(sigma-1) below 1, sigma too large");

  // || grad V ||_inf: spectral gradient, Euclidean magnitude
  std::vector<double> g2(lat.size(), 0.0);
  for (int a = 0; a < lat.d; ++a) {
    Field da = fourier_multiplier(V, [a](std::span<const double> xi) -> cplx {
      return cplx(0.0, xi[a]);
    });
    for (std::int64_t i = 0; i < lat.size(); ++i) g2[i] += std::norm(da.v[i]);
  }
  double grad_inf = 0.0;
  for (double x : g2) grad_inf = std::max(grad_inf, std::sqrt(x));

  Field frac = fourier_multiplier(V, [sigma](std::span<const double> xi) -> cplx {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    return std::pow(k2, 0.5 * sigma);
  });
  return grad_inf + lp_norm(frac, rho);
}

double z_norm(const PotentialTrajectory& V, double sigma) {
  if (V.empty()) return 0.0;
  if (V.times.size() == 1) return 0.0; // zero-length interval
  std::vector<double> g(V.times.size());
  for (std::size_t i = 0; i < V.times.size(); ++i)
    g[i] = jbracket(V.times[i]) * z_integrand(V.potentials[i], sigma);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < V.times.size(); ++i)
    acc += 0.5 * (g[i] + g[i + 1]) * (V.times[i + 1] - V.times[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// dispersion probe

namespace {

// C_{sigma,inf} = int_{R^d} <x>^{-2 sigma} dx = pi^{d/2} Gamma(sigma - d/2) / Gamma(sigma)
double c_sigma_inf(double sigma, int d) {
  return std::pow(PI, 0.5 * d) *
         std::exp(std::lgamma(sigma - 0.5 * d) - std::lgamma(sigma));
}

} // namespace

std::vector<DecayRow> free_dispersion_probe(const OrbitalEnsemble& gamma0, double r,
                                            std::span<const double> times, double sigma) {
  const int d = gamma0.lat.d;
  const double rprime_inv = std::isinf(r) ? 1.0 : 1.0 - 1.0 / r;
  if (sigma <= 0.0) sigma = 0.5 * d * rprime_inv + 0.5;
  if (!(sigma > 0.5 * d * rprime_inv))
    throw std::domain_error("free_dispersion_probe: sigma must exceed d/(2r')");

  const double c = std::pow(c_sigma_inf(sigma, d), rprime_inv);
  const double wx = weighted_schatten_norm(gamma0, r, sigma, WeightKind::Position);
  const double wk = weighted_schatten_norm(gamma0, r, sigma, WeightKind::Momentum);

  std::vector<DecayRow> rows;
  rows.reserve(times.size());
  for (double t : times) {
    OrbitalEnsemble gt = free_schrodinger(gamma0, t);
    DecayRow row;
    row.t = t;
    row.norm = density(gt).lp(r);
    row.ceiling_static = c * wk;
    row.ceiling_decay = (t == 0.0) ? std::numeric_limits<double>::infinity()
                                   : c * wx / std::pow(std::abs(t), d * rprime_inv);
    rows.push_back(row);
  }
  return rows;
}

OperatorNormEstimate weighted_wave_operator_norm(const Lattice& lat,
                                                 const PotentialTrajectory& V, double t,
                                                 double dt, double hbar, double alpha,
                                                 int starts, int iters, std::uint64_t seed,
                                                 const FlowOptions& opts) {
  // A u = <x>^alpha W ( <x>^{-alpha} u );  A* u = <x>^{-alpha} W* ( <x>^alpha u )
  auto pos_weight = [&](const Field& u, double power) {
    Field out = u;
    std::vector<int> idx(lat.d, 0);
    for (std::int64_t flat = 0; flat < out.size(); ++flat) {
      double x2 = 0.0;
      for (int a = 0; a < lat.d; ++a) {
        double cx = lat.coord(idx[a]);
        x2 += cx * cx;
      }
      out.v[flat] *= std::pow(1.0 + x2, 0.5 * power);
      for (int a = lat.d - 1; a >= 0; --a) {
        if (++idx[a] < lat.n) break;
        idx[a] = 0;
      }
    }
    return out;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = 0.0, lo = std::numeric_limits<double>::infinity();
  int used_iters = 0;
  for (int s = 0; s < starts; ++s) {
    Field v(lat);
    for (cplx& z : v.v) z = cplx(gauss(rng), gauss(rng));
    double nv = lp_norm(v, 2.0);
    for (cplx& z : v.v) z /= nv;

    double est = 0.0, prev = -1.0;
    for (int it = 0; it < iters; ++it) {
      Field Av = pos_weight(wave_operator_apply(pos_weight(v, -alpha), V, t, dt, hbar, opts), alpha);
      est = lp_norm(Av, 2.0);
      Field AAv = pos_weight(wave_operator_adjoint_apply(pos_weight(Av, alpha), V, t, dt, hbar, opts), -alpha);
      double nn = lp_norm(AAv, 2.0);
      if (nn == 0.0) break;
      for (std::size_t i = 0; i < v.v.size(); ++i) v.v[i] = AAv.v[i] / nn;
      ++used_iters;
      if (prev > 0.0 && std::abs(est - prev) < 1e-6 * est) break;
      prev = est;
    }
    best = std::max(best, est);
    lo = std::min(lo, est);
  }
  return {best, best - lo, used_iters};
}

} // namespace sclab
