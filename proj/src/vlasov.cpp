#include "sclab/vlasov.hpp"

#include "sclab/phasespace.hpp"

#include <cmath>

namespace sclab {

Density vlasov_density(const PhaseSpaceField& f) {
  const PhaseSpaceLattice& lat = f.lat;
  Density rho(lat.q);
  const std::int64_t npd = lat.p_size();
  double cell = 1.0;
  for (int a = 0; a < lat.d(); ++a) cell *= lat.p_spacing();
  for (std::int64_t q = 0; q < lat.q_size(); ++q) {
    double acc = 0.0;
    const cplx* row = f.v.data() + q * npd;
    for (std::int64_t p = 0; p < npd; ++p) acc += row[p].real();
    rho.v[q] = acc * cell;
  }
  return rho;
}

namespace {

// exact p-shift by s(q) = dt * grad Phi(q) per q column (spectral phase)
void force_shift(PhaseSpaceField& f, const MeanField& mf, double dt) {
  const PhaseSpaceLattice& lat = f.lat;
  const int d = lat.d();
  std::vector<std::int64_t> dims;
  for (int a = 0; a < d; ++a) dims.push_back(lat.q.n);
  for (int a = 0; a < d; ++a) dims.push_back(lat.np);
  for (int a = 0; a < d; ++a) detail::fft_axis_inplace(f.v, dims, d + a, -1);

  const std::int64_t nqd = lat.q_size(), npd = lat.p_size();
  std::vector<int> ip(d, 0);
  for (std::int64_t q = 0; q < nqd; ++q) {
    std::fill(ip.begin(), ip.end(), 0);
    cplx* row = f.v.data() + q * npd;
    for (std::int64_t k = 0; k < npd; ++k) {
      double phase = 0.0;
      for (int a = 0; a < d; ++a)
        phase += dt * mf.grad[a].v[q].real() * lat.p_freq(ip[a]);
      row[k] *= std::polar(1.0, phase);
      for (int a = d - 1; a >= 0; --a) {
        if (++ip[a] < lat.np) break;
        ip[a] = 0;
      }
    }
  }
  for (int a = 0; a < d; ++a) detail::fft_axis_inplace(f.v, dims, d + a, +1);
  const double inv = 1.0 / static_cast<double>(npd);
  for (cplx& z : f.v) z *= inv;
}

VlasovDiagRow make_row(double t, const PhaseSpaceField& f, const Density& rho,
                       const MeanField& mf, double r_eps) {
  VlasovDiagRow row;
  row.t = t;
  double mass = 0.0, minf = 0.0;
  for (const cplx& z : f.v) {
    mass += z.real();
    minf = std::min(minf, z.real());
  }
  row.mass = mass * f.lat.cell_volume();
  row.min_f = minf;
  row.l2 = lp_norm(f, 2.0);
  row.rho_l1 = rho.lp(1.0);
  row.rho_lr = rho.lp(r_eps);
  row.rho_linf = rho.lp(std::numeric_limits<double>::infinity());
  row.grad_phi_inf = mf.grad_inf();
  return row;
}

} // namespace

PhaseSpaceField vlasov_step(const PhaseSpaceField& f, const Interaction& w, double dt,
                            const VlasovOptions& opts) {
  PhaseSpaceField g = free_transport(f, 0.5 * dt, opts.transport);
  Density rho = vlasov_density(g);
  MeanField mf = mean_field(rho, w);
  const double hp = f.lat.p_spacing();
  if (mf.grad_inf() * std::abs(dt) > opts.cfl_safety * hp)
    throw std::runtime_error("vlasov_step: |grad Phi| dt exceeds the p-cell CFL budget");
  force_shift(g, mf, dt);
  return free_transport(g, 0.5 * dt, opts.transport);
}

VlasovTrajectory vlasov_run(const PhaseSpaceField& f0, const Interaction& w,
                            const TimeGrid& grid, double r_eps, const VlasovOptions& opts) {
  VlasovTrajectory traj;
  traj.grid = grid;
  traj.r_eps = r_eps;

  PhaseSpaceField f = f0;
  Density rho = vlasov_density(f);
  MeanField mf = mean_field(rho, w);
  traj.diag.push_back(make_row(grid.t0, f, rho, mf, r_eps));
  traj.snapshots.push_back({grid.t0, f, rho, mf.phi});
  const double mass0 = traj.diag.front().mass;
  double fmax = 0.0;
  for (const cplx& z : f0.v) fmax = std::max(fmax, z.real());

  for (std::int64_t k = 0; k < grid.steps(); ++k) {
    const double t_next = grid.t0 + (k + 1) * grid.dt;
    f = vlasov_step(f, w, grid.dt, opts);

    if ((k + 1) % grid.snapshot_stride == 0 || k + 1 == grid.steps()) {
      rho = vlasov_density(f);
      mf = mean_field(rho, w);
      VlasovDiagRow row = make_row(t_next, f, rho, mf, r_eps);
      traj.diag.push_back(row);
      traj.snapshots.push_back({t_next, f, rho, mf.phi});

      const double drift = std::abs(row.mass - mass0) / std::max(std::abs(mass0), 1e-300);
      if (drift > opts.mass_tol * std::max(1.0, t_next - grid.t0))
        throw std::runtime_error("vlasov_run: mass drift " + std::to_string(drift) +
                                 " beyond tolerance at t = " + std::to_string(t_next));
      if (row.min_f < -opts.undershoot_tol * std::max(fmax, 1e-300)) {
        traj.halted = true;
        traj.halt_reason = "undershoot gate: min f = " + std::to_string(row.min_f) +
                           " at t = " + std::to_string(t_next);
        return traj;
      }
    }
  }
  return traj;
}

std::vector<PhaseSpaceField> moving_frame(const VlasovTrajectory& traj,
                                          const TransportOptions& opts) {
  std::vector<PhaseSpaceField> g;
  g.reserve(traj.snapshots.size());
  for (const VlasovSnapshot& s : traj.snapshots)
    g.push_back(free_transport(s.f, -s.t, opts));
  return g;
}

VlasovScatteringReport vlasov_scattering_report(const VlasovTrajectory& traj, double fit_r) {
  if (traj.snapshots.size() < 2)
    throw std::runtime_error("vlasov_scattering_report: need at least two snapshots");
  VlasovScatteringReport rep;
  rep.density_decay_r = (fit_r > 0.0) ? fit_r : traj.r_eps;
  if (!std::isinf(rep.density_decay_r) &&
      std::abs(rep.density_decay_r - traj.r_eps) > 1e-12)
    throw std::invalid_argument("vlasov_scattering_report: fit_r must be r_eps or inf");

  std::vector<PhaseSpaceField> g = moving_frame(traj);
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    PhaseSpaceField diff = g[k + 1];
    for (std::size_t i = 0; i < diff.v.size(); ++i) diff.v[i] -= g[k].v[i];
    rep.t_lo.push_back(traj.snapshots[k].t);
    rep.t_hi.push_back(traj.snapshots[k + 1].t);
    rep.cauchy.push_back(hminus1_norm(diff));
  }
  rep.f_plus = g.back();

  std::vector<double> ts, vs;
  for (const VlasovDiagRow& row : traj.diag) {
    double v = std::isinf(rep.density_decay_r) ? row.rho_linf : row.rho_lr;
    if (row.t >= 1.0 && v > 0.0) {
      ts.push_back(row.t);
      vs.push_back(v);
    }
  }
  if (ts.size() >= 5) rep.density_decay = fit_power_law(ts, vs);

  int rises = 0;
  for (std::size_t k = 0; k + 1 < rep.cauchy.size(); ++k)
    if (rep.cauchy[k + 1] > rep.cauchy[k]) ++rises;
  rep.no_scattering = rep.cauchy.size() >= 3 &&
                      rises * 2 > static_cast<int>(rep.cauchy.size()) &&
                      rep.cauchy.back() > 2.0 * rep.cauchy.front();
  return rep;
}

} // namespace sclab
