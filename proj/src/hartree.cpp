#include "sclab/hartree.hpp"

#include <cmath>

namespace sclab {

Interaction Interaction::riesz(int sign, double a, int d) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("Interaction: sign must be +-1");
  if (!(a > 0.0) || !(a < d))
    throw std::domain_error("Interaction: Riesz exponent requires 0 < a < d");
  Interaction w;
  w.mode = Mode::Riesz;
  w.sign = sign;
  w.a = a;
  return w;
}

Interaction Interaction::smooth(int sign, double a_label, Field wfield) {
  Interaction w;
  w.mode = Mode::Smooth;
  w.sign = sign;
  w.a = a_label;
  w.smooth_w = std::move(wfield);
  return w;
}

Interaction Interaction::none(const Lattice& lat) {
  return smooth(1, 1.0, Field(lat));
}

Interaction InteractionSpec::make(const Lattice& lat) const {
  switch (kind) {
    case Kind::None:
      return Interaction::none(lat);
    case Kind::Riesz:
      return Interaction::riesz(sign, a, lat.d);
    case Kind::Smooth: {
      Field w = sample(lat, [this](std::span<const double> x) -> cplx {
        double r2 = core * core;
        for (double c : x) r2 += c * c;
        return amp * std::pow(r2, -0.5 * a);
      });
      return Interaction::smooth(sign, a, std::move(w));
    }
  }
  throw std::logic_error("InteractionSpec: unknown kind");
}

std::string InteractionSpec::tag() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::Riesz:
      return "riesz:" + std::to_string(sign * a);
    case Kind::Smooth:
      return "smooth:" + std::to_string(sign * a) + ":" + std::to_string(core) + ":" +
             std::to_string(amp);
  }
  return "?";
}

double riesz_multiplier_constant(int d, double a) {
  return std::pow(2.0, d - a) * std::pow(PI, 0.5 * d) *
         std::exp(std::lgamma(0.5 * (d - a)) - std::lgamma(0.5 * a));
}

double MeanField::grad_inf() const {
  std::size_t n = grad.empty() ? 0 : grad[0].v.size();
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double g2 = 0.0;
    for (const Field& g : grad) g2 += std::norm(g.v[i]);
    m = std::max(m, g2);
  }
  return std::sqrt(m);
}

double MeanField::phi_inf() const {
  double m = 0.0;
  for (const cplx& z : phi.v) m = std::max(m, std::abs(z.real()));
  return m;
}

MeanField mean_field(const Density& rho, const Interaction& w) {
  const Lattice& lat = rho.lat;
  Field rhof = rho.as_field();
  Field rhohat = to_fourier(rhof);

  // multiplier values on the frequency lattice, zero mode gauged away
  Field phihat(lat);
  std::vector<int> idx(lat.d, 0);
  Field what;
  if (w.mode == Interaction::Mode::Smooth) {
    if (!(w.smooth_w.lat == lat))
      throw std::invalid_argument("mean_field: smooth interaction lattice mismatch");
    what = to_fourier(w.smooth_w);
  }
  const double cda = (w.mode == Interaction::Mode::Riesz)
                         ? riesz_multiplier_constant(lat.d, w.a)
                         : 0.0;
  for (std::int64_t flat = 0; flat < lat.size(); ++flat) {
    double k2 = 0.0;
    bool zero_mode = true;
    for (int a = 0; a < lat.d; ++a) {
      double xi = lat.freq(idx[a]);
      k2 += xi * xi;
      if (idx[a] != 0) zero_mode = false;
    }
    cplx mult = 0.0;
    if (!zero_mode) {
      mult = (w.mode == Interaction::Mode::Riesz)
                 ? cplx(w.sign * cda * std::pow(k2, 0.5 * (w.a - lat.d)))
                 : cplx(w.sign) * what.v[flat];
    }
    phihat.v[flat] = mult * rhohat.v[flat];
    for (int a = lat.d - 1; a >= 0; --a) {
      if (++idx[a] < lat.n) break;
      idx[a] = 0;
    }
  }

  MeanField out;
  out.phi = from_fourier(phihat);
  for (cplx& z : out.phi.v) z = z.real(); // real potential up to roundoff
  out.grad.reserve(lat.d);
  for (int a = 0; a < lat.d; ++a) {
    Field gh = phihat;
    std::fill(idx.begin(), idx.end(), 0);
    for (std::int64_t flat = 0; flat < lat.size(); ++flat) {
      gh.v[flat] *= cplx(0.0, lat.freq(idx[a]));
      for (int ax = lat.d - 1; ax >= 0; --ax) {
        if (++idx[ax] < lat.n) break;
        idx[ax] = 0;
      }
    }
    Field g = from_fourier(gh);
    for (cplx& z : g.v) z = z.real();
    out.grad.push_back(std::move(g));
  }
  return out;
}

InterpolationReport interpolation_check(const Density& zeta, const Interaction& w,
                                        const Params& params) {
  InterpolationReport rep;
  const double l1 = zeta.lp(1.0);
  if (l1 == 0.0) return rep;
  MeanField mf = mean_field(zeta, w);
  rep.phi_inf = mf.phi_inf();
  rep.grad_inf = mf.grad_inf();

  const double a = params.a, eps = params.epsilon;
  const double lr = zeta.lp(params.r_eps());
  const double th1 = a / (1.0 + a + eps);            // ||w*z||_inf exponent on L^{r_eps}
  const double th2 = (1.0 + a) / (1.0 + a + eps);    // ||grad(w*z)||_inf exponent
  rep.rhs_phi = std::pow(lr, th1) * std::pow(l1, 1.0 - th1);
  rep.rhs_grad = std::pow(lr, th2) * std::pow(l1, 1.0 - th2);
  rep.ratio_phi = (rep.rhs_phi > 0.0) ? rep.phi_inf / rep.rhs_phi : 0.0;
  rep.ratio_grad = (rep.rhs_grad > 0.0) ? rep.grad_inf / rep.rhs_grad : 0.0;
  return rep;
}

double lwp_timestep(const OrbitalEnsemble& gamma0, double safety) {
  const double nrm = xin_norm(gamma0);
  if (nrm <= 0.0) throw std::domain_error("lwp_timestep: zero-norm initial data");
  return safety * gamma0.params.hbar / nrm;
}

// ---------------------------------------------------------------------------

namespace {

HartreeDiagRow diag_row(double t, const OrbitalEnsemble& gamma, const Density& rho,
                        const MeanField& mf) {
  HartreeDiagRow row;
  row.t = t;
  row.trace = gamma.trace();
  row.rho_l1 = rho.lp(1.0);
  row.rho_lr = rho.lp(gamma.params.r_eps());
  row.rho_linf = rho.lp(std::numeric_limits<double>::infinity());
  row.phi_inf = mf.phi_inf();
  row.grad_phi_inf = mf.grad_inf();
  return row;
}

void push_snapshot(HartreeTrajectory& traj, double t, const OrbitalEnsemble& gamma,
                   Density rho, Field phi) {
  HartreeSnapshot snap;
  snap.t = t;
  snap.state = gamma;
  snap.rho = std::move(rho);
  snap.phi = phi;
  snap.l2_norm = schatten_norm(gamma, 2.0);
  const Params& p = gamma.params;
  snap.weighted_mom =
      weighted_schatten_norm(gamma, p.r_eps(), p.sigma_eps(), WeightKind::Momentum);
  traj.phi_samples.add(t, std::move(phi));
  traj.snapshots.push_back(std::move(snap));
}

} // namespace

HartreeTrajectory evolve(const OrbitalEnsemble& gamma0, const Interaction& w,
                         const TimeGrid& grid, const HartreeOptions& opts) {
  const Params& par = gamma0.params;
  const double hbar = par.hbar;
  if (!opts.allow_step_override) {
    const double cap = lwp_timestep(gamma0, 1.0);
    if (grid.dt > cap)
      throw std::runtime_error("evolve: dt exceeds the local well-posedness scale "
                               "hbar/||gamma0||_Xin; pass allow_step_override to force");
  }

  HartreeTrajectory traj;
  traj.params = par;
  traj.grid = grid;

  OrbitalEnsemble gamma = gamma0;
  Density rho = density(gamma);
  MeanField mf = mean_field(rho, w);
  const double trace0 = gamma.trace();
  traj.diag.push_back(diag_row(grid.t0, gamma, rho, mf));
  push_snapshot(traj, grid.t0, gamma, rho, mf.phi);

  auto half_kinetic = [&](OrbitalEnsemble& g) {
    for (Field& psi : g.orbitals) psi = free_schrodinger(psi, 0.5 * grid.dt, hbar);
  };

  for (std::int64_t k = 0; k < grid.steps(); ++k) {
    const double t_next = grid.t0 + (k + 1) * grid.dt;

    half_kinetic(gamma);
    rho = density(gamma);
    mf = mean_field(rho, w);
    const double s = grid.dt / hbar;
    for (Field& psi : gamma.orbitals)
      for (std::int64_t i = 0; i < psi.size(); ++i)
        psi.v[i] *= std::polar(1.0, -s * mf.phi.v[i].real());
    half_kinetic(gamma);

    const bool at_diag = ((k + 1) % opts.diag_stride == 0) || (k + 1 == grid.steps());
    const bool at_snap = ((k + 1) % grid.snapshot_stride == 0) || (k + 1 == grid.steps());
    if (at_diag || at_snap) {
      rho = density(gamma);
      mf = mean_field(rho, w);
      if (at_diag) traj.diag.push_back(diag_row(t_next, gamma, rho, mf));
      if (at_snap) {
        push_snapshot(traj, t_next, gamma, rho, mf.phi);
        const HartreeSnapshot& snap = traj.snapshots.back();

        const double drift = std::abs(snap.state.trace() - trace0) /
                             std::max(trace0, 1e-300);
        const double elapsed = std::max(1.0, t_next - grid.t0);
        if (drift > opts.conservation_tol * elapsed)
          throw std::runtime_error("evolve: trace conservation drift " +
                                   std::to_string(drift) + " beyond tolerance at t = " +
                                   std::to_string(t_next));
        if (snap.weighted_mom > opts.blowup_ceiling) {
          traj.halted = true;
          traj.halt_reason = "blow-up gate: ||<hbar grad>^s gamma <hbar grad>^s||_{r_eps} = " +
                             std::to_string(snap.weighted_mom) + " exceeded ceiling at t = " +
                             std::to_string(t_next);
          return traj;
        }
      }
    }
  }
  return traj;
}

DecayReport decay_report(const HartreeTrajectory& traj, double r, double t_lo, double t_hi) {
  std::vector<double> ts, rho_norms, gts, grads;
  const bool use_lr = !std::isinf(r) && std::abs(r - traj.params.r_eps()) < 1e-12;
  for (const HartreeDiagRow& row : traj.diag) {
    if (row.t < t_lo || row.t > t_hi) continue;
    double v;
    if (std::isinf(r))
      v = row.rho_linf;
    else if (use_lr)
      v = row.rho_lr;
    else if (r == 1.0)
      v = row.rho_l1;
    else
      throw std::invalid_argument("decay_report: r not among the logged norms");
    if (v > 0.0) {
      ts.push_back(row.t);
      rho_norms.push_back(v);
    }
    if (row.grad_phi_inf > 0.0) { // empty for free runs
      gts.push_back(row.t);
      grads.push_back(row.grad_phi_inf);
    }
  }
  if (ts.size() < 5) throw std::runtime_error("decay_report: fewer than 5 points in window");

  DecayReport rep;
  rep.r = r;
  rep.rho_fit = fit_power_law(ts, rho_norms);
  if (gts.size() >= 5) rep.grad_phi_fit = fit_power_law(gts, grads);
  const int d = traj.params.d;
  const double a = traj.params.a, eps = traj.params.epsilon;
  rep.target_rho = std::isinf(r) ? -static_cast<double>(d) : -(d - 2.0 + a + eps);
  rep.target_grad_phi = -(d - 2.0 + a);
  return rep;
}

OrbitalEnsemble backward_frame(const OrbitalEnsemble& gamma, double t) {
  return free_schrodinger(gamma, -t);
}

ScatteringReport scattering_report(const HartreeTrajectory& traj) {
  if (traj.snapshots.size() < 2)
    throw std::runtime_error("scattering_report: need at least two snapshots");
  ScatteringReport rep;
  rep.predicted_tail = 1.0 - traj.params.a;

  std::vector<OrbitalEnsemble> back;
  back.reserve(traj.snapshots.size());
  for (const HartreeSnapshot& s : traj.snapshots)
    back.push_back(backward_frame(s.state, s.t));

  for (std::size_t k = 0; k + 1 < back.size(); ++k) {
    rep.t_lo.push_back(traj.snapshots[k].t);
    rep.t_hi.push_back(traj.snapshots[k + 1].t);
    rep.cauchy.push_back(trace_norm_difference(back[k + 1], back[k]));
  }
  rep.gamma_plus = back.back();

  // tail fit over strictly positive, t >= 1 entries
  std::vector<double> ts, ds;
  for (std::size_t k = 0; k < rep.cauchy.size(); ++k) {
    if (rep.t_lo[k] >= 1.0 && rep.cauchy[k] > 0.0) {
      ts.push_back(rep.t_lo[k]);
      ds.push_back(rep.cauchy[k]);
    }
  }
  if (ts.size() >= 5) rep.tail_fit = fit_power_law(ts, ds);

  int rises = 0;
  for (std::size_t k = 0; k + 1 < rep.cauchy.size(); ++k)
    if (rep.cauchy[k + 1] > rep.cauchy[k]) ++rises;
  rep.no_scattering = rep.cauchy.size() >= 3 &&
                      rises * 2 > static_cast<int>(rep.cauchy.size()) &&
                      rep.cauchy.back() > 2.0 * rep.cauchy.front();
  return rep;
}

} // namespace sclab
