#include "sclab/experiments.hpp"

#include "sclab/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace sclab {

using nlohmann::json;

PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> value) {
  if (t.size() != value.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  if (t.size() < 5) throw std::invalid_argument("fit_power_law: need at least 5 points");
  const int n = static_cast<int>(t.size());
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    if (!(value[i] > 0.0)) throw std::domain_error("fit_power_law: nonpositive value");
    x[i] = std::log(jbracket(t[i]));
    y[i] = std::log(value[i]);
  }
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::domain_error("fit_power_law: degenerate time window");
  PowerLawFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    double r = y[i] - fit.intercept - fit.slope * x[i];
    ss += r * r;
  }
  fit.stderr_slope = (n > 2) ? std::sqrt(ss / ((n - 2) * sxx)) : 0.0;
  return fit;
}

// ---------------------------------------------------------------------------

GaussianDescriptor GaussianDescriptor::isotropic(int d, double amplitude, double q_width,
                                                 double p_width) {
  GaussianDescriptor g;
  g.amplitude = amplitude;
  g.q_center.assign(d, 0.0);
  g.p_center.assign(d, 0.0);
  g.q_width.assign(d, q_width);
  g.p_width.assign(d, p_width);
  return g;
}

double GaussianDescriptor::eval(std::span<const double> q, std::span<const double> p) const {
  double e = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) {
    double dq = (q[a] - q_center[a]) / q_width[a];
    double dp = (p[a] - p_center[a]) / p_width[a];
    e += 0.5 * (dq * dq + dp * dp);
  }
  return amplitude * std::exp(-e);
}

PhaseSpaceField GaussianDescriptor::sample_on(const PhaseSpaceLattice& lat) const {
  return sample(lat, [this](std::span<const double> q, std::span<const double> p) -> cplx {
    return eval(q, p);
  });
}

void SweepConfig::validate() const {
  if (hbars.empty()) throw std::invalid_argument("sweep: empty hbar list");
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!(hbars[i] > 0.0) || hbars[i] > 1.0)
      throw std::invalid_argument("sweep: hbar values must lie in (0, 1]");
    if (i > 0 && !(hbars[i] < hbars[i - 1]))
      throw std::invalid_argument("sweep: hbar values must decrease strictly");
  }
  if (horizon <= 0.0 || dt <= 0.0) throw std::invalid_argument("sweep: bad time grid");
  if (rank_budget < 1) throw std::invalid_argument("sweep: rank budget must be >= 1");
}

std::string SweepConfig::canonical() const {
  std::ostringstream os;
  os << "sweep;d=" << hartree_lattice.d << ";n=" << hartree_lattice.n
     << ";L=" << format_g17(hartree_lattice.length) << ";vn=" << vlasov_lattice.q.n
     << ";vnp=" << vlasov_lattice.np << ";vP=" << format_g17(vlasov_lattice.pmax)
     << ";qn=" << quadrature_lattice.q.n << ";qnp=" << quadrature_lattice.np
     << ";amp=" << format_g17(f0.amplitude) << ";budget=" << rank_budget
     << ";T=" << format_g17(horizon) << ";dt=" << format_g17(dt)
     << ";N=" << test_set_size << ";scale=" << format_g17(test_scale)
     << ";a=" << format_g17(a) << ";sign=" << sign << ";eps=" << format_g17(epsilon)
     << ";w=" << interaction.tag() << ";seed=" << seed << ";hbars=";
  for (double h : hbars) os << format_g17(h) << ",";
  return os.str();
}

MatchedData prepare_matched_data(const GaussianDescriptor& f0,
                                 const PhaseSpaceLattice& quad_lattice,
                                 const Lattice& target, const Params& params,
                                 int rank_budget, double eta0_target) {
  MatchedData md;
  md.f0 = f0.sample_on(quad_lattice);
  double fmin = min_real(md.f0);
  if (fmin < 0.0) throw std::domain_error("prepare_matched_data: f0 must be nonnegative");
  md.gamma0 = toeplitz(md.f0, rank_budget, target, params);
  md.xin = xin_norm(md.gamma0);
  md.l1_gamma = schatten_norm(md.gamma0, 1.0);
  md.l1_f = lp_norm(md.f0, 1.0);
  md.smallness_ok = md.xin <= eta0_target;
  return md;
}

// ---------------------------------------------------------------------------

namespace {

struct VlasovSide {
  VlasovTrajectory traj;
  std::vector<PhaseSpaceField> g; // moving-frame snapshots
  TestSet tests;
  std::vector<std::vector<cplx>> g_pairings; // [snapshot][member]
  std::vector<cplx> fplus_pairings;
};

// common Hermite degree caps across the comparison lattices, so every side
// enumerates the same test functions
std::pair<int, int> common_caps(const SweepConfig& cfg) {
  auto [cq, cp] = test_set_caps(cfg.vlasov_lattice, cfg.test_scale);
  for (double hbar : cfg.hbars) {
    auto [wq, wp] = test_set_caps(wigner_lattice(cfg.hartree_lattice, hbar),
                                  cfg.test_scale);
    cq = std::min(cq, wq);
    cp = std::min(cp, wp);
  }
  if (cq < 0 || cp < 0)
    throw std::runtime_error("sweep: test scale does not fit the smallest momentum box");
  return {cq, cp};
}

VlasovSide run_vlasov_side(const SweepConfig& cfg, int cap_q, int cap_p) {
  VlasovSide side;
  PhaseSpaceField f0 = cfg.f0.sample_on(cfg.vlasov_lattice);
  TimeGrid grid(0.0, cfg.horizon, cfg.dt, cfg.snapshot_stride);
  Params ref_params(1.0, cfg.hartree_lattice.d, cfg.a, cfg.sign, cfg.epsilon);
  side.traj = vlasov_run(f0, cfg.interaction.make(cfg.vlasov_lattice.q), grid,
                         ref_params.r_eps());
  side.g = moving_frame(side.traj);
  side.tests =
      make_test_set(cfg.test_set_size, cfg.vlasov_lattice, cfg.test_scale, cap_q, cap_p);
  side.g_pairings.resize(side.g.size());
  for (std::size_t s = 0; s < side.g.size(); ++s) {
    side.g_pairings[s].resize(cfg.test_set_size);
    for (int m = 0; m < cfg.test_set_size; ++m)
      side.g_pairings[s][m] = side.tests.pairing(side.g[s], m);
  }
  side.fplus_pairings = side.g_pairings.back();
  return side;
}

} // namespace

CorrespondenceReport semiclassical_sweep(const SweepConfig& cfg) {
  cfg.validate();
  CorrespondenceReport rep;
  rep.meta_hash = metadata_hash(cfg.canonical());

  const bool emit = !cfg.out_dir.empty();
  if (emit) std::filesystem::create_directories(cfg.out_dir);

  auto [cap_q, cap_p] = common_caps(cfg);
  VlasovSide vside = run_vlasov_side(cfg, cap_q, cap_p);
  {
    std::vector<double> ts, vs;
    for (const VlasovDiagRow& row : vside.traj.diag)
      if (row.t >= 1.0 && row.rho_lr > 0.0) {
        ts.push_back(row.t);
        vs.push_back(row.rho_lr);
      }
    if (ts.size() >= 5) rep.vlasov_density_decay = fit_power_law(ts, vs);
  }
  if (emit) {
    CsvWriter csv(cfg.out_dir / "vlasov_diag.csv",
                  {"t", "mass", "l2", "rho_l1", "rho_lr", "rho_linf", "grad_phi_inf"});
    csv.comment("meta " + rep.meta_hash);
    for (const VlasovDiagRow& r : vside.traj.diag) {
      double row[7] = {r.t, r.mass, r.l2, r.rho_l1, r.rho_lr, r.rho_linf, r.grad_phi_inf};
      csv.row(row);
    }
  }

  for (double hbar : cfg.hbars) {
    SweepMember mem;
    mem.hbar = hbar;
    Params par(hbar, cfg.hartree_lattice.d, cfg.a, cfg.sign, cfg.epsilon);
    PhaseSpaceLattice quad = cfg.quadrature_lattice;
    MatchedData md = prepare_matched_data(cfg.f0, quad, cfg.hartree_lattice, par,
                                          cfg.rank_budget, cfg.eta0_target);
    mem.xin0 = md.xin;
    mem.smallness_ok = md.smallness_ok;
    mem.meta_hash = metadata_hash(cfg.canonical() + ";hbar=" + format_g17(hbar));

    TestSet tests_h =
        make_test_set(cfg.test_set_size, wigner_lattice(cfg.hartree_lattice, hbar),
                      cfg.test_scale, cap_q, cap_p);

    // t = 0 Toeplitz fidelity in the weak metric
    {
      PhaseSpaceField w0 = wigner(md.gamma0);
      PhaseSpaceField f0v = cfg.f0.sample_on(cfg.vlasov_lattice);
      mem.fidelity_t0 = weak_metric_cross(w0, tests_h, f0v, vside.tests);
    }

    TimeGrid grid(0.0, cfg.horizon, cfg.dt, cfg.snapshot_stride);
    HartreeOptions hopts;
    HartreeTrajectory traj =
        evolve(md.gamma0, cfg.interaction.make(cfg.hartree_lattice), grid, hopts);
    if (traj.halted)
      throw std::runtime_error("sweep member hbar = " + format_g17(hbar) +
                               " halted: " + traj.halt_reason);

    mem.znorm_phi = z_norm(traj.phi_samples, par.sigma_eps());
    mem.trace_drift = std::abs(traj.diag.back().trace - traj.diag.front().trace) /
                      std::max(traj.diag.front().trace, 1e-300);
    double w0m = traj.snapshots.front().weighted_mom, wmax = w0m;
    for (const HartreeSnapshot& s : traj.snapshots) wmax = std::max(wmax, s.weighted_mom);
    mem.weighted_growth = (w0m > 0.0) ? wmax / w0m : 0.0;

    if (traj.snapshots.size() != vside.g.size())
      throw std::runtime_error("sweep: snapshot grids disagree between the two solvers");

    for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
      const HartreeSnapshot& snap = traj.snapshots[s];
      OrbitalEnsemble back = backward_frame(snap.state, snap.t);
      PhaseSpaceField gh = wigner(back);
      double dw = 0.0, w = 0.5;
      for (int m = 0; m < cfg.test_set_size; ++m) {
        dw += w * std::abs(tests_h.pairing(gh, m) - vside.g_pairings[s][m]);
        w *= 0.5;
      }
      mem.times.push_back(snap.t);
      mem.dw.push_back(dw);
      mem.sup_dw = std::max(mem.sup_dw, dw);
      if (s + 1 == traj.snapshots.size()) {
        for (int m = 0; m < cfg.pairing_count; ++m)
          mem.pairing_gap.push_back(
              std::abs(tests_h.pairing(gh, m) - vside.fplus_pairings[m]));
      }
    }

    if (emit) {
      std::filesystem::path dir = cfg.out_dir / ("hbar_" + format_g17(hbar));
      std::filesystem::create_directories(dir);
      {
        CsvWriter csv(dir / "dw.csv", {"t", "dw"});
        csv.comment("meta " + mem.meta_hash);
        for (std::size_t s = 0; s < mem.times.size(); ++s) {
          double row[2] = {mem.times[s], mem.dw[s]};
          csv.row(row);
        }
      }
      {
        CsvWriter csv(dir / "diag.csv",
                      {"t", "trace", "rho_l1", "rho_lr", "rho_linf", "phi_inf",
                       "grad_phi_inf"});
        csv.comment("meta " + mem.meta_hash);
        for (const HartreeDiagRow& r : traj.diag) {
          double row[7] = {r.t, r.trace, r.rho_l1, r.rho_lr, r.rho_linf, r.phi_inf,
                           r.grad_phi_inf};
          csv.row(row);
        }
      }
      {
        CsvWriter csv(dir / "pairings.csv", {"n", "gap"});
        csv.comment("meta " + mem.meta_hash);
        for (std::size_t m = 0; m < mem.pairing_gap.size(); ++m) {
          double row[2] = {static_cast<double>(m + 1), mem.pairing_gap[m]};
          csv.row(row);
        }
      }
    }
    rep.members.push_back(std::move(mem));
  }

  rep.dw_monotone = true;
  for (std::size_t i = 0; i + 1 < rep.members.size(); ++i)
    if (!(rep.members[i + 1].sup_dw < rep.members[i].sup_dw)) rep.dw_monotone = false;
  rep.pairings_monotone = true;
  for (std::size_t i = 0; i + 1 < rep.members.size(); ++i)
    for (int m = 0; m < cfg.pairing_count; ++m)
      if (!(rep.members[i + 1].pairing_gap[m] <= rep.members[i].pairing_gap[m] + 1e-15))
        rep.pairings_monotone = false;

  if (emit) write_report_json(cfg.out_dir / "report.json", cfg, rep);
  return rep;
}

void write_report_json(const std::filesystem::path& path, const SweepConfig& cfg,
                       const CorrespondenceReport& rep) {
  json j;
  j["schema_version"] = 1;
  j["meta_hash"] = rep.meta_hash;
  j["config"] = {{"hbars", cfg.hbars},
                 {"horizon", cfg.horizon},
                 {"dt", cfg.dt},
                 {"rank_budget", cfg.rank_budget},
                 {"test_set_size", cfg.test_set_size},
                 {"a", cfg.a},
                 {"epsilon", cfg.epsilon},
                 {"seed", cfg.seed}};
  j["dw_monotone"] = rep.dw_monotone;
  j["pairings_monotone"] = rep.pairings_monotone;
  if (rep.vlasov_density_decay.points > 0)
    j["vlasov_density_decay"] = {{"slope", rep.vlasov_density_decay.slope},
                                 {"stderr", rep.vlasov_density_decay.stderr_slope}};
  j["members"] = json::array();
  for (const SweepMember& m : rep.members) {
    json jm;
    jm["hbar"] = m.hbar;
    jm["meta_hash"] = m.meta_hash;
    jm["xin0"] = m.xin0;
    jm["smallness_ok"] = m.smallness_ok;
    jm["fidelity_t0"] = m.fidelity_t0;
    jm["sup_dw"] = m.sup_dw;
    jm["dw_times"] = m.times;
    jm["dw"] = m.dw;
    jm["pairing_gap"] = m.pairing_gap;
    jm["znorm_phi"] = m.znorm_phi;
    jm["trace_drift"] = m.trace_drift;
    jm["weighted_growth"] = m.weighted_growth;
    j["members"].push_back(jm);
  }
  std::ofstream os(path, std::ios::trunc);
  os << j.dump(2) << "\n";
}

} // namespace sclab
