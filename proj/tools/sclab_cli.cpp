// sclab command-line driver.
//
// Subcommands:
//   transform-check   phase-space transform identity suite (pass/fail table)
//   free-dispersion   free-flow density decay probe across hbar
//   hartree-run       nonlinear Hartree evolution from a config file
//   vlasov-run        Vlasov evolution from a config file
//   sweep             semi-classical hbar sweep (correspondence report)
//   report            re-render a sweep report.json into plot-ready CSVs
//
// Exit codes: 0 success, 1 numerical-gate failure, 2 config/usage error.

#include "sclab/experiments.hpp"
#include "sclab/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>

using namespace sclab;
using nlohmann::json;

namespace {

std::filesystem::path output_root(const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("SCLAB_OUT")) return env;
  return ".";
}

struct CheckTable {
  bool all_ok = true;
  void row(const std::string& name, bool ok, double value, double tol) {
    std::printf("[%s] %-46s %.3e (tol %.1e)\n", ok ? "PASS" : "FAIL", name.c_str(), value,
                tol);
    all_ok = all_ok && ok;
  }
};

int cmd_transform_check(int d, int n, double hbar, double box) {
  Lattice lat(d, n, box);
  Params par(hbar, d, 1.2, 1, 0.01);
  CheckTable table;

  OrbitalEnsemble gamma(lat, par);
  std::vector<double> q0(d, 0.4), p0(d, -0.6), q1(d, -0.9), p1(d, 0.3);
  gamma.add(make_coherent_state(lat, hbar, q0, p0).field, 0.8);
  gamma.add(make_coherent_state(lat, hbar, q1, p1).field, 0.5);

  PhaseSpaceField W = wigner(gamma);
  double iso = std::abs(lp_norm(W, 2.0) - schatten_norm(gamma, 2.0)) /
               schatten_norm(gamma, 2.0);
  table.row("Wigner isometry |  ||W||_2 = ||gamma||_L2", iso < 1e-8, iso, 1e-8);

  if (d == 1) {
    WeylKernel K = weyl(W, hbar);
    PhaseSpaceField W2 = wigner_of_kernel(K);
    double sup = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < W.v.size(); ++i) {
      sup = std::max(sup, std::abs(W2.v[i] - W.v[i]));
      ref = std::max(ref, std::abs(W.v[i]));
    }
    table.row("Wigner(Weyl(f)) = f inversion", sup / ref < 1e-8, sup / ref, 1e-8);

    PhaseSpaceField ftest = sample(W.lat, [](std::span<const double> q,
                                             std::span<const double> p) -> cplx {
      return std::exp(-(q[0] * q[0] + 0.5 * p[0] * p[0])) * (1.0 + 0.3 * q[0]);
    });
    WeylKernel Kt = weyl(ftest, hbar);
    double lhs = l2_inner(W, ftest).real();
    double rhs = trace_weyl(gamma, Kt);
    double rel = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
    table.row("adjointness <Wig g|f> = (2pi hbar)^d Tr(g Weyl f)", rel < 1e-6, rel, 1e-6);
  }

  PhaseSpaceField H = husimi(gamma);
  PhaseSpaceField GW = gaussian_smooth(W, hbar);
  double sm = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < H.v.size(); ++i) {
    sm = std::max(sm, std::abs(H.v[i] - GW.v[i]));
    ref = std::max(ref, std::abs(H.v[i]));
  }
  table.row("Husimi = G * Wigner", sm / ref < 1e-8, sm / ref, 1e-8);
  double neg = -min_real(H);
  table.row("Husimi positivity", neg < 1e-12, neg, 1e-12);

  // coarse full-coverage node grid keeps the Toeplitz quadrature untruncated
  auto symbol = [](std::span<const double> q, std::span<const double> p) -> cplx {
    double e = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) e += q[a] * q[a] + p[a] * p[a];
    return std::exp(-e / 2.0);
  };
  PhaseSpaceLattice nodes(Lattice(d, d == 1 ? 64 : 16, box), d == 1 ? 64 : 8, 8.0);
  PhaseSpaceField fn = sample(nodes, symbol);
  OrbitalEnsemble toep =
      toeplitz(fn, static_cast<int>(std::min<std::int64_t>(nodes.size(), 4096)), lat, par);
  double occ_min = 0.0;
  for (double l : toep.occupations) occ_min = std::min(occ_min, l);
  table.row("Toeplitz occupation positivity", occ_min >= 0.0, occ_min, 0.0);

  double duality = 0.0;
  {
    double lhs = 0.0;
    for (int k = 0; k < toep.rank(); ++k) {
      for (int j = 0; j < gamma.rank(); ++j) {
        cplx ip = l2_inner(gamma.orbitals[j], toep.orbitals[k]);
        lhs += toep.occupations[k] * gamma.occupations[j] * std::norm(ip);
      }
    }
    lhs *= std::pow(2.0 * PI * hbar, lat.d);
    double rhs = l2_inner(H, sample(H.lat, symbol)).real();
    duality = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
  }
  table.row("duality (2pi hbar)^d Tr(A Toep f) = <Hus A|f>", duality < 1e-6, duality, 1e-6);

  return table.all_ok ? 0 : 1;
}

int cmd_free_dispersion(const std::string& rspec, const std::vector<double>& hbars, int n,
                        double box, double t0, double t1, int points,
                        const std::string& out) {
  double r = (rspec == "inf") ? std::numeric_limits<double>::infinity() : std::stod(rspec);
  std::filesystem::path dir = output_root(out);
  std::filesystem::create_directories(dir);

  std::vector<double> times;
  for (int i = 0; i < points; ++i)
    times.push_back(t0 * std::pow(t1 / t0, static_cast<double>(i) / (points - 1)));

  bool ok = true;
  CsvWriter summary(dir / "free_dispersion_slopes.csv", {"hbar", "slope", "stderr"});
  for (double hbar : hbars) {
    Lattice lat(1, n, box);
    Params par(hbar, 1, 1.2, 1, 0.01);
    OrbitalEnsemble gamma(lat, par);
    std::vector<double> c0(1, 0.0);
    gamma.add(make_coherent_state(lat, hbar, c0, c0).field, 1.0);
    auto rows = free_dispersion_probe(gamma, r, times);

    CsvWriter csv(dir / ("free_dispersion_hbar_" + format_g17(hbar) + ".csv"),
                  {"t", "norm", "ceiling_static", "ceiling_decay"});
    std::vector<double> ts, vs;
    for (const DecayRow& row : rows) {
      double vals[4] = {row.t, row.norm, row.ceiling_static, row.ceiling_decay};
      csv.row(vals);
      ts.push_back(row.t);
      vs.push_back(row.norm);
    }
    PowerLawFit fit = fit_power_law(ts, vs);
    double srow[3] = {hbar, fit.slope, fit.stderr_slope};
    summary.row(srow);
    std::printf("hbar %-8s slope % .5f (target %.1f)\n", format_g17(hbar).c_str(),
                fit.slope, -1.0);
    if (std::abs(fit.slope + 1.0) > 0.05) ok = false;
  }
  return ok ? 0 : 1;
}

Interaction interaction_from_config(const std::string& mode, int sign, double a, int d,
                                    const Lattice& lat, double smooth_core,
                                    double smooth_amp) {
  if (mode == "riesz") return Interaction::riesz(sign, a, d);
  if (mode == "none") return Interaction::none(lat);
  if (mode == "smooth") {
    Field w = sample(lat, [&](std::span<const double> x) -> cplx {
      double r2 = smooth_core * smooth_core;
      for (double c : x) r2 += c * c;
      return smooth_amp * std::pow(r2, -0.5 * a);
    });
    return Interaction::smooth(sign, a, std::move(w));
  }
  throw CLI::ValidationError("interaction must be riesz|smooth|none");
}

struct RunCommon {
  int d = 1, n = 512;
  double box = 48.0, hbar = 0.5, a = 1.2, epsilon = 0.01;
  int sign = 1;
  std::string interaction = "smooth";
  double smooth_core = 0.5, smooth_amp = 1.0;
  double t1 = 8.0, dt = 0.01;
  int snapshot_stride = 50;
  std::string out;
};

void add_common(CLI::App* app, RunCommon& c) {
  app->add_option("--d", c.d);
  app->add_option("--n", c.n);
  app->add_option("--box", c.box);
  app->add_option("--hbar", c.hbar);
  app->add_option("--a", c.a);
  app->add_option("--sign", c.sign);
  app->add_option("--epsilon", c.epsilon);
  app->add_option("--interaction", c.interaction);
  app->add_option("--smooth-core", c.smooth_core);
  app->add_option("--smooth-amp", c.smooth_amp);
  app->add_option("--t1", c.t1);
  app->add_option("--dt", c.dt);
  app->add_option("--snapshot-stride", c.snapshot_stride);
  app->add_option("--out", c.out);
}

int cmd_hartree_run(const RunCommon& c, const std::string& init,
                    const std::string& init_path, double amp, double qw, double pw,
                    int budget, double safety, bool override_step, double ceiling) {
  Lattice lat(c.d, c.n, c.box);
  Params par(c.hbar, c.d, c.a, c.sign, c.epsilon);
  if (auto warn = par.range_warning())
    std::fprintf(stderr, "sclab warning: %s\n", warn->c_str());
  Interaction w = interaction_from_config(c.interaction, c.sign, c.a, c.d, lat,
                                          c.smooth_core, c.smooth_amp);

  OrbitalEnsemble gamma0(lat, par);
  if (init == "coherent") {
    std::vector<double> q0(c.d, 0.0), p0(c.d, 0.0);
    gamma0.add(make_coherent_state(lat, c.hbar, q0, p0).field, amp);
  } else if (init == "file") {
    gamma0 = load_ensemble(init_path);
  } else if (init == "toeplitz") {
    GaussianDescriptor g = GaussianDescriptor::isotropic(c.d, amp, qw, pw);
    PhaseSpaceLattice quad(Lattice(c.d, std::min(c.n, 128), c.box), 16, 4.0 * pw);
    MatchedData md = prepare_matched_data(g, quad, lat, par, budget, 0.05);
    std::printf("toeplitz data: Xin = %.6g smallness_ok = %d\n", md.xin,
                md.smallness_ok ? 1 : 0);
    gamma0 = std::move(md.gamma0);
  } else {
    throw CLI::ValidationError("init must be coherent|file|toeplitz");
  }

  const double lwp = lwp_timestep(gamma0, safety);
  std::printf("lwp timestep scale: %.6g (dt = %.6g)\n", lwp, c.dt);

  HartreeOptions opts;
  opts.allow_step_override = override_step;
  opts.blowup_ceiling = ceiling;
  TimeGrid grid(0.0, c.t1, c.dt, c.snapshot_stride);
  HartreeTrajectory traj = evolve(gamma0, w, grid, opts);

  std::filesystem::path dir = output_root(c.out);
  std::filesystem::create_directories(dir);
  const std::string meta = metadata_hash("hartree;" + std::to_string(c.n) + ";" +
                                         format_g17(c.hbar) + ";" + format_g17(c.dt));
  {
    CsvWriter csv(dir / "hartree_diag.csv",
                  {"t", "trace", "rho_l1", "rho_lr", "rho_linf", "phi_inf",
                   "grad_phi_inf"});
    csv.comment("meta " + meta);
    for (const HartreeDiagRow& r : traj.diag) {
      double row[7] = {r.t, r.trace, r.rho_l1, r.rho_lr, r.rho_linf, r.phi_inf,
                       r.grad_phi_inf};
      csv.row(row);
    }
  }
  {
    json jmeta;
    jmeta["lattice"] = {{"d", c.d}, {"n", c.n}, {"length", c.box}};
    jmeta["hbar"] = c.hbar;
    jmeta["dt"] = c.dt;
    jmeta["interaction"] = c.interaction;
    jmeta["meta_hash"] = meta;
    jmeta["halted"] = traj.halted;
    if (traj.halted) jmeta["halt_reason"] = traj.halt_reason;
    jmeta["znorm_phi"] = z_norm(traj.phi_samples, par.sigma_eps());
    std::ofstream os(dir / "hartree_run.json", std::ios::trunc);
    os << jmeta.dump(2) << "\n";
  }
  save_ensemble(dir / "hartree_final", traj.last().state);
  if (traj.halted) {
    std::printf("halted: %s\n", traj.halt_reason.c_str());
    return 1;
  }
  std::printf("done: %zu snapshots, trace drift %.3e\n", traj.snapshots.size(),
              std::abs(traj.diag.back().trace - traj.diag.front().trace));
  return 0;
}

int cmd_vlasov_run(const RunCommon& c, int np, double pmax, double amp, double qw,
                   double pw) {
  if (c.d != 1) throw CLI::ValidationError("vlasov-run supports d = 1 only");
  Lattice lat(1, c.n, c.box);
  PhaseSpaceLattice pl(lat, np, pmax);
  GaussianDescriptor g = GaussianDescriptor::isotropic(1, amp, qw, pw);
  PhaseSpaceField f0 = g.sample_on(pl);
  Interaction w = interaction_from_config(c.interaction, c.sign, c.a, 1, lat,
                                          c.smooth_core, c.smooth_amp);
  Params par(std::min(c.hbar, 1.0), 1, c.a, c.sign, c.epsilon);
  TimeGrid grid(0.0, c.t1, c.dt, c.snapshot_stride);
  VlasovTrajectory traj = vlasov_run(f0, w, grid, par.r_eps());

  std::filesystem::path dir = output_root(c.out);
  std::filesystem::create_directories(dir);
  {
    CsvWriter csv(dir / "vlasov_diag.csv",
                  {"t", "mass", "l2", "rho_l1", "rho_lr", "rho_linf", "grad_phi_inf"});
    for (const VlasovDiagRow& r : traj.diag) {
      double row[7] = {r.t, r.mass, r.l2, r.rho_l1, r.rho_lr, r.rho_linf, r.grad_phi_inf};
      csv.row(row);
    }
  }
  save_psfield(dir / "vlasov_final", traj.snapshots.back().f);
  if (traj.halted) {
    std::printf("halted: %s\n", traj.halt_reason.c_str());
    return 1;
  }
  std::printf("done: %zu snapshots, mass %.12g\n", traj.snapshots.size(),
              traj.diag.back().mass);
  return 0;
}

int cmd_sweep(const std::string& hbars_csv, double amp, double qw, double pw, int budget,
              double horizon, double dt, int stride, int nq, double box, int testN,
              double scale, double a, double eps, const std::string& wmode,
              double smooth_core, double smooth_amp, int sign, std::uint64_t seed,
              const std::string& out) {
  SweepConfig cfg;
  if (!hbars_csv.empty()) {
    cfg.hbars.clear();
    std::stringstream ss(hbars_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.hbars.push_back(std::stod(tok));
  }
  cfg.f0 = GaussianDescriptor::isotropic(1, amp, qw, pw);
  cfg.rank_budget = budget;
  cfg.horizon = horizon;
  cfg.dt = dt;
  cfg.snapshot_stride = stride;
  cfg.hartree_lattice = Lattice(1, nq, box);
  cfg.vlasov_lattice = PhaseSpaceLattice(Lattice(1, nq / 2, box), 64, 4.0 * pw);
  cfg.quadrature_lattice = PhaseSpaceLattice(Lattice(1, 128, box), 16, 4.0 * pw);
  cfg.test_set_size = testN;
  cfg.test_scale = scale;
  cfg.a = a;
  cfg.epsilon = eps;
  cfg.sign = sign;
  cfg.seed = seed;
  if (wmode == "riesz")
    cfg.interaction = {InteractionSpec::Kind::Riesz, sign, a, smooth_core, smooth_amp};
  else if (wmode == "none")
    cfg.interaction = {InteractionSpec::Kind::None, sign, a, smooth_core, smooth_amp};
  else if (wmode == "smooth")
    cfg.interaction = {InteractionSpec::Kind::Smooth, sign, a, smooth_core, smooth_amp};
  else
    throw CLI::ValidationError("interaction must be riesz|smooth|none");
  cfg.out_dir = output_root(out);

  CorrespondenceReport rep = semiclassical_sweep(cfg);
  std::printf("%-8s %-12s %-12s %-12s\n", "hbar", "sup_dw", "fidelity_t0", "znorm_phi");
  for (const SweepMember& m : rep.members)
    std::printf("%-8s %-12.5e %-12.5e %-12.5e\n", format_g17(m.hbar).c_str(), m.sup_dw,
                m.fidelity_t0, m.znorm_phi);
  std::printf("dw monotone: %s | pairings monotone: %s\n",
              rep.dw_monotone ? "yes" : "no", rep.pairings_monotone ? "yes" : "no");
  for (const SweepMember& m : rep.members)
    if (!m.smallness_ok || m.trace_drift > 1e-8) return 1;
  return 0;
}

int cmd_report(const std::string& in, const std::string& out) {
  std::ifstream is(in);
  if (!is) throw CLI::ValidationError("report: cannot open " + in);
  json j;
  is >> j;
  std::filesystem::path dir = output_root(out);
  std::filesystem::create_directories(dir);
  {
    CsvWriter csv(dir / "sweep_summary.csv",
                  {"hbar", "sup_dw", "fidelity_t0", "xin0", "znorm_phi", "trace_drift"});
    for (const auto& m : j.at("members")) {
      double row[6] = {m.at("hbar"),       m.at("sup_dw"),    m.at("fidelity_t0"),
                       m.at("xin0"),       m.at("znorm_phi"), m.at("trace_drift")};
      csv.row(row);
    }
  }
  {
    CsvWriter csv(dir / "sweep_pairings.csv", {"hbar", "n", "gap"});
    for (const auto& m : j.at("members")) {
      const auto& gaps = m.at("pairing_gap");
      for (std::size_t k = 0; k < gaps.size(); ++k) {
        double row[3] = {m.at("hbar"), static_cast<double>(k + 1), gaps[k]};
        csv.row(row);
      }
    }
  }
  std::printf("report tables written to %s\n", dir.string().c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"sclab: spectral laboratory for quantum and classical mean-field dynamics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI config file");

  // transform-check
  auto* tc = app.add_subcommand("transform-check", "phase-space transform identity suite");
  int tc_d = 1, tc_n = 256;
  double tc_hbar = 1.0, tc_box = 30.0;
  tc->add_option("--d", tc_d);
  tc->add_option("--n", tc_n);
  tc->add_option("--hbar", tc_hbar);
  tc->add_option("--box", tc_box);

  // free-dispersion
  auto* fd = app.add_subcommand("free-dispersion", "free-flow density decay probe");
  std::string fd_r = "inf", fd_out;
  std::vector<double> fd_hbars = {1.0, 0.5, 0.25};
  int fd_n = 8192, fd_points = 8;
  double fd_box = 600.0, fd_t0 = 5.0, fd_t1 = 50.0;
  fd->add_option("--r", fd_r);
  fd->add_option("--hbars", fd_hbars)->delimiter(',');
  fd->add_option("--n", fd_n);
  fd->add_option("--box", fd_box);
  fd->add_option("--t0", fd_t0);
  fd->add_option("--t1", fd_t1);
  fd->add_option("--points", fd_points);
  fd->add_option("--out", fd_out);

  // hartree-run
  auto* hr = app.add_subcommand("hartree-run", "nonlinear Hartree evolution");
  RunCommon hr_c;
  add_common(hr, hr_c);
  std::string hr_init = "toeplitz", hr_init_path;
  double hr_amp = 0.002, hr_qw = 1.0, hr_pw = 0.4, hr_safety = 0.1;
  int hr_budget = 192;
  bool hr_override = false;
  double hr_ceiling = std::numeric_limits<double>::infinity();
  hr->add_option("--init", hr_init);
  hr->add_option("--init-path", hr_init_path);
  hr->add_option("--amplitude", hr_amp);
  hr->add_option("--q-width", hr_qw);
  hr->add_option("--p-width", hr_pw);
  hr->add_option("--budget", hr_budget);
  hr->add_option("--safety", hr_safety);
  hr->add_flag("--override-step", hr_override);
  hr->add_option("--blowup-ceiling", hr_ceiling);

  // vlasov-run
  auto* vr = app.add_subcommand("vlasov-run", "Vlasov evolution (d = 1)");
  RunCommon vr_c;
  add_common(vr, vr_c);
  int vr_np = 64;
  double vr_pmax = 2.5, vr_amp = 0.002, vr_qw = 1.0, vr_pw = 0.4;
  vr->add_option("--np", vr_np);
  vr->add_option("--pmax", vr_pmax);
  vr->add_option("--amplitude", vr_amp);
  vr->add_option("--q-width", vr_qw);
  vr->add_option("--p-width", vr_pw);

  // sweep
  auto* sw = app.add_subcommand("sweep", "semi-classical correspondence sweep");
  std::string sw_hbars, sw_wmode = "smooth", sw_out;
  double sw_amp = 0.002, sw_qw = 1.0, sw_pw = 0.4, sw_T = 8.0, sw_dt = 0.01;
  double sw_box = 48.0, sw_scale = 0.7, sw_a = 1.2, sw_eps = 0.01;
  double sw_score = 0.5, sw_samp = 1.0;
  int sw_budget = 192, sw_stride = 50, sw_nq = 512, sw_N = 64, sw_sign = 1;
  std::uint64_t sw_seed = 12345;
  sw->add_option("--hbars", sw_hbars);
  sw->add_option("--amplitude", sw_amp);
  sw->add_option("--q-width", sw_qw);
  sw->add_option("--p-width", sw_pw);
  sw->add_option("--budget", sw_budget);
  sw->add_option("--horizon", sw_T);
  sw->add_option("--dt", sw_dt);
  sw->add_option("--snapshot-stride", sw_stride);
  sw->add_option("--n", sw_nq);
  sw->add_option("--box", sw_box);
  sw->add_option("--tests", sw_N);
  sw->add_option("--test-scale", sw_scale);
  sw->add_option("--a", sw_a);
  sw->add_option("--epsilon", sw_eps);
  sw->add_option("--interaction", sw_wmode);
  sw->add_option("--smooth-core", sw_score);
  sw->add_option("--smooth-amp", sw_samp);
  sw->add_option("--sign", sw_sign);
  sw->add_option("--seed", sw_seed);
  sw->add_option("--out", sw_out);

  // report
  auto* rp = app.add_subcommand("report", "re-render a sweep report.json");
  std::string rp_in = "report.json", rp_out;
  rp->add_option("--in", rp_in);
  rp->add_option("--out", rp_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (tc->parsed()) return cmd_transform_check(tc_d, tc_n, tc_hbar, tc_box);
    if (fd->parsed())
      return cmd_free_dispersion(fd_r, fd_hbars, fd_n, fd_box, fd_t0, fd_t1, fd_points,
                                 fd_out);
    if (hr->parsed())
      return cmd_hartree_run(hr_c, hr_init, hr_init_path, hr_amp, hr_qw, hr_pw, hr_budget,
                             hr_safety, hr_override, hr_ceiling);
    if (vr->parsed()) return cmd_vlasov_run(vr_c, vr_np, vr_pmax, vr_amp, vr_qw, vr_pw);
    if (sw->parsed())
      return cmd_sweep(sw_hbars, sw_amp, sw_qw, sw_pw, sw_budget, sw_T, sw_dt, sw_stride,
                       sw_nq, sw_box, sw_N, sw_scale, sw_a, sw_eps, sw_wmode, sw_score,
                       sw_samp, sw_sign, sw_seed, sw_out);
    if (rp->parsed()) return cmd_report(rp_in, rp_out);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical gate failure: %s\n", e.what());
    return 1;
  }
  return 2;
}
