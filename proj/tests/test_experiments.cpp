#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"

#include "sclab/experiments.hpp"
#include "sclab/io.hpp"

#include <fstream>
#include <random>

using namespace sclab;
using namespace sclab::testing;

TEST_CASE("power law fitting") {
  SUBCASE("exact power law") {
    std::vector<double> t, v;
    for (double x = 2.0; x <= 30.0; x += 1.0) {
      t.push_back(x);
      v.push_back(std::pow(jbracket(x), -3.0));
    }
    PowerLawFit fit = fit_power_law(t, v);
    CHECK(std::abs(fit.slope + 3.0) < 1e-6);
  }

  SUBCASE("constant series") {
    std::vector<double> t, v;
    for (double x = 2.0; x <= 30.0; x += 1.0) {
      t.push_back(x);
      v.push_back(0.7);
    }
    PowerLawFit fit = fit_power_law(t, v);
    CHECK(std::abs(fit.slope) < 1e-6);
  }

  SUBCASE("noisy power law lands within three standard errors") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<double> t, v;
    for (double x = 2.0; x <= 60.0; x += 1.0) {
      t.push_back(x);
      v.push_back(std::pow(jbracket(x), -1.7) * (1.0 + noise(rng)));
    }
    PowerLawFit fit = fit_power_law(t, v);
    CHECK(std::abs(fit.slope + 1.7) < 3.0 * fit.stderr_slope + 1e-4);
  }

  SUBCASE("error paths") {
    std::vector<double> t = {1, 2, 3, 4, 5}, v = {1, 1, 0, 1, 1};
    CHECK_THROWS(fit_power_law(t, v)); // nonpositive value
    std::vector<double> t2 = {1, 2}, v2 = {1, 1};
    CHECK_THROWS(fit_power_law(t2, v2)); // too short
  }
}

TEST_CASE("matched data preparation") {
  PhaseSpaceLattice quad(Lattice(1, 128, 48.0), 16, 2.0);
  Lattice target(1, 256, 48.0);

  SUBCASE("zero symbol gives an empty ensemble") {
    GaussianDescriptor g = GaussianDescriptor::isotropic(1, 0.0, 1.0, 0.4);
    Params par(0.5, 1, 1.2, 1, 0.01);
    MatchedData md = prepare_matched_data(g, quad, target, par, 64, 0.05);
    CHECK(md.gamma0.rank() == 0);
  }

  SUBCASE("mass fidelity within five percent") {
    GaussianDescriptor g = GaussianDescriptor::isotropic(1, 0.01, 1.0, 0.4);
    for (double hbar : {1.0, 0.5, 0.25}) {
      Params par(hbar, 1, 1.2, 1, 0.01);
      MatchedData md = prepare_matched_data(g, quad, target, par, 512, 0.05);
      CHECK(std::abs(md.l1_gamma - md.l1_f) < 0.05 * md.l1_f);
    }
  }

  SUBCASE("wigner of the toeplitz data converges weakly to f0") {
    GaussianDescriptor g = GaussianDescriptor::isotropic(1, 0.01, 1.0, 0.4);
    auto [cq, cp] = test_set_caps(quad, 0.5);
    for (double hbar : {1.0, 0.5, 0.25}) {
      auto [wq, wp] = test_set_caps(wigner_lattice(target, hbar), 0.5);
      cq = std::min(cq, wq);
      cp = std::min(cp, wp);
    }
    TestSet tests_v = make_test_set(32, quad, 0.5, cq, cp);
    std::vector<double> dws;
    for (double hbar : {1.0, 0.5, 0.25}) {
      Params par(hbar, 1, 1.2, 1, 0.01);
      MatchedData md = prepare_matched_data(g, quad, target, par, 512, 0.05);
      PhaseSpaceField W = wigner(md.gamma0);
      TestSet tests_h = make_test_set(32, W.lat, 0.5, cq, cp);
      dws.push_back(weak_metric_cross(W, tests_h, md.f0, tests_v));
    }
    CHECK(dws[1] < dws[0]);
    CHECK(dws[2] < dws[1]);
  }
}

TEST_CASE("sweep determinism produces identical csv bytes") {
  SweepConfig cfg;
  cfg.hbars = {1.0, 0.5};
  cfg.f0 = GaussianDescriptor::isotropic(1, 0.01, 1.0, 0.4);
  cfg.rank_budget = 32;
  cfg.horizon = 1.0;
  cfg.dt = 0.05;
  cfg.snapshot_stride = 10;
  cfg.hartree_lattice = Lattice(1, 128, 24.0);
  cfg.vlasov_lattice = PhaseSpaceLattice(Lattice(1, 64, 24.0), 32, 2.0);
  cfg.quadrature_lattice = PhaseSpaceLattice(Lattice(1, 64, 24.0), 16, 2.0);
  cfg.test_set_size = 16;
  cfg.interaction.kind = InteractionSpec::Kind::None;

  auto read_all = [](const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };

  auto tmp = std::filesystem::temp_directory_path();
  cfg.out_dir = tmp / "sclab_sweep_a";
  semiclassical_sweep(cfg);
  cfg.out_dir = tmp / "sclab_sweep_b";
  semiclassical_sweep(cfg);

  for (const char* rel : {"vlasov_diag.csv", "hbar_1/dw.csv", "hbar_0.5/dw.csv",
                          "hbar_1/pairings.csv", "report.json"}) {
    std::string a = read_all(tmp / "sclab_sweep_a" / rel);
    std::string b = read_all(tmp / "sclab_sweep_b" / rel);
    REQUIRE(!a.empty());
    CHECK(a == b);
  }
  std::filesystem::remove_all(tmp / "sclab_sweep_a");
  std::filesystem::remove_all(tmp / "sclab_sweep_b");
}

TEST_CASE("free sweep keeps the moving frame constant") {
  // with zero interaction the backward identity makes g^hbar(t) constant in t,
  // so d^w(t) equals the t = 0 Toeplitz fidelity for every snapshot
  SweepConfig cfg;
  cfg.hbars = {0.5};
  cfg.f0 = GaussianDescriptor::isotropic(1, 0.01, 1.0, 0.4);
  cfg.rank_budget = 64;
  cfg.horizon = 2.0;
  cfg.dt = 0.05;
  cfg.snapshot_stride = 20;
  cfg.hartree_lattice = Lattice(1, 128, 24.0);
  cfg.vlasov_lattice = PhaseSpaceLattice(Lattice(1, 64, 24.0), 32, 2.0);
  cfg.quadrature_lattice = PhaseSpaceLattice(Lattice(1, 64, 24.0), 16, 2.0);
  cfg.test_set_size = 16;
  cfg.interaction.kind = InteractionSpec::Kind::None;

  CorrespondenceReport rep = semiclassical_sweep(cfg);
  const SweepMember& m = rep.members.front();
  for (double dw : m.dw) CHECK(std::abs(dw - m.dw.front()) < 1e-8);
}

TEST_CASE("psfield serialization round trip") {
  PhaseSpaceLattice pl(Lattice(1, 64, 20.0), 32, 3.0);
  PhaseSpaceField f = sample(pl, [](std::span<const double> q,
                                    std::span<const double> p) -> cplx {
    return cplx(q[0], p[0]);
  });
  auto tmp = std::filesystem::temp_directory_path() / "sclab_test_psf";
  save_psfield(tmp, f);
  PhaseSpaceField g = load_psfield(tmp);
  CHECK(g.lat == f.lat);
  CHECK(g.v == f.v);
  std::filesystem::remove(tmp.string() + ".bin");
  std::filesystem::remove(tmp.string() + ".json");
}

TEST_CASE("metadata hash is stable") {
  CHECK(metadata_hash("abc") == metadata_hash("abc"));
  CHECK(metadata_hash("abc") != metadata_hash("abd"));
  CHECK(metadata_hash("x").size() == 16);
}
