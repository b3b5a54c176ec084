#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"

#include <random>

using namespace sclab;
using namespace sclab::testing;

TEST_CASE("fourier round trip and Parseval") {
  for (int d : {1, 2}) {
    Lattice lat(d, d == 1 ? 512 : 64, 40.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Field f = sample(lat, [&](std::span<const double> x) -> cplx {
      double e = 0.0;
      for (double c : x) e += c * c;
      return std::exp(-e) * cplx(1.0, 0.4) + 1e-3 * cplx(uni(rng), uni(rng));
    });
    Field rt = from_fourier(to_fourier(f));
    CHECK(sup_diff(rt, f) / sup_abs(f) < 1e-12);

    Field fhat = to_fourier(f);
    double pos = 0.0, four = 0.0;
    for (const cplx& z : f.v) pos += std::norm(z);
    pos *= lat.cell_volume();
    for (const cplx& z : fhat.v) four += std::norm(z);
    for (int a = 0; a < d; ++a) four /= lat.length;
    CHECK(std::abs(pos - four) / pos < 1e-12);
  }
}

TEST_CASE("lp_norm basics") {
  Lattice lat(1, 512, 40.0);

  Field zero(lat);
  CHECK(lp_norm(zero, 1.0) == 0.0);
  CHECK(lp_norm(zero, 2.5) == 0.0);
  CHECK(lp_norm(zero, std::numeric_limits<double>::infinity()) == 0.0);

  Field cell(lat);
  cell.v[100] = 1.0;
  CHECK(lp_norm(cell, 1.0) == doctest::Approx(lat.spacing()).epsilon(1e-14));

  // ||e^{-x^2}||_2 = (pi/2)^{1/4}
  Field g = gaussian_field(lat, std::sqrt(0.5));
  CHECK(std::abs(lp_norm(g, 2.0) - std::pow(PI / 2.0, 0.25)) < 1e-8);

  CHECK_THROWS_AS(lp_norm(g, 0.5), std::domain_error);
}

TEST_CASE("lp_norm homogeneity") {
  Lattice lat(1, 256, 20.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Field f = sample(lat, [&](std::span<const double>) -> cplx {
    return cplx(uni(rng), uni(rng));
  });
  for (double r : {1.0, 2.0, 3.5, std::numeric_limits<double>::infinity()}) {
    double base = lp_norm(f, r);
    Field cf = f;
    for (cplx& z : cf.v) z *= 3.25;
    CHECK(lp_norm(cf, r) == doctest::Approx(3.25 * base).epsilon(1e-13));
  }
}

TEST_CASE("fourier_multiplier identity, derivative, composition") {
  Lattice lat(1, 512, 40.0);
  Field f = gaussian_field(lat);

  Field id = fourier_multiplier(f, [](std::span<const double>) -> cplx { return 1.0; });
  CHECK(sup_diff(id, f) < 1e-12 * sup_abs(f));

  Field s = sample(lat, [&](std::span<const double> x) -> cplx {
    return std::sin(2.0 * PI * x[0] / lat.length);
  });
  Field ds = fourier_multiplier(s, [](std::span<const double> xi) -> cplx {
    return cplx(0.0, xi[0]);
  });
  double err = 0.0;
  for (int j = 0; j < lat.n; ++j)
    err = std::max(err, std::abs(ds.v[j] - (2.0 * PI / lat.length) *
                                               std::cos(2.0 * PI * lat.coord(j) / lat.length)));
  CHECK(err < 1e-10);

  auto inv_bracket = [](std::span<const double> xi) -> cplx {
    return 1.0 / std::sqrt(1.0 + xi[0] * xi[0]);
  };
  auto inv_bracket2 = [](std::span<const double> xi) -> cplx {
    return 1.0 / (1.0 + xi[0] * xi[0]);
  };
  Field twice = fourier_multiplier(fourier_multiplier(f, inv_bracket), inv_bracket);
  Field once = fourier_multiplier(f, inv_bracket2);
  CHECK(sup_diff(twice, once) < 1e-12);

  CHECK_THROWS(fourier_multiplier(f, [](std::span<const double> xi) -> cplx {
    return xi[0] == 0.0 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  }));
}

TEST_CASE("free flow multiplier is an L2 isometry") {
  Lattice lat(1, 512, 40.0);
  Field f = sample(lat, [](std::span<const double> x) -> cplx {
    return std::exp(-x[0] * x[0]) * cplx(std::cos(3 * x[0]), std::sin(x[0]));
  });
  for (double t : {0.3, 1.0, 7.0}) {
    Field g = fourier_multiplier(f, [t](std::span<const double> xi) -> cplx {
      return std::polar(1.0, -0.5 * t * 0.5 * xi[0] * xi[0]);
    });
    CHECK(std::abs(lp_norm(g, 2.0) - lp_norm(f, 2.0)) < 1e-12 * lp_norm(f, 2.0));
  }
}

TEST_CASE("phase-space weighted norm") {
  Lattice q(1, 128, 24.0);
  PhaseSpaceLattice lat(q, 128, 6.0);

  PhaseSpaceField f = sample(lat, [](std::span<const double> qv,
                                     std::span<const double> pv) -> cplx {
    return std::exp(-qv[0] * qv[0] - pv[0] * pv[0]);
  });

  // sigma = 0 doubles the plain norm
  CHECK(weighted_norm(f, 2.0, 0.0) ==
        doctest::Approx(2.0 * lp_norm(f, 2.0)).epsilon(1e-13));

  // delta cell at the origin: <0> = 1 on both weights
  PhaseSpaceField delta(lat);
  delta.at(64, 64) = 1.0; // q = 0, p = 0
  double cellq = lp_norm(delta, 1.0);
  CHECK(weighted_norm(delta, 1.0, 3.7) == doctest::Approx(2.0 * cellq).epsilon(1e-13));

  // independent high-resolution quadrature oracle for r = 2, sigma = 1
  const int M = 2000;
  const double R = 10.0, h = 2.0 * R / M;
  double accq = 0.0, accp = 0.0;
  for (int i = 0; i < M; ++i) {
    double qv = -R + (i + 0.5) * h;
    for (int j = 0; j < M; ++j) {
      double pv = -R + (j + 0.5) * h;
      double f2 = std::exp(-2.0 * (qv * qv + pv * pv));
      accq += (1.0 + qv * qv) * f2;
      accp += (1.0 + pv * pv) * f2;
    }
  }
  double oracle = std::sqrt(accq * h * h) + std::sqrt(accp * h * h);
  CHECK(std::abs(weighted_norm(f, 2.0, 1.0) - oracle) < 1e-8);
}

TEST_CASE("phase-space transforms invert") {
  Lattice q(1, 64, 20.0);
  PhaseSpaceLattice lat(q, 32, 4.0);
  PhaseSpaceField f = sample(lat, [](std::span<const double> qv,
                                     std::span<const double> pv) -> cplx {
    return std::exp(-qv[0] * qv[0] - 2.0 * pv[0] * pv[0]) * cplx(0.7, 0.2);
  });
  PhaseSpaceField rt = ps_from_fourier(ps_to_fourier(f));
  CHECK(sup_diff(rt, f) < 1e-12 * sup_abs(f));
}
