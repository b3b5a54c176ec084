#include "sclab/qstate.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace sclab {

Params::Params(double hbar_, int d_, double a_, int sign_, double eps_)
    : hbar(hbar_), d(d_), a(a_), sign(sign_), epsilon(eps_) {
  if (!(hbar > 0.0) || hbar > 1.0)
    throw std::invalid_argument("Params: hbar must lie in (0, 1]");
  if (d < 1 || d > 3) throw std::invalid_argument("Params: d must be 1, 2 or 3");
  if (!(a > 0.0)) throw std::invalid_argument("Params: interaction exponent a must be positive");
  if (sign != 1 && sign != -1) throw std::invalid_argument("Params: sign must be +1 or -1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("Params: epsilon must be positive");
  if (!(2.0 - a - epsilon > 0.0))
    throw std::invalid_argument("Params: need a + epsilon < 2 for finite r_eps");
}

double Params::r_eps() const {
  double r = d / (2.0 - a - epsilon);
  return std::max(r, 1.0);
}

double Params::sigma_eps() const { return 0.5 * (1.0 + a + 2.0 * epsilon); }

std::optional<std::string> Params::range_warning() const {
  if (!(a < d))
    return "a = " + std::to_string(a) + " outside (0, d); Riesz mode unavailable, smooth override only";
  if (a <= 1.0 || a >= 5.0 / 3.0)
    return "a = " + std::to_string(a) + " outside the short-range window (1, 5/3)";
  return std::nullopt;
}

void OrbitalEnsemble::add(Field orbital, double occupation, int rank_cap) {
  if (!(orbital.lat == lat)) throw std::invalid_argument("OrbitalEnsemble: orbital lattice mismatch");
  if (occupation < 0.0) throw std::invalid_argument("OrbitalEnsemble: occupations must be nonnegative");
  if (rank() >= rank_cap) throw std::runtime_error("OrbitalEnsemble: rank cap exceeded");
  orbitals.push_back(std::move(orbital));
  occupations.push_back(occupation);
}

double OrbitalEnsemble::trace() const {
  double tr = 0.0;
  for (int j = 0; j < rank(); ++j) {
    double nrm2 = 0.0;
    for (const cplx& z : orbitals[j].v) nrm2 += std::norm(z);
    tr += occupations[j] * nrm2 * lat.cell_volume();
  }
  return tr;
}

double Density::integral() const {
  double s = 0.0;
  for (double x : v) s += x;
  return s * lat.cell_volume();
}

double Density::lp(double r) const {
  if (!(r >= 1.0)) throw std::domain_error("Density::lp: r must satisfy r >= 1");
  if (std::isinf(r)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double acc = 0.0;
  for (double x : v) acc += std::pow(std::abs(x), r);
  return std::pow(acc * lat.cell_volume(), 1.0 / r);
}

Field Density::as_field() const {
  Field f(lat);
  for (std::int64_t i = 0; i < f.size(); ++i) f.v[i] = v[i];
  return f;
}

Density density(const OrbitalEnsemble& gamma) {
  Density rho(gamma.lat);
  const double pref = std::pow(2.0 * PI * gamma.params.hbar, gamma.lat.d);
  for (int j = 0; j < gamma.rank(); ++j) {
    const double lam = gamma.occupations[j];
    if (lam == 0.0) continue;
    for (std::int64_t i = 0; i < gamma.lat.size(); ++i)
      rho.v[i] += pref * lam * std::norm(gamma.orbitals[j].v[i]);
  }
  return rho;
}

static Eigen::MatrixXcd gram_matrix(const OrbitalEnsemble& gamma) {
  const int r = gamma.rank();
  Eigen::MatrixXcd G(r, r);
  const double cell = gamma.lat.cell_volume();
  for (int j = 0; j < r; ++j) {
    for (int k = j; k < r; ++k) {
      cplx ip = 0.0;
      const auto& a = gamma.orbitals[j].v;
      const auto& b = gamma.orbitals[k].v;
      for (std::size_t i = 0; i < a.size(); ++i) ip += std::conj(a[i]) * b[i];
      ip *= cell * std::sqrt(gamma.occupations[j] * gamma.occupations[k]);
      G(j, k) = ip;
      G(k, j) = std::conj(ip);
    }
  }
  return G;
}

std::vector<double> gram_eigenvalues(const OrbitalEnsemble& gamma) {
  if (gamma.rank() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram_matrix(gamma),
                                                     Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gram_eigenvalues: eigen-solve failed");
  std::vector<double> mu(es.eigenvalues().data(),
                         es.eigenvalues().data() + gamma.rank());
  double top = mu.empty() ? 0.0 : std::abs(mu.back());
  for (double& m : mu) {
    if (m < -1e-12 * std::max(top, 1.0) && m < -1e-10)
      throw std::runtime_error("gram_eigenvalues: significantly negative eigenvalue");
    if (m < 0.0) m = 0.0;
  }
  return mu;
}

double schatten_norm(const OrbitalEnsemble& gamma, double r) {
  if (!(r >= 1.0)) throw std::domain_error("schatten_norm: r must satisfy r >= 1");
  if (gamma.rank() == 0) return 0.0;
  std::vector<double> mu = gram_eigenvalues(gamma);
  const double hbar = gamma.params.hbar;
  if (std::isinf(r)) return mu.back();
  double acc = 0.0;
  for (double m : mu) acc += (r == 1.0) ? m : std::pow(m, r);
  return std::pow(2.0 * PI * hbar, gamma.lat.d / r) * std::pow(acc, 1.0 / r);
}

Field apply_vector_field(const Field& psi, double t, double sigma, double hbar,
                         BracketKind kind) {
  if (!(hbar > 0.0)) throw std::invalid_argument("apply_vector_field: hbar must be positive");
  if (sigma == 0.0) return psi;
  const Lattice& lat = psi.lat;

  if (t == 0.0) { // J_0 = x
    Field out = psi;
    std::vector<int> idx(lat.d, 0);
    for (std::int64_t flat = 0; flat < out.size(); ++flat) {
      double x2 = 0.0;
      for (int a = 0; a < lat.d; ++a) {
        double c = lat.coord(idx[a]);
        x2 += c * c;
      }
      double w = (kind == BracketKind::Japanese) ? std::pow(1.0 + x2, 0.5 * sigma)
                                                 : std::pow(x2, 0.5 * sigma);
      out.v[flat] *= w;
      for (int a = lat.d - 1; a >= 0; --a) {
        if (++idx[a] < lat.n) break;
        idx[a] = 0;
      }
    }
    return out;
  }

  // e^{i|x|^2/(2 t hbar)} <t hbar xi>^sigma e^{-i|x|^2/(2 t hbar)}
  const double chirp = 1.0 / (2.0 * t * hbar);
  Field work = psi;
  std::vector<int> idx(lat.d, 0);
  for (std::int64_t flat = 0; flat < work.size(); ++flat) {
    double x2 = 0.0;
    for (int a = 0; a < lat.d; ++a) {
      double c = lat.coord(idx[a]);
      x2 += c * c;
    }
    work.v[flat] *= std::polar(1.0, -chirp * x2);
    for (int a = lat.d - 1; a >= 0; --a) {
      if (++idx[a] < lat.n) break;
      idx[a] = 0;
    }
  }
  work = fourier_multiplier(work, [&](std::span<const double> xi) -> cplx {
    double s2 = 0.0;
    for (double x : xi) s2 += (t * hbar * x) * (t * hbar * x);
    return (kind == BracketKind::Japanese) ? std::pow(1.0 + s2, 0.5 * sigma)
                                           : std::pow(s2, 0.5 * sigma);
  });
  std::fill(idx.begin(), idx.end(), 0);
  for (std::int64_t flat = 0; flat < work.size(); ++flat) {
    double x2 = 0.0;
    for (int a = 0; a < lat.d; ++a) {
      double c = lat.coord(idx[a]);
      x2 += c * c;
    }
    work.v[flat] *= std::polar(1.0, chirp * x2);
    for (int a = lat.d - 1; a >= 0; --a) {
      if (++idx[a] < lat.n) break;
      idx[a] = 0;
    }
  }
  return work;
}

OrbitalEnsemble map_orbitals(const OrbitalEnsemble& gamma,
                             const std::function<Field(const Field&)>& op) {
  OrbitalEnsemble out(gamma.lat, gamma.params);
  for (int j = 0; j < gamma.rank(); ++j)
    out.add(op(gamma.orbitals[j]), gamma.occupations[j]);
  return out;
}

double weighted_schatten_norm(const OrbitalEnsemble& gamma, double r, double sigma,
                              WeightKind kind, double t) {
  if (sigma < 0.0) throw std::domain_error("weighted_schatten_norm: sigma must be >= 0");
  if (sigma == 0.0) return schatten_norm(gamma, r);
  const double hbar = gamma.params.hbar;
  OrbitalEnsemble w = map_orbitals(gamma, [&](const Field& psi) -> Field {
    switch (kind) {
      case WeightKind::Position:
        return apply_vector_field(psi, 0.0, sigma, hbar);
      case WeightKind::Momentum:
        return fourier_multiplier(psi, [&](std::span<const double> xi) -> cplx {
          double s2 = 0.0;
          for (double x : xi) s2 += (hbar * x) * (hbar * x);
          return std::pow(1.0 + s2, 0.5 * sigma);
        });
      case WeightKind::VectorField:
        return apply_vector_field(psi, t, sigma, hbar);
    }
    throw std::logic_error("weighted_schatten_norm: unknown weight");
  });
  return schatten_norm(w, r);
}

double xin_norm(const OrbitalEnsemble& gamma) {
  const Params& p = gamma.params;
  return schatten_norm(gamma, 1.0) +
         weighted_schatten_norm(gamma, p.r_eps(), p.sigma_eps(), WeightKind::Momentum);
}

double trace_norm_difference(const OrbitalEnsemble& g1, const OrbitalEnsemble& g2) {
  if (!(g1.lat == g2.lat)) throw std::invalid_argument("trace_norm_difference: lattice mismatch");
  const int r1 = g1.rank(), r2 = g2.rank();
  const int r = r1 + r2;
  if (r == 0) return 0.0;

  // stacked orbitals chi_i with signs c_i = +sqrt(l), -sqrt(l): eigenvalues of
  // gamma1 - gamma2 are those of G^{1/2} diag(s) G^{1/2}, G_ij = c_i c_j <chi_i|chi_j>
  std::vector<const Field*> chi(r);
  std::vector<double> c(r), s(r);
  for (int j = 0; j < r1; ++j) { chi[j] = &g1.orbitals[j]; c[j] = std::sqrt(g1.occupations[j]); s[j] = 1.0; }
  for (int j = 0; j < r2; ++j) { chi[r1 + j] = &g2.orbitals[j]; c[r1 + j] = std::sqrt(g2.occupations[j]); s[r1 + j] = -1.0; }

  const double cell = g1.lat.cell_volume();
  Eigen::MatrixXcd G(r, r);
  for (int j = 0; j < r; ++j) {
    for (int k = j; k < r; ++k) {
      cplx ip = 0.0;
      const auto& a = chi[j]->v;
      const auto& b = chi[k]->v;
      for (std::size_t i = 0; i < a.size(); ++i) ip += std::conj(a[i]) * b[i];
      ip *= cell * c[j] * c[k];
      G(j, k) = ip;
      G(k, j) = std::conj(ip);
    }
  }
  // project onto the orthonormal range basis from the Gram eigen-decomposition:
  // the difference operator restricted there is the Hermitian
  //   H = L^{-1/2} U* (G S G) U L^{-1/2},  S = diag(s),
  // whose eigenvalues are those of gamma1 - gamma2 (well-conditioned even when
  // the stacked orbitals are dependent, unlike a Gram square root)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("trace_norm_difference: eigen-solve failed");
  const double lmax = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  if (lmax == 0.0) return 0.0;
  std::vector<int> keep;
  for (int j = 0; j < r; ++j)
    if (es.eigenvalues()[j] > 1e-12 * lmax) keep.push_back(j);
  if (keep.empty()) return 0.0;
  const int k = static_cast<int>(keep.size());
  Eigen::MatrixXcd Uk(r, k);
  Eigen::VectorXd invsqrt(k);
  for (int j = 0; j < k; ++j) {
    Uk.col(j) = es.eigenvectors().col(keep[j]);
    invsqrt(j) = 1.0 / std::sqrt(es.eigenvalues()[keep[j]]);
  }
  Eigen::MatrixXcd GSG = G * Eigen::VectorXd::Map(s.data(), r).asDiagonal() * G;
  Eigen::MatrixXcd H = invsqrt.asDiagonal() * (Uk.adjoint() * GSG * Uk) *
                       invsqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es2(0.5 * (H + H.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  if (es2.info() != Eigen::Success)
    throw std::runtime_error("trace_norm_difference: eigen-solve failed");
  double acc = 0.0;
  for (int j = 0; j < k; ++j) acc += std::abs(es2.eigenvalues()[j]);
  return std::pow(2.0 * PI * g1.params.hbar, g1.lat.d) * acc;
}

} // namespace sclab
