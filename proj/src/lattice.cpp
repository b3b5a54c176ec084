#include "sclab/lattice.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace sclab {

static bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

Lattice::Lattice(int d_, int n_, double length_) : d(d_), n(n_), length(length_) {
  if (d < 1 || d > 3) throw std::invalid_argument("Lattice: d must be 1, 2 or 3");
  if (!is_pow2(n) || n < 2) throw std::invalid_argument("Lattice: n must be a power of two >= 2");
  if (!(length > 0)) throw std::invalid_argument("Lattice: box length must be positive");
}

std::int64_t Lattice::size() const {
  std::int64_t s = 1;
  for (int i = 0; i < d; ++i) s *= n;
  return s;
}

double Lattice::cell_volume() const {
  double w = 1;
  for (int i = 0; i < d; ++i) w *= spacing();
  return w;
}

PhaseSpaceLattice::PhaseSpaceLattice(const Lattice& q_, int np_, double pmax_)
    : q(q_), np(np_), pmax(pmax_) {
  if (!is_pow2(np) || np < 2) throw std::invalid_argument("PhaseSpaceLattice: np must be a power of two >= 2");
  if (!(pmax > 0)) throw std::invalid_argument("PhaseSpaceLattice: pmax must be positive");
}

std::int64_t PhaseSpaceLattice::p_size() const {
  std::int64_t s = 1;
  for (int i = 0; i < d(); ++i) s *= np;
  return s;
}

double PhaseSpaceLattice::cell_volume() const {
  double w = 1;
  for (int i = 0; i < d(); ++i) w *= q.spacing() * p_spacing();
  return w;
}

// ---------------------------------------------------------------------------
// FFT core: FFTW plans cached per length, executed through an aligned scratch
// buffer so line data can live anywhere.

namespace detail {

namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  fftw_complex* buf = nullptr;
  int n = 0;

  ~PlanPair() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf) fftw_free(buf);
  }
};

std::map<int, std::unique_ptr<PlanPair>>& plan_cache() {
  static std::map<int, std::unique_ptr<PlanPair>> cache;
  return cache;
}
std::mutex plan_mutex;

PlanPair& plans_for(int n) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it == cache.end()) {
    auto pp = std::make_unique<PlanPair>();
    pp->n = n;
    pp->buf = fftw_alloc_complex(n);
    pp->fwd = fftw_plan_dft_1d(n, pp->buf, pp->buf, FFTW_FORWARD, FFTW_ESTIMATE);
    pp->bwd = fftw_plan_dft_1d(n, pp->buf, pp->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    it = cache.emplace(n, std::move(pp)).first;
  }
  return *it->second;
}

} // namespace

void dft_pow2(cplx* data, int n, int sign) {
  PlanPair& pp = plans_for(n);
  std::memcpy(pp.buf, data, sizeof(cplx) * n);
  fftw_execute(sign < 0 ? pp.fwd : pp.bwd);
  std::memcpy(data, pp.buf, sizeof(cplx) * n);
}

void fft_axis_inplace(std::vector<cplx>& v, std::span<const std::int64_t> dims,
                      int axis, int sign) {
  const int rank = static_cast<int>(dims.size());
  const int n = static_cast<int>(dims[axis]);
  std::int64_t stride = 1;
  for (int a = axis + 1; a < rank; ++a) stride *= dims[a];
  std::int64_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= dims[a];
  const std::int64_t block = stride * n;

  std::vector<cplx> line(n);
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t s = 0; s < stride; ++s) {
      cplx* base = v.data() + o * block + s;
      if (stride == 1) {
        dft_pow2(base, n, sign);
      } else {
        for (int j = 0; j < n; ++j) line[j] = base[j * stride];
        dft_pow2(line.data(), n, sign);
        for (int j = 0; j < n; ++j) base[j * stride] = line[j];
      }
    }
  }
}

// Apply the half-box offset phase (-1)^{k1+..+kd} and a scale, in place.
void checker_scale(std::vector<cplx>& v, std::span<const std::int64_t> dims, double scale) {
  const int rank = static_cast<int>(dims.size());
  std::vector<std::int64_t> idx(rank, 0);
  for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(v.size()); ++flat) {
    std::int64_t parity = 0;
    for (int a = 0; a < rank; ++a) parity += idx[a];
    v[flat] *= (parity & 1) ? -scale : scale;
    for (int a = rank - 1; a >= 0; --a) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
}

} // namespace detail

// ---------------------------------------------------------------------------

static void check_finite(const std::vector<cplx>& v, const char* what) {
  for (const cplx& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw std::runtime_error(std::string(what) + ": non-finite value produced");
}

Field sample(const Lattice& lat, const std::function<cplx(std::span<const double>)>& fn) {
  Field f(lat);
  std::vector<int> idx(lat.d, 0);
  std::vector<double> x(lat.d);
  for (std::int64_t flat = 0; flat < f.size(); ++flat) {
    for (int a = 0; a < lat.d; ++a) x[a] = lat.coord(idx[a]);
    f.v[flat] = fn(x);
    for (int a = lat.d - 1; a >= 0; --a) {
      if (++idx[a] < lat.n) break;
      idx[a] = 0;
    }
  }
  return f;
}

Field to_fourier(const Field& f) {
  Field out = f;
  std::vector<std::int64_t> dims(f.lat.d, f.lat.n);
  for (int a = 0; a < f.lat.d; ++a) detail::fft_axis_inplace(out.v, dims, a, -1);
  detail::checker_scale(out.v, dims, f.lat.cell_volume());
  return out;
}

Field from_fourier(const Field& fhat) {
  Field out = fhat;
  std::vector<std::int64_t> dims(fhat.lat.d, fhat.lat.n);
  double invL = 1.0;
  for (int a = 0; a < fhat.lat.d; ++a) invL /= fhat.lat.length;
  detail::checker_scale(out.v, dims, invL);
  for (int a = 0; a < fhat.lat.d; ++a) detail::fft_axis_inplace(out.v, dims, a, +1);
  return out;
}

Field fourier_multiplier(const Field& f,
                         const std::function<cplx(std::span<const double>)>& symbol) {
  Field fhat = to_fourier(f);
  const Lattice& lat = f.lat;
  std::vector<int> idx(lat.d, 0);
  std::vector<double> xi(lat.d);
  for (std::int64_t flat = 0; flat < fhat.size(); ++flat) {
    for (int a = 0; a < lat.d; ++a) xi[a] = lat.freq(idx[a]);
    cplx s = symbol(xi);
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw std::runtime_error("fourier_multiplier: symbol is not finite at a lattice frequency");
    fhat.v[flat] *= s;
    for (int a = lat.d - 1; a >= 0; --a) {
      if (++idx[a] < lat.n) break;
      idx[a] = 0;
    }
  }
  return from_fourier(fhat);
}

template <class V>
static double lp_norm_impl(const V& vals, double r, double cell) {
  if (!(r >= 1.0))
    throw std::domain_error("lp_norm: r must satisfy r >= 1");
  double acc = 0.0;
  if (std::isinf(r)) {
    for (const cplx& z : vals) acc = std::max(acc, std::abs(z));
    return acc;
  }
  if (r == 1.0) {
    for (const cplx& z : vals) acc += std::abs(z);
    return acc * cell;
  }
  if (r == 2.0) {
    for (const cplx& z : vals) acc += std::norm(z);
    return std::sqrt(acc * cell);
  }
  for (const cplx& z : vals) acc += std::pow(std::abs(z), r);
  return std::pow(acc * cell, 1.0 / r);
}

double lp_norm(const Field& f, double r) {
  double nrm = lp_norm_impl(f.v, r, f.lat.cell_volume());
  if (!std::isfinite(nrm)) throw std::runtime_error("lp_norm: non-finite norm");
  return nrm;
}

cplx l2_inner(const Field& a, const Field& b) {
  if (!(a.lat == b.lat)) throw std::invalid_argument("l2_inner: lattice mismatch");
  cplx acc = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) acc += std::conj(a.v[i]) * b.v[i];
  return acc * a.lat.cell_volume();
}

double l2_inner_real(const Field& a, const Field& b) { return l2_inner(a, b).real(); }

// ---------------------------------------------------------------------------

PhaseSpaceField sample(const PhaseSpaceLattice& lat,
                       const std::function<cplx(std::span<const double>, std::span<const double>)>& fn) {
  PhaseSpaceField f(lat);
  const int d = lat.d();
  std::vector<int> iq(d, 0), ip(d, 0);
  std::vector<double> qv(d), pv(d);
  std::int64_t flat = 0;
  const std::int64_t nq = lat.q_size(), npts = lat.p_size();
  for (std::int64_t a = 0; a < nq; ++a) {
    for (int ax = 0; ax < d; ++ax) qv[ax] = lat.q.coord(iq[ax]);
    for (int ax = 0; ax < d; ++ax) ip[ax] = 0;
    for (std::int64_t b = 0; b < npts; ++b) {
      for (int ax = 0; ax < d; ++ax) pv[ax] = lat.p_coord(ip[ax]);
      f.v[flat++] = fn(qv, pv);
      for (int ax = d - 1; ax >= 0; --ax) {
        if (++ip[ax] < lat.np) break;
        ip[ax] = 0;
      }
    }
    for (int ax = d - 1; ax >= 0; --ax) {
      if (++iq[ax] < lat.q.n) break;
      iq[ax] = 0;
    }
  }
  return f;
}

double lp_norm(const PhaseSpaceField& f, double r) {
  double nrm = lp_norm_impl(f.v, r, f.lat.cell_volume());
  if (!std::isfinite(nrm)) throw std::runtime_error("lp_norm: non-finite norm");
  return nrm;
}

cplx l2_inner(const PhaseSpaceField& a, const PhaseSpaceField& b) {
  if (!(a.lat == b.lat)) throw std::invalid_argument("l2_inner: phase-space lattice mismatch");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) acc += std::conj(a.v[i]) * b.v[i];
  return acc * a.lat.cell_volume();
}

double weighted_norm(const PhaseSpaceField& f, double r, double sigma) {
  const PhaseSpaceLattice& lat = f.lat;
  const int d = lat.d();
  PhaseSpaceField wq(lat), wp(lat);
  std::vector<int> iq(d, 0), ip(d, 0);
  std::int64_t flat = 0;
  const std::int64_t nq = lat.q_size(), npts = lat.p_size();
  for (std::int64_t a = 0; a < nq; ++a) {
    double q2 = 0;
    for (int ax = 0; ax < d; ++ax) {
      double c = lat.q.coord(iq[ax]);
      q2 += c * c;
    }
    const double wq_val = std::pow(1.0 + q2, 0.5 * sigma);
    for (int ax = 0; ax < d; ++ax) ip[ax] = 0;
    for (std::int64_t b = 0; b < npts; ++b) {
      double p2 = 0;
      for (int ax = 0; ax < d; ++ax) {
        double c = lat.p_coord(ip[ax]);
        p2 += c * c;
      }
      wq.v[flat] = f.v[flat] * wq_val;
      wp.v[flat] = f.v[flat] * std::pow(1.0 + p2, 0.5 * sigma);
      ++flat;
      for (int ax = d - 1; ax >= 0; --ax) {
        if (++ip[ax] < lat.np) break;
        ip[ax] = 0;
      }
    }
    for (int ax = d - 1; ax >= 0; --ax) {
      if (++iq[ax] < lat.q.n) break;
      iq[ax] = 0;
    }
  }
  return lp_norm(wq, r) + lp_norm(wp, r);
}

PhaseSpaceField ps_to_fourier(const PhaseSpaceField& f) {
  PhaseSpaceField out = f;
  const int d = f.lat.d();
  std::vector<std::int64_t> dims;
  for (int a = 0; a < d; ++a) dims.push_back(f.lat.q.n);
  for (int a = 0; a < d; ++a) dims.push_back(f.lat.np);
  for (int a = 0; a < 2 * d; ++a) detail::fft_axis_inplace(out.v, dims, a, -1);
  detail::checker_scale(out.v, dims, f.lat.cell_volume());
  check_finite(out.v, "ps_to_fourier");
  return out;
}

PhaseSpaceField ps_from_fourier(const PhaseSpaceField& fhat) {
  PhaseSpaceField out = fhat;
  const int d = fhat.lat.d();
  std::vector<std::int64_t> dims;
  for (int a = 0; a < d; ++a) dims.push_back(fhat.lat.q.n);
  for (int a = 0; a < d; ++a) dims.push_back(fhat.lat.np);
  double inv = 1.0;
  for (int a = 0; a < d; ++a) inv /= fhat.lat.q.length * (2.0 * fhat.lat.pmax);
  detail::checker_scale(out.v, dims, inv);
  for (int a = 0; a < 2 * d; ++a) detail::fft_axis_inplace(out.v, dims, a, +1);
  return out;
}

PhaseSpaceField ps_fourier_multiplier(
    const PhaseSpaceField& f,
    const std::function<cplx(std::span<const double>, std::span<const double>)>& symbol) {
  PhaseSpaceField fhat = ps_to_fourier(f);
  const PhaseSpaceLattice& lat = f.lat;
  const int d = lat.d();
  std::vector<int> iq(d, 0), ip(d, 0);
  std::vector<double> xiq(d), etap(d);
  std::int64_t flat = 0;
  const std::int64_t nq = lat.q_size(), npts = lat.p_size();
  for (std::int64_t a = 0; a < nq; ++a) {
    for (int ax = 0; ax < d; ++ax) xiq[ax] = lat.q.freq(iq[ax]);
    for (int ax = 0; ax < d; ++ax) ip[ax] = 0;
    for (std::int64_t b = 0; b < npts; ++b) {
      for (int ax = 0; ax < d; ++ax) etap[ax] = lat.p_freq(ip[ax]);
      cplx s = symbol(xiq, etap);
      if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
        throw std::runtime_error("ps_fourier_multiplier: symbol not finite");
      fhat.v[flat++] *= s;
      for (int ax = d - 1; ax >= 0; --ax) {
        if (++ip[ax] < lat.np) break;
        ip[ax] = 0;
      }
    }
    for (int ax = d - 1; ax >= 0; --ax) {
      if (++iq[ax] < lat.q.n) break;
      iq[ax] = 0;
    }
  }
  return ps_from_fourier(fhat);
}

} // namespace sclab
