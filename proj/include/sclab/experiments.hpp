#pragma once

// Composite experiments: hbar sweeps with Toeplitz-quantized initial data,
// the Hartree-vs-Vlasov weak-metric comparison in the moving frame, and the
// scattering-state correspondence pairings.

#include "sclab/fit.hpp"
#include "sclab/hartree.hpp"
#include "sclab/phasespace.hpp"
#include "sclab/vlasov.hpp"

#include <filesystem>
#include <optional>

namespace sclab {

// separable Gaussian bump, evaluable on any lattice
struct GaussianDescriptor {
  double amplitude = 1.0;
  std::vector<double> q_center, p_center; // size d
  std::vector<double> q_width, p_width;   // size d

  static GaussianDescriptor isotropic(int d, double amplitude, double q_width,
                                      double p_width);
  double eval(std::span<const double> q, std::span<const double> p) const;
  PhaseSpaceField sample_on(const PhaseSpaceLattice& lat) const;
};

struct SweepConfig {
  std::vector<double> hbars = {1.0, 0.5, 0.25, 0.125}; // strictly decreasing in (0,1]
  GaussianDescriptor f0;
  int rank_budget = 192;
  double horizon = 8.0;   // T
  int test_set_size = 64; // N
  double test_scale = 0.7;
  int pairing_count = 8;  // scattering-state pairing table size

  Lattice hartree_lattice{1, 512, 48.0};
  PhaseSpaceLattice vlasov_lattice{Lattice(1, 256, 48.0), 64, 2.5};
  PhaseSpaceLattice quadrature_lattice{Lattice(1, 128, 48.0), 16, 2.5};

  double a = 1.2; // interaction tail label
  int sign = 1;
  double epsilon = 0.01;
  InteractionSpec interaction{};

  double dt = 0.01;
  int snapshot_stride = 50;
  double eta0_target = 0.05;
  std::uint64_t seed = 12345;
  std::filesystem::path out_dir; // empty: no files written

  void validate() const;
  std::string canonical() const; // for metadata hashing
};

struct MatchedData {
  OrbitalEnsemble gamma0;
  PhaseSpaceField f0;  // the reference field (on the lattice f0 was sampled on)
  double xin = 0.0;
  double l1_gamma = 0.0; // ||gamma0||_{L^1_hbar}
  double l1_f = 0.0;     // ||f0||_{L^1}
  bool smallness_ok = false;
};

// gamma0 = Toep[f0] from the quadrature lattice nodes; logs the X_in norm and
// checks it against the smallness target
MatchedData prepare_matched_data(const GaussianDescriptor& f0,
                                 const PhaseSpaceLattice& quad_lattice,
                                 const Lattice& target, const Params& params,
                                 int rank_budget, double eta0_target);

struct SweepMember {
  double hbar = 0.0;
  double xin0 = 0.0;
  bool smallness_ok = false;
  double fidelity_t0 = 0.0; // d^w(Wig[gamma0], f0) via cross pairings
  std::vector<double> times;
  std::vector<double> dw; // d^w(g^hbar(t), g(t))
  double sup_dw = 0.0;
  std::vector<double> pairing_gap; // |<psi_n | Wig[gamma+] - f+>|, n < pairing_count
  double znorm_phi = 0.0;
  double trace_drift = 0.0;
  double weighted_growth = 0.0; // max weighted_mom / initial
  std::string meta_hash;
};

struct CorrespondenceReport {
  std::string meta_hash;
  std::vector<SweepMember> members; // in the hbar order of the config
  PowerLawFit vlasov_density_decay;
  bool dw_monotone = false;       // sup_dw strictly decreasing along the sweep
  bool pairings_monotone = false; // every tabled pairing gap decreasing
};

CorrespondenceReport semiclassical_sweep(const SweepConfig& cfg);

void write_report_json(const std::filesystem::path& path, const SweepConfig& cfg,
                       const CorrespondenceReport& rep);

} // namespace sclab
