#pragma once

// Binary containers with JSON sidecars for ensembles and phase-space fields
// (bit-exact round trip), deterministic CSV emission, and config hashing.

#include "sclab/lattice.hpp"
#include "sclab/qstate.hpp"

#include <filesystem>
#include <string>

namespace sclab {

// writes <base>.bin and <base>.json
void save_ensemble(const std::filesystem::path& base, const OrbitalEnsemble& gamma);
OrbitalEnsemble load_ensemble(const std::filesystem::path& base);

void save_psfield(const std::filesystem::path& base, const PhaseSpaceField& f);
PhaseSpaceField load_psfield(const std::filesystem::path& base);

// (q, p, Re value) rows; d = 1 emits the full grid, d > 1 the central slice
// along the first q/p axes
void export_psfield_csv(const std::filesystem::path& path, const PhaseSpaceField& f);

struct CsvWriter {
  explicit CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(std::span<const double> values);
  void comment(const std::string& text); // '#' header line

private:
  std::FILE* f_ = nullptr;
  std::size_t ncols_ = 0;
};

std::string format_g17(double x);

// FNV-1a hash of a canonical config string, as 16 hex digits
std::string metadata_hash(const std::string& canonical);

} // namespace sclab
