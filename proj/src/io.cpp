#include "sclab/io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace sclab {

using nlohmann::json;

namespace {

constexpr char kMagicEnsemble[8] = {'S', 'C', 'L', 'B', 'E', 'N', 'S', '1'};
constexpr char kMagicField[8] = {'S', 'C', 'L', 'B', 'P', 'S', 'F', '1'};

void write_raw(std::ofstream& os, const void* p, std::size_t bytes) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& is, void* p, std::size_t bytes) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
  if (!is) throw std::runtime_error("io: truncated binary container");
}

} // namespace

void save_ensemble(const std::filesystem::path& base, const OrbitalEnsemble& gamma) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::ofstream os(bin, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("io: cannot open " + bin.string());
  write_raw(os, kMagicEnsemble, 8);
  std::int64_t dims[3] = {gamma.lat.d, gamma.lat.n, gamma.rank()};
  write_raw(os, dims, sizeof(dims));
  double scal[5] = {gamma.lat.length, gamma.params.hbar, gamma.params.a,
                    static_cast<double>(gamma.params.sign), gamma.params.epsilon};
  write_raw(os, scal, sizeof(scal));
  write_raw(os, gamma.occupations.data(), sizeof(double) * gamma.occupations.size());
  for (const Field& psi : gamma.orbitals)
    write_raw(os, psi.v.data(), sizeof(cplx) * psi.v.size());
  if (!os) throw std::runtime_error("io: write failure on " + bin.string());

  json side;
  side["kind"] = "orbital_ensemble";
  side["lattice"] = {{"d", gamma.lat.d}, {"n", gamma.lat.n}, {"length", gamma.lat.length}};
  side["params"] = {{"hbar", gamma.params.hbar}, {"a", gamma.params.a},
                    {"sign", gamma.params.sign}, {"epsilon", gamma.params.epsilon}};
  side["rank"] = gamma.rank();
  std::filesystem::path js = base;
  js += ".json";
  std::ofstream jos(js, std::ios::trunc);
  jos << side.dump(2) << "\n";
}

OrbitalEnsemble load_ensemble(const std::filesystem::path& base) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw std::runtime_error("io: cannot open " + bin.string());
  char magic[8];
  read_raw(is, magic, 8);
  if (std::memcmp(magic, kMagicEnsemble, 8) != 0)
    throw std::runtime_error("io: not an ensemble container: " + bin.string());
  std::int64_t dims[3];
  read_raw(is, dims, sizeof(dims));
  double scal[5];
  read_raw(is, scal, sizeof(scal));
  Lattice lat(static_cast<int>(dims[0]), static_cast<int>(dims[1]), scal[0]);
  Params par(scal[1], lat.d, scal[2], static_cast<int>(scal[3]), scal[4]);
  OrbitalEnsemble gamma(lat, par);
  std::vector<double> occ(dims[2]);
  read_raw(is, occ.data(), sizeof(double) * occ.size());
  for (std::int64_t j = 0; j < dims[2]; ++j) {
    Field psi(lat);
    read_raw(is, psi.v.data(), sizeof(cplx) * psi.v.size());
    gamma.add(std::move(psi), occ[j]);
  }
  return gamma;
}

void save_psfield(const std::filesystem::path& base, const PhaseSpaceField& f) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::ofstream os(bin, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("io: cannot open " + bin.string());
  write_raw(os, kMagicField, 8);
  std::int64_t dims[3] = {f.lat.d(), f.lat.q.n, f.lat.np};
  write_raw(os, dims, sizeof(dims));
  double scal[2] = {f.lat.q.length, f.lat.pmax};
  write_raw(os, scal, sizeof(scal));
  write_raw(os, f.v.data(), sizeof(cplx) * f.v.size());
  if (!os) throw std::runtime_error("io: write failure on " + bin.string());

  json side;
  side["kind"] = "phase_space_field";
  side["lattice"] = {{"d", f.lat.d()}, {"n", f.lat.q.n}, {"length", f.lat.q.length},
                     {"np", f.lat.np}, {"pmax", f.lat.pmax}};
  std::filesystem::path js = base;
  js += ".json";
  std::ofstream jos(js, std::ios::trunc);
  jos << side.dump(2) << "\n";
}

PhaseSpaceField load_psfield(const std::filesystem::path& base) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw std::runtime_error("io: cannot open " + bin.string());
  char magic[8];
  read_raw(is, magic, 8);
  if (std::memcmp(magic, kMagicField, 8) != 0)
    throw std::runtime_error("io: not a phase-space container: " + bin.string());
  std::int64_t dims[3];
  read_raw(is, dims, sizeof(dims));
  double scal[2];
  read_raw(is, scal, sizeof(scal));
  Lattice q(static_cast<int>(dims[0]), static_cast<int>(dims[1]), scal[0]);
  PhaseSpaceField f(PhaseSpaceLattice(q, static_cast<int>(dims[2]), scal[1]));
  read_raw(is, f.v.data(), sizeof(cplx) * f.v.size());
  return f;
}

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void export_psfield_csv(const std::filesystem::path& path, const PhaseSpaceField& f) {
  CsvWriter csv(path, {"q", "p", "value"});
  const PhaseSpaceLattice& lat = f.lat;
  if (lat.d() == 1) {
    for (int iq = 0; iq < lat.q.n; ++iq)
      for (int ip = 0; ip < lat.np; ++ip) {
        double row[3] = {lat.q.coord(iq), lat.p_coord(ip), f.at(iq, ip).real()};
        csv.row(row);
      }
    return;
  }
  // central slice along the first q and p axes
  const std::int64_t nqd = lat.q_size(), npd = lat.p_size();
  const std::int64_t q_inner = nqd / lat.q.n, p_inner = npd / lat.np;
  for (int iq = 0; iq < lat.q.n; ++iq)
    for (int ip = 0; ip < lat.np; ++ip) {
      std::int64_t qflat = iq * q_inner + (q_inner / 2);
      std::int64_t pflat = ip * p_inner + (p_inner / 2);
      double row[3] = {lat.q.coord(iq), lat.p_coord(ip), f.v[qflat * npd + pflat].real()};
      csv.row(row);
    }
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& columns)
    : ncols_(columns.size()) {
  f_ = std::fopen(path.string().c_str(), "w");
  if (!f_) throw std::runtime_error("io: cannot open " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i)
    std::fprintf(f_, "%s%s", columns[i].c_str(), (i + 1 < columns.size()) ? "," : "\n");
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != ncols_) throw std::invalid_argument("CsvWriter: column count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    std::fprintf(f_, "%.17g%s", values[i], (i + 1 < values.size()) ? "," : "\n");
}

void CsvWriter::comment(const std::string& text) {
  std::fprintf(f_, "# %s\n", text.c_str());
}

std::string metadata_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

} // namespace sclab
