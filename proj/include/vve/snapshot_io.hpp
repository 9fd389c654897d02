#pragma once
/// @file snapshot_io.hpp
/// @brief Artifact I/O: binary state snapshots, provenance manifests,
///        diagnostics CSV, sweep JSON/CSV, machine-readable error JSON,
///        content hashing, and the per-directory run lock.
///
/// Snapshot format (all fields little-endian):
///   offset  size  field
///   0       4     magic "VLSN"
///   4       4     u32 format version (currently 1)
///   8       4     u32 grid mode (0 column1d, 1 slab2d, 2 slab3d)
///   12      4     u32 nx
///   16      4     u32 ny
///   20      4     u32 nz
///   24      8     f64 Lx
///   32      8     f64 Ly
///   40      8     f64 Lz
///   48      8     f64 t
///   56      24 N  f64 eta, node-major (3 components per node, idx order)
///   56+24N  24 N  f64 v,   node-major
/// A snapshot round-trips bit-exactly.  Readers reject a bad magic, an
/// unsupported version, and any size mismatch with a descriptive IoError.
///
/// Every artifact embeds the configuration hash (SHA-256 of the canonical
/// config text): JSON artifacts as a "config_hash" field, CSV artifacts as a
/// leading "# config_hash = ..." comment line.  Artifacts carry no
/// timestamps, so byte-identical inputs give byte-identical outputs.

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "json.hpp"
#include "vve/diagnostics.hpp"
#include "vve/errors.hpp"
#include "vve/geometry.hpp"
#include "vve/grid.hpp"
#include "vve/sweep.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

namespace vve {

// ---------------------------------------------------------------------------
// Content hashing
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const void* data, std::size_t n) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, n) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::IoError, "sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

/// Content id of a file: SHA-256 of its bytes, streamed.
inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::IoError, "sha256 digest failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got)) != 1) {
      EVP_MD_CTX_free(ctx);
      throw Error(ErrorKind::IoError, "sha256 digest failed");
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::IoError, "sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary snapshots
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr char kSnapshotMagic[4] = {'V', 'L', 'S', 'N'};

namespace detail {

inline std::uint32_t grid_mode_code(GridMode m) {
  switch (m) {
    case GridMode::column1d: return 0;
    case GridMode::slab2d: return 1;
    case GridMode::slab3d: return 2;
  }
  throw Error(ErrorKind::IoError, "unreachable grid mode");
}

inline GridMode grid_mode_from_code(std::uint32_t c) {
  if (c == 0) return GridMode::column1d;
  if (c == 1) return GridMode::slab2d;
  if (c == 2) return GridMode::slab3d;
  throw Error(ErrorKind::IoError,
              "corrupt snapshot header (grid mode code " + std::to_string(c) + ")");
}

inline void gather_nodes(const VectorField& f, std::size_t n_nodes, std::vector<double>& buf) {
  buf.resize(3 * n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    buf[3 * n] = f.c[0][n];
    buf[3 * n + 1] = f.c[1][n];
    buf[3 * n + 2] = f.c[2][n];
  }
}

inline void scatter_nodes(const std::vector<double>& buf, std::size_t n_nodes, VectorField& f) {
  for (std::size_t n = 0; n < n_nodes; ++n) {
    f.c[0][n] = buf[3 * n];
    f.c[1][n] = buf[3 * n + 1];
    f.c[2][n] = buf[3 * n + 2];
  }
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const Grid& g, const FlowMapState& st) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");

  const std::uint32_t header_u32[5] = {kSnapshotVersion, detail::grid_mode_code(g.mode),
                                       static_cast<std::uint32_t>(g.nx),
                                       static_cast<std::uint32_t>(g.ny),
                                       static_cast<std::uint32_t>(g.nz)};
  const double header_f64[4] = {g.Lx, g.Ly, g.Lz, st.t};
  out.write(kSnapshotMagic, 4);
  out.write(reinterpret_cast<const char*>(header_u32), sizeof(header_u32));
  out.write(reinterpret_cast<const char*>(header_f64), sizeof(header_f64));

  std::vector<double> buf;
  detail::gather_nodes(st.eta, g.num_nodes(), buf);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
  detail::gather_nodes(st.vel, g.num_nodes(), buf);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

struct Snapshot {
  Grid grid;
  FlowMapState state;
};

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open snapshot '" + path + "'");
  in.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);

  char magic[4] = {};
  std::uint32_t header_u32[5] = {};
  double header_f64[4] = {};
  if (file_size < 56) throw Error(ErrorKind::IoError, "corrupt snapshot header (file too short)");
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header_u32), sizeof(header_u32));
  in.read(reinterpret_cast<char*>(header_f64), sizeof(header_f64));
  if (!in || std::memcmp(magic, kSnapshotMagic, 4) != 0)
    throw Error(ErrorKind::IoError, "corrupt snapshot header (bad magic)");
  if (header_u32[0] != kSnapshotVersion)
    throw Error(ErrorKind::IoError, "unsupported snapshot version " +
                                        std::to_string(header_u32[0]) + " (expected " +
                                        std::to_string(kSnapshotVersion) + ")");

  Snapshot snap;
  snap.grid = make_grid(detail::grid_mode_from_code(header_u32[1]),
                        static_cast<int>(header_u32[2]), static_cast<int>(header_u32[3]),
                        static_cast<int>(header_u32[4]), header_f64[0], header_f64[1],
                        header_f64[2]);
  const std::size_t n_nodes = snap.grid.num_nodes();
  const std::uint64_t expected = 56 + 2ull * 3ull * sizeof(double) * n_nodes;
  if (file_size != expected)
    throw Error(ErrorKind::IoError, "snapshot size mismatch: expected " +
                                        std::to_string(expected) + " bytes, found " +
                                        std::to_string(file_size));

  snap.state = FlowMapState(snap.grid);
  snap.state.t = header_f64[3];
  std::vector<double> buf(3 * n_nodes);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(double)));
  detail::scatter_nodes(buf, n_nodes, snap.state.eta);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(double)));
  detail::scatter_nodes(buf, n_nodes, snap.state.vel);
  if (!in) throw Error(ErrorKind::IoError, "read failed for '" + path + "'");
  return snap;
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// Provenance sidecar for a run directory.  `artifacts` maps relative file
/// names to their SHA-256 content ids.
struct RunManifest {
  std::string kind;  ///< "run", "sweep", or "compat-init"
  std::string config_hash;
  std::string canonical_config;
  long steps{0};
  double t_end{0.0};
  std::vector<std::string> guard_trips;
  std::vector<std::pair<std::string, std::string>> artifacts;
};

inline nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "vve-manifest";
  j["version"] = 1;
  j["kind"] = m.kind;
  j["config_hash"] = m.config_hash;
  j["canonical_config"] = m.canonical_config;
  j["steps"] = m.steps;
  j["t_end"] = m.t_end;
  j["guard_trips"] = m.guard_trips;
  j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& [path, id] : m.artifacts)
    j["artifacts"].push_back({{"path", path}, {"sha256", id}});
  return j;
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << manifest_to_json(m).dump(2) << "\n";
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Diagnostics CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kDiagnosticsCsvHeader =
    "t,basic_energy,dissipation_cum,boundary_work_cum,balance_residual,energy_functional,"
    "min_J,max_J,A_min_eig_margin,normal_recovery_residual,bl_indicator,korn_ratio,"
    "wall_structure_residual";

class DiagnosticsCsvWriter {
 public:
  DiagnosticsCsvWriter(const std::string& path, const std::string& config_hash)
      : out_(path, std::ios::trunc), path_(path) {
    if (!out_) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
    out_ << "# config_hash = " << config_hash << "\n" << kDiagnosticsCsvHeader << "\n";
  }

  void append(const DiagnosticsReport& r) {
    const std::array<double, 13> vals = report_values(r);
    char buf[32];
    for (std::size_t i = 0; i < vals.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", vals[i]);
      out_ << (i ? "," : "") << buf;
    }
    out_ << "\n";
  }

  void close() {
    out_.flush();
    if (!out_) throw Error(ErrorKind::IoError, "write failed for '" + path_ + "'");
    out_.close();
  }

 private:
  std::ofstream out_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Sweep artifacts
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json fit_to_json(const RateFit& f) {
  nlohmann::ordered_json j;
  j["ok"] = f.ok;
  j["slope"] = f.slope;
  j["r2"] = f.r2;
  j["points"] = f.points;
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json sweep_to_json(const SweepResult& res,
                                            const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["format"] = "vve-sweep";
  j["version"] = 1;
  j["config_hash"] = config_hash;
  j["fixed_dt"] = res.fixed_dt;
  j["sample_every"] = res.sample_every;
  j["sample_times"] = res.sample_times;
  j["records"] = nlohmann::ordered_json::array();
  for (const SweepRecord& r : res.records) {
    nlohmann::ordered_json rec;
    rec["eps"] = r.eps;
    rec["bc"] = to_string(r.bc);
    rec["mode"] = to_string(r.mode);
    rec["ok"] = r.ok;
    rec["error"] = r.error;
    rec["sup_eta_l2"] = r.sup_eta_l2;
    rec["sup_v_l2"] = r.sup_v_l2;
    rec["sup_grad_eta_l2"] = r.sup_grad_eta_l2;
    rec["max_energy_functional"] = r.max_energy_functional;
    rec["max_bl_indicator"] = r.max_bl_indicator;
    rec["bl_late"] = r.bl_late;
    rec["bl_at_t_final"] = r.bl_at_t_final;
    rec["limit_bc_residual"] = r.limit_bc_residual;
    rec["steps"] = r.steps;
    rec["guard_trips"] = r.guard_trips;
    j["records"].push_back(std::move(rec));
  }
  j["fits"] = nlohmann::ordered_json::array();
  for (const FamilyFit& f : res.fits) {
    nlohmann::ordered_json fit;
    fit["bc"] = to_string(f.bc);
    fit["mode"] = to_string(f.mode);
    fit["eta_rate"] = detail::fit_to_json(f.eta_rate);
    fit["v_rate"] = detail::fit_to_json(f.v_rate);
    fit["grad_rate"] = detail::fit_to_json(f.grad_rate);
    fit["layer_exponent"] = detail::fit_to_json(f.layer_exponent);
    j["fits"].push_back(std::move(fit));
  }
  return j;
}

inline void write_sweep_json(const std::string& path, const SweepResult& res,
                             const std::string& config_hash) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << sweep_to_json(res, config_hash).dump(2) << "\n";
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

inline constexpr const char* kSweepCsvHeader =
    "eps,bc,mode,ok,sup_eta_l2,sup_v_l2,sup_grad_eta_l2,max_energy_functional,"
    "max_bl_indicator,bl_late,bl_at_t_final,limit_bc_residual,steps";

/// One data row per record; per-family rate fits follow as "#fit," footer
/// records so plain CSV readers see a single rectangular table.
inline void write_sweep_csv(const std::string& path, const SweepResult& res,
                            const std::string& config_hash) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << "# config_hash = " << config_hash << "\n" << kSweepCsvHeader << "\n";
  char buf[32];
  auto g17 = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const SweepRecord& r : res.records) {
    out << g17(r.eps) << ',' << to_string(r.bc) << ',' << to_string(r.mode) << ','
        << (r.ok ? "true" : "false") << ',' << g17(r.sup_eta_l2) << ',' << g17(r.sup_v_l2)
        << ',' << g17(r.sup_grad_eta_l2) << ',' << g17(r.max_energy_functional) << ','
        << g17(r.max_bl_indicator) << ',' << g17(r.bl_late) << ',' << g17(r.bl_at_t_final)
        << ',' << g17(r.limit_bc_residual) << ',' << r.steps << "\n";
  }
  out << "#fit,bc,mode,eta_rate,eta_r2,v_rate,v_r2,grad_rate,grad_r2,layer_exp,layer_r2\n";
  for (const FamilyFit& f : res.fits) {
    out << "#fit," << to_string(f.bc) << ',' << to_string(f.mode) << ','
        << g17(f.eta_rate.slope) << ',' << g17(f.eta_rate.r2) << ',' << g17(f.v_rate.slope)
        << ',' << g17(f.v_rate.r2) << ',' << g17(f.grad_rate.slope) << ','
        << g17(f.grad_rate.r2) << ',' << g17(f.layer_exponent.slope) << ','
        << g17(f.layer_exponent.r2) << "\n";
  }
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Machine-readable errors
// ---------------------------------------------------------------------------

inline std::string error_json(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  return j.dump();
}

inline std::string error_json(const Error& e) { return error_json(to_string(e.kind()), e.message()); }

// ---------------------------------------------------------------------------
// Output-directory lock
// ---------------------------------------------------------------------------

/// Single-writer guard: creating the lock file is atomic (O_CREAT | O_EXCL),
/// so two concurrent writers cannot share an output directory.  The lock is
/// released (file removed) on destruction.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
      throw Error(ErrorKind::IoError, "cannot create output directory '" + dir + "': " +
                                          ec.message());
    path_ = (std::filesystem::path(dir) / ".vve_lock").string();
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw Error(ErrorKind::IoError, "output directory '" + dir +
                                          "' is locked by another run (remove '" + path_ +
                                          "' if stale)");
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd_, pid.data(), pid.size()) < 0) { /* lock still held; content is advisory */
    }
  }

  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

  ~DirectoryLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }

 private:
  std::string path_;
  int fd_{-1};
};

}  // namespace vve
