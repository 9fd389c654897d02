/// @file vvesim.cpp
/// @brief Command-line front end for the slab simulator.
///
/// Subcommands:
///   run              integrate one configuration, writing diagnostics CSV,
///                    snapshots, and a provenance manifest
///   sweep            run a viscosity sweep and write sweep.json / sweep.csv
///   check-identities verify the discrete geometric identities on random maps
///   compat-init      project initial data onto the compatible set and write
///                    it as a snapshot
///   report           render sweep JSON artifacts into tables and gnuplot data
///
/// Errors are reported as a single machine-readable JSON line on stderr and a
/// nonzero exit code.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vve/config.hpp"
#include "vve/snapshot_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vve;

namespace {

// ---------------------------------------------------------------------------
// Shared option plumbing
// ---------------------------------------------------------------------------

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::vector<double> eps;  // run: single override; sweep: replaces the list
  std::string bc;
  std::string mode;  // physics mode: "viscoelastic" | "ns_contrast"
  std::string out;
  long jobs{0};
};

void add_common_flags(CLI::App* cmd, CommonOpts* o, bool sweep_style, bool with_out_dir = true) {
  cmd->add_option("--config", o->config_path, "path to a TOML configuration file");
  cmd->add_option("--preset", o->preset,
                  "named configuration (standard_noslip, standard_navier, compress, "
                  "slipstream, wide_bump)");
  if (sweep_style) {
    cmd->add_option("--eps", o->eps, "viscosity scales, strictly decreasing (overrides sweep.eps)")
        ->delimiter(',');
  } else {
    cmd->add_option("--eps", o->eps, "viscosity scale (overrides material.eps)")
        ->expected(1);
  }
  cmd->add_option("--bc", o->bc, "boundary kind: no_slip | navier_slip");
  cmd->add_option("--mode", o->mode, "physics mode: viscoelastic | ns_contrast");
  if (with_out_dir)
    cmd->add_option("--out", o->out, "output directory (overrides output.directory)");
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config file '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

RunConfig load_config(const CommonOpts& o, bool sweep_style) {
  if (!o.config_path.empty() && !o.preset.empty())
    throw Error(ErrorKind::ConfigError, "--config and --preset are mutually exclusive");
  if (o.config_path.empty() && o.preset.empty())
    throw Error(ErrorKind::ConfigError, "one of --config or --preset is required");
  RunConfig cfg = parse_config(o.preset.empty() ? slurp_file(o.config_path)
                                                : preset_config_text(o.preset));
  if (!o.eps.empty()) {
    if (sweep_style)
      cfg.sweep.eps = o.eps;
    else
      cfg.material.eps = o.eps.front();
  }
  if (!o.bc.empty()) {
    cfg.bc_kind = parse_bc_kind(o.bc);
    if (sweep_style) cfg.sweep.bc_kinds = {o.bc};
  }
  if (!o.mode.empty()) {
    const SweepMode m = parse_sweep_mode(o.mode);
    cfg.material.elastic_on = (m == SweepMode::viscoelastic);
    if (sweep_style) cfg.sweep.modes = {o.mode};
  }
  if (!o.out.empty()) cfg.output.directory = o.out;
  if (o.jobs > 0) cfg.sweep.jobs = o.jobs;
  cfg.validate();
  return cfg;
}

std::string short_hash(const std::string& h) { return h.substr(0, 12); }

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunCmdOpts {
  CommonOpts common;
  std::string init_snapshot;
};

int cmd_run(const RunCmdOpts& o) {
  const RunConfig cfg = load_config(o.common, /*sweep_style=*/false);
  const std::string canonical = cfg.canonical_toml();
  const std::string hash = sha256_hex(canonical);

  const Grid g = build_grid(cfg);
  const ScalarField rho0 = build_rho0(cfg, g);
  FlowMapState state = build_initial_state(cfg, g);
  if (!o.init_snapshot.empty()) {
    Snapshot snap = read_snapshot(o.init_snapshot);
    if (snap.grid.mode != g.mode || snap.grid.nx != g.nx || snap.grid.ny != g.ny ||
        snap.grid.nz != g.nz || snap.grid.Lx != g.Lx || snap.grid.Ly != g.Ly ||
        snap.grid.Lz != g.Lz)
      throw Error(ErrorKind::ConfigError, "snapshot grid does not match the configured grid");
    state = std::move(snap.state);
  }
  const MaterialParams mp = cfg.material;
  const BoundaryCondition bc = build_bc(cfg);
  const IntegratorConfig ic = build_integrator(cfg);

  const bool want_artifacts = !cfg.output.directory.empty();
  std::optional<DirectoryLock> lock;
  std::optional<DiagnosticsCsvWriter> csv;
  std::vector<std::string> snapshot_files;
  if (want_artifacts) {
    lock.emplace(cfg.output.directory);
    csv.emplace((fs::path(cfg.output.directory) / "diagnostics.csv").string(), hash);
  }

  DiagnosticsReporter reporter(g, rho0, mp, bc, static_cast<int>(cfg.sweep.func_order));
  DiagnosticsReport last_report;
  long last_csv_step = -1;
  const RunObserver observer = [&](const FlowMapState& st, const GeometricCache& cache,
                                   long step, double /*dt*/) {
    const bool cadence = (step % cfg.output.diagnostics_every) == 0;
    if (!csv && !cadence) return;
    // The reporter accumulates the state history for time-derivative
    // stencils, so it must see exactly the rows it writes.
    if (!cadence) return;
    last_report = reporter.report(st, cache);
    if (csv) {
      csv->append(last_report);
      last_csv_step = step;
    }
    if (want_artifacts && cfg.output.snapshot_every > 0 && step > 0 &&
        step % cfg.output.snapshot_every == 0) {
      char name[48];
      std::snprintf(name, sizeof(name), "snapshot_%06ld.vlsn", step);
      const std::string p = (fs::path(cfg.output.directory) / name).string();
      write_snapshot(p, g, st);
      snapshot_files.push_back(name);
    }
  };

  const RunResult res = run(g, state, rho0, mp, bc, ic, nullptr, &observer);

  // Always close the trajectory with a final row and the final state.
  const GeometricCache final_cache = compute_geometry(g, state.eta);
  if (res.steps != last_csv_step) {
    last_report = reporter.report(state, final_cache);
    if (csv) csv->append(last_report);
  }
  if (want_artifacts) {
    write_snapshot((fs::path(cfg.output.directory) / "final.vlsn").string(), g, state);
    snapshot_files.push_back("final.vlsn");
    csv->close();

    RunManifest m;
    m.kind = "run";
    m.config_hash = hash;
    m.canonical_config = canonical;
    m.steps = res.steps;
    m.t_end = res.t_end;
    m.guard_trips = res.guard_trips;
    m.artifacts.emplace_back(
        "diagnostics.csv",
        sha256_file((fs::path(cfg.output.directory) / "diagnostics.csv").string()));
    for (const std::string& name : snapshot_files)
      m.artifacts.emplace_back(name,
                               sha256_file((fs::path(cfg.output.directory) / name).string()));
    write_manifest((fs::path(cfg.output.directory) / "manifest.json").string(), m);
  }

  std::printf("run complete (config %s)\n", short_hash(hash).c_str());
  std::printf("  steps              = %ld\n", res.steps);
  std::printf("  t_end              = %.17g\n", res.t_end);
  std::printf("  dt_last            = %.6g\n", res.dt_last);
  std::printf("  basic_energy       = %.17g\n", last_report.basic_energy);
  std::printf("  balance_residual   = %.6g\n", last_report.balance_residual);
  std::printf("  min_J / max_J      = %.12g / %.12g\n", last_report.min_J, last_report.max_J);
  std::printf("  bl_indicator       = %.6g\n", last_report.bl_indicator);
  std::printf("  energy_functional  = %.9g\n", last_report.energy_functional);
  if (want_artifacts)
    std::printf("  artifacts          = %s\n", cfg.output.directory.c_str());
  for (const std::string& trip : res.guard_trips)
    std::printf("  guard trip: %s\n", trip.c_str());

  if (!res.reached_t_final) {
    std::string what = "run stopped before t_final";
    for (const std::string& trip : res.guard_trips) what += "; " + trip;
    std::fprintf(stderr, "%s\n", error_json("GuardStop", what).c_str());
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const CommonOpts& o) {
  const RunConfig cfg = load_config(o, /*sweep_style=*/true);
  const std::string canonical = cfg.canonical_toml();
  const std::string hash = sha256_hex(canonical);

  const Grid g = build_grid(cfg);
  const ScalarField rho0 = build_rho0(cfg, g);
  const FlowMapState init = build_initial_state(cfg, g);
  const SweepPlan plan = build_sweep_plan(cfg);
  const IntegratorConfig ic = build_integrator(cfg);

  const SweepResult res = run_sweep(g, init, rho0, cfg.material, ic, plan);

  if (!cfg.output.directory.empty()) {
    DirectoryLock lock(cfg.output.directory);
    const std::string jpath = (fs::path(cfg.output.directory) / "sweep.json").string();
    const std::string cpath = (fs::path(cfg.output.directory) / "sweep.csv").string();
    write_sweep_json(jpath, res, hash);
    write_sweep_csv(cpath, res, hash);
    RunManifest m;
    m.kind = "sweep";
    m.config_hash = hash;
    m.canonical_config = canonical;
    m.steps = 0;
    for (const SweepRecord& r : res.records) m.steps += r.steps;
    m.t_end = cfg.t_final;
    m.artifacts.emplace_back("sweep.json", sha256_file(jpath));
    m.artifacts.emplace_back("sweep.csv", sha256_file(cpath));
    write_manifest((fs::path(cfg.output.directory) / "manifest.json").string(), m);
  }

  std::printf("sweep complete (config %s): %zu records, fixed_dt = %.6g\n",
              short_hash(hash).c_str(), res.records.size(), res.fixed_dt);
  std::printf("%12s %12s %14s %12s %12s %12s %12s\n", "eps", "bc", "mode", "sup_v_l2",
              "sup_eta_l2", "bl_late", "maxE");
  for (const SweepRecord& r : res.records)
    std::printf("%12.5g %12s %14s %12.5g %12.5g %12.5g %12.5g%s%s\n", r.eps, to_string(r.bc),
                to_string(r.mode), r.sup_v_l2, r.sup_eta_l2, r.bl_late,
                r.max_energy_functional, r.ok ? "" : "  FAILED: ", r.ok ? "" : r.error.c_str());
  for (const FamilyFit& f : res.fits)
    std::printf("fit %s/%s: v_rate=%.4g (r2=%.4g)  eta_rate=%.4g  grad_rate=%.4g  "
                "layer_exp=%.4g (r2=%.4g)\n",
                to_string(f.bc), to_string(f.mode), f.v_rate.slope, f.v_rate.r2,
                f.eta_rate.slope, f.grad_rate.slope, f.layer_exponent.slope,
                f.layer_exponent.r2);

  long failed = 0;
  for (const SweepRecord& r : res.records)
    if (!r.ok) ++failed;
  if (failed > 0) {
    std::fprintf(stderr, "%s\n",
                 error_json("SweepRecordFailure",
                            std::to_string(failed) + " of " + std::to_string(res.records.size()) +
                                " sweep records failed; see artifacts for details")
                     .c_str());
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// check-identities
// ---------------------------------------------------------------------------

struct CheckOpts {
  unsigned long seed{7};
  int trials{4};
  int nz{25};
};

/// An analytic random trigonometric field, periodic in x and y, samplable on
/// any grid (so refinement studies evaluate the same map).
struct TrigField {
  struct Term {
    double amp;
    int kx, ky;
    double kz, px, py, pz;
  };
  std::vector<Term> terms;

  double operator()(double x, double y, double z, double Lx, double Ly) const {
    const double tau = 2.0 * 3.14159265358979323846;
    double v = 0.0;
    for (const Term& t : terms)
      v += t.amp * std::sin(tau * t.kx * x / Lx + t.px) * std::sin(tau * t.ky * y / Ly + t.py) *
           std::sin(t.kz * z + t.pz);
    return v;
  }
};

int cmd_check_identities(const CheckOpts& o) {
  if (o.trials < 1) throw Error(ErrorKind::ConfigError, "--trials must be >= 1");
  if (o.nz < 9 || o.nz % 2 == 0)
    throw Error(ErrorKind::ConfigError, "--nz must be odd and >= 9 (refinement doubles it)");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Single-wavelength tangential content keeps the coarse grid inside the
  // asymptotic second-order regime, so refinement ratios are clean.
  auto random_field = [&](double amp, bool use_y) {
    TrigField f;
    for (int m = 0; m < 3; ++m)
      f.terms.push_back({amp * unit(rng), 1, use_y ? 1 : 0, 0.5 + 2.0 * std::abs(unit(rng)),
                         3.14159 * unit(rng), use_y ? 3.14159 * unit(rng) : 1.5707963267948966,
                         3.14159 * unit(rng)});
    return f;
  };
  auto sample_state = [&](const Grid& g, const std::array<TrigField, 6>& f) {
    FlowMapState st(g);
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const std::size_t n = g.idx(i, j, k);
          const double x = g.x(i), y = g.y(j), z = g.z(k);
          st.eta.c[0][n] = x + f[0](x, y, z, g.Lx, g.Ly);
          st.eta.c[1][n] = y + f[1](x, y, z, g.Lx, g.Ly);
          st.eta.c[2][n] = z + f[2](x, y, z, g.Lx, g.Ly);
          st.vel.c[0][n] = 25.0 * f[3](x, y, z, g.Lx, g.Ly);
          st.vel.c[1][n] = 25.0 * f[4](x, y, z, g.Lx, g.Ly);
          st.vel.c[2][n] = 25.0 * f[5](x, y, z, g.Lx, g.Ly);
        }
    return st;
  };
  auto advance = [](const Grid& g, const FlowMapState& prev, double dt) {
    FlowMapState next(g);
    next.t = prev.t + dt;
    for (int c = 0; c < 3; ++c)
      for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        next.eta.c[c][n] = prev.eta.c[c][n] + dt * prev.vel.c[c][n];
        next.vel.c[c][n] = prev.vel.c[c][n];
      }
    return next;
  };

  const Grid coarse = make_grid(GridMode::slab3d, 16, 16, o.nz, 1.0, 1.0, 1.0);
  const Grid fine = make_grid(GridMode::slab3d, 32, 32, 2 * o.nz - 1, 1.0, 1.0, 1.0);
  const ScalarField rho0_c = make_scalar(coarse, 1.0);
  const double dt = 1e-3;

  // The cofactor-divergence (Piola) identity: exact through rounding when one
  // tangential direction is trivial; second-order in h on general maps.
  double piola_exact = 0.0;
  double piola_ratio_min = std::numeric_limits<double>::infinity();
  double piola_ratio_max = 0.0;
  // Time identities: midpoint consistency is second order in dt.
  double jacobi_max = 0.0, jacobi_ratio_min = std::numeric_limits<double>::infinity(),
         jacobi_ratio_max = 0.0;
  double djdq_max = 0.0, djdq_ratio_min = std::numeric_limits<double>::infinity(),
         djdq_ratio_max = 0.0;
  double margin_min = 0.0;

  for (int trial = 0; trial < o.trials; ++trial) {
    std::array<TrigField, 6> trivial_y;
    for (auto& f : trivial_y) f = random_field(0.004, /*use_y=*/false);
    const FlowMapState flat = sample_state(coarse, trivial_y);
    piola_exact = std::max(piola_exact, piola_residual(coarse, compute_geometry(coarse, flat.eta)));

    std::array<TrigField, 6> general;
    for (auto& f : general) f = random_field(0.004, /*use_y=*/true);
    const FlowMapState prev_c = sample_state(coarse, general);
    const FlowMapState prev_f = sample_state(fine, general);
    const GeometricCache cache_c = compute_geometry(coarse, prev_c.eta);
    const GeometricCache cache_f = compute_geometry(fine, prev_f.eta);
    const double ratio = piola_residual(coarse, cache_c) / piola_residual(fine, cache_f);
    piola_ratio_min = std::min(piola_ratio_min, ratio);
    piola_ratio_max = std::max(piola_ratio_max, ratio);

    const FlowMapState next_full = advance(coarse, prev_c, dt);
    const FlowMapState next_half = advance(coarse, prev_c, dt / 2);
    const double jac_full = jacobi_residual(coarse, prev_c, next_full);
    const double jac_half = jacobi_residual(coarse, prev_c, next_half);
    jacobi_max = std::max(jacobi_max, jac_full);
    jacobi_ratio_min = std::min(jacobi_ratio_min, jac_full / jac_half);
    jacobi_ratio_max = std::max(jacobi_ratio_max, jac_full / jac_half);
    const double dj_full = dJ_dq_consistency(coarse, prev_c, next_full, rho0_c, 1.4);
    const double dj_half = dJ_dq_consistency(coarse, prev_c, next_half, rho0_c, 1.4);
    djdq_max = std::max(djdq_max, dj_full);
    djdq_ratio_min = std::min(djdq_ratio_min, dj_full / dj_half);
    djdq_ratio_max = std::max(djdq_ratio_max, dj_full / dj_half);

    const TensorField A = assemble_A(coarse, cache_c, rho0_c, 1.4);
    margin_min = std::min(margin_min, A_spectrum_margin(coarse, A, cache_c, rho0_c));
  }

  struct Row {
    const char* name;
    double value;
    double lo, hi;  // pass when lo <= value <= hi
  };
  const double inf = std::numeric_limits<double>::infinity();
  const Row rows[] = {
      {"piola_trivial_y_max", piola_exact, 0.0, 1e-12},
      {"piola_h_refine_ratio_min", piola_ratio_min, 3.0, inf},
      {"piola_h_refine_ratio_max", piola_ratio_max, 0.0, 5.0},
      {"jacobian_transport_max", jacobi_max, 0.0, 1e-6},
      {"jacobian_dt_ratio_min", jacobi_ratio_min, 3.0, inf},
      {"jacobian_dt_ratio_max", jacobi_ratio_max, 0.0, 5.0},
      {"dJ_dq_consistency_max", djdq_max, 0.0, 1e-5},
      {"dJ_dq_dt_ratio_min", djdq_ratio_min, 3.0, inf},
      {"dJ_dq_dt_ratio_max", djdq_ratio_max, 0.0, 5.0},
      {"A_spectrum_margin_min", margin_min, -1e-12, inf},
  };
  int failures = 0;
  std::printf("geometric identity checks (seed %lu, %d random maps, 16x16x%d -> 32x32x%d)\n",
              o.seed, o.trials, o.nz, 2 * o.nz - 1);
  for (const Row& r : rows) {
    const bool ok = r.value >= r.lo && r.value <= r.hi;
    failures += ok ? 0 : 1;
    std::printf("  %-26s %12.4e  (expect [%.3g, %.3g])  %s\n", r.name, r.value, r.lo, r.hi,
                ok ? "PASS" : "FAIL");
  }
  if (failures > 0) {
    std::fprintf(stderr, "%s\n",
                 error_json("IdentityCheckFailure",
                            std::to_string(failures) + " identity checks failed")
                     .c_str());
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// compat-init
// ---------------------------------------------------------------------------

struct CompatOpts {
  CommonOpts common;
  int order{0};
  std::string out_file;
};

int cmd_compat_init(const CompatOpts& o) {
  if (o.out_file.empty())
    throw Error(ErrorKind::ConfigError, "compat-init requires --out <snapshot file>");
  RunConfig cfg = load_config(o.common, /*sweep_style=*/false);
  const std::string canonical = cfg.canonical_toml();
  const std::string hash = sha256_hex(canonical);

  const Grid g = build_grid(cfg);
  const ScalarField rho0 = build_rho0(cfg, g);
  FlowMapState state = build_initial_state(cfg, g);
  const BoundaryCondition bc = build_bc(cfg);

  const CompatReport before = compat_residual(g, state, rho0, cfg.material, bc, o.order);
  const CompatReport after = compat_project(g, state, rho0, cfg.material, bc, o.order);
  write_snapshot(o.out_file, g, state);

  RunManifest m;
  m.kind = "compat-init";
  m.config_hash = hash;
  m.canonical_config = canonical;
  m.steps = 0;
  m.t_end = 0.0;
  m.artifacts.emplace_back(fs::path(o.out_file).filename().string(), sha256_file(o.out_file));
  write_manifest(o.out_file + ".manifest.json", m);

  std::printf("compat-init complete (config %s, order %d)\n", short_hash(hash).c_str(), o.order);
  std::printf("  order-0 residual: %.6e -> %.6e\n", before.order0, after.order0);
  if (o.order >= 1)
    std::printf("  order-1 residual: %.6e -> %.6e\n", before.order1, after.order1);
  std::printf("  wrote %s\n", o.out_file.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string out_dir;
};

double json_num(const json& v) {
  return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

int cmd_report(const ReportOpts& o) {
  if (o.inputs.empty()) throw Error(ErrorKind::ConfigError, "report requires input files");
  std::string hash;
  std::vector<json> records;
  std::vector<json> fits;
  for (const std::string& path : o.inputs) {
    json j;
    try {
      j = json::parse(slurp_file(path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::IoError, "cannot parse '" + path + "': " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "vve-sweep" || j.value("version", 0) != 1)
      throw Error(ErrorKind::IoError, "'" + path + "' is not a version-1 sweep artifact");
    const std::string h = j.value("config_hash", "");
    if (hash.empty()) hash = h;
    if (h != hash)
      throw Error(ErrorKind::ConfigError, "report inputs mix different configurations: " +
                                              short_hash(hash) + "... vs " + short_hash(h) +
                                              "... (" + path + ")");
    for (const json& r : j.at("records")) records.push_back(r);
    for (const json& f : j.at("fits")) fits.push_back(f);
  }

  // Group records by family, preserving first-seen order.
  std::vector<std::pair<std::string, std::vector<const json*>>> families;
  for (const json& r : records) {
    const std::string key =
        r.value("bc", "?") + "/" + r.value("mode", "?");
    auto it = std::find_if(families.begin(), families.end(),
                           [&](const auto& f) { return f.first == key; });
    if (it == families.end()) {
      families.push_back({key, {}});
      it = std::prev(families.end());
    }
    it->second.push_back(&r);
  }

  std::printf("sweep report (config %s..., %zu records, %zu families)\n",
              short_hash(hash).c_str(), records.size(), families.size());
  for (const auto& [key, rows] : families) {
    std::printf("\nfamily %s\n", key.c_str());
    std::printf("  %12s %12s %12s %12s %12s %12s %12s\n", "eps", "sup_eta_l2", "sup_v_l2",
                "sup_grad", "maxE", "bl_late", "limit_bc");
    for (const json* r : rows)
      std::printf("  %12.5g %12.5g %12.5g %12.5g %12.5g %12.5g %12.5g%s\n",
                  json_num(r->at("eps")), json_num(r->at("sup_eta_l2")),
                  json_num(r->at("sup_v_l2")), json_num(r->at("sup_grad_eta_l2")),
                  json_num(r->at("max_energy_functional")), json_num(r->at("bl_late")),
                  json_num(r->at("limit_bc_residual")),
                  r->value("ok", false) ? "" : "  [failed]");
  }
  std::printf("\nfits\n");
  for (const json& f : fits) {
    auto fit_str = [&](const char* name) {
      const json& x = f.at(name);
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%s=%.4g (r2=%.3g%s)", name, json_num(x.at("slope")),
                    json_num(x.at("r2")), x.value("ok", false) ? "" : ", not fit");
      return std::string(buf);
    };
    std::printf("  %s/%s: %s  %s  %s  %s\n", f.value("bc", "?").c_str(),
                f.value("mode", "?").c_str(), fit_str("eta_rate").c_str(),
                fit_str("v_rate").c_str(), fit_str("grad_rate").c_str(),
                fit_str("layer_exponent").c_str());
  }

  // Gnuplot-ready data: one block per family, two blank lines between blocks.
  const fs::path out_dir =
      o.out_dir.empty() ? fs::path(o.inputs.front()).parent_path() : fs::path(o.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const std::string dat_path = (out_dir / "report_norms.dat").string();
  std::ofstream dat(dat_path, std::ios::trunc);
  if (!dat) throw Error(ErrorKind::IoError, "cannot open '" + dat_path + "' for writing");
  dat << "# config_hash = " << hash << "\n";
  dat << "# columns: eps sup_eta_l2 sup_v_l2 sup_grad_eta_l2 max_energy_functional bl_late\n";
  char buf[32];
  auto g17 = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& [key, rows] : families) {
    dat << "# family: " << key << "\n";
    for (const json* r : rows) {
      if (json_num(r->at("eps")) == 0.0) continue;  // reference row has no diff norms
      dat << g17(json_num(r->at("eps"))) << ' ' << g17(json_num(r->at("sup_eta_l2"))) << ' '
          << g17(json_num(r->at("sup_v_l2"))) << ' ' << g17(json_num(r->at("sup_grad_eta_l2")))
          << ' ' << g17(json_num(r->at("max_energy_functional"))) << ' '
          << g17(json_num(r->at("bl_late"))) << "\n";
    }
    dat << "\n\n";
  }
  dat.flush();
  if (!dat) throw Error(ErrorKind::IoError, "write failed for '" + dat_path + "'");
  std::printf("\nwrote %s\n", dat_path.c_str());
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"structured-grid Lagrangian simulator for compressible viscoelastic slab flows"};
  app.require_subcommand(1);

  RunCmdOpts run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "integrate one configuration");
  add_common_flags(run_cmd, &run_opts.common, /*sweep_style=*/false);
  run_cmd->add_option("--init", run_opts.init_snapshot,
                      "start from a snapshot (grid must match the config)");

  CommonOpts sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a vanishing-viscosity sweep");
  add_common_flags(sweep_cmd, &sweep_opts, /*sweep_style=*/true);
  sweep_cmd->add_option("--jobs", sweep_opts.jobs, "concurrent runs (results are identical)");

  CheckOpts check_opts;
  CLI::App* check_cmd =
      app.add_subcommand("check-identities", "verify discrete geometric identities");
  check_cmd->add_option("--seed", check_opts.seed, "random map seed (default 7)");
  check_cmd->add_option("--trials", check_opts.trials, "number of random maps (default 4)");
  check_cmd->add_option("--nz", check_opts.nz, "wall-normal resolution (default 25)");

  CompatOpts compat_opts;
  CLI::App* compat_cmd =
      app.add_subcommand("compat-init", "project initial data onto the compatible set");
  add_common_flags(compat_cmd, &compat_opts.common, /*sweep_style=*/false,
                   /*with_out_dir=*/false);
  compat_cmd->add_option("--order", compat_opts.order, "compatibility order, 0 or 1 (default 0)");
  compat_cmd->add_option("--out", compat_opts.out_file, "snapshot file to write")->required();

  ReportOpts report_opts;
  CLI::App* report_cmd =
      app.add_subcommand("report", "render sweep JSON artifacts into tables and gnuplot data");
  report_cmd->add_option("inputs", report_opts.inputs, "sweep.json files")->expected(-1);
  report_cmd->add_option("--out", report_opts.out_dir,
                         "directory for gnuplot data (default: alongside the first input)");

  try {
    app.parse(argc, argv);
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts);
    if (check_cmd->parsed()) return cmd_check_identities(check_opts);
    if (compat_cmd->parsed()) return cmd_compat_init(compat_opts);
    if (report_cmd->parsed()) return cmd_report(report_opts);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", error_json(e).c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", error_json("Unhandled", e.what()).c_str());
    return 1;
  }
}
