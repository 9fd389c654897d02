/// @file test_config.cpp
/// @brief Configuration language: expression evaluator, strict TOML subset,
///        validation messages with key paths, presets, canonical round-trip,
///        and the builders that assemble run ingredients.

#include <cmath>
#include <string>

#include "doctest.h"
#include "vve/config.hpp"

using namespace vve;

namespace {

std::string error_message(const std::string& toml) {
  try {
    (void)parse_config(toml);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    return e.message();
  }
  FAIL("expected parse_config to throw for:\n", toml);
  return {};
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("expression evaluator: precedence, functions, constants") {
  CHECK(FieldExpr("2+3*4").eval(0, 0, 0) == 14.0);
  CHECK(FieldExpr("(2+3)*4").eval(0, 0, 0) == 20.0);
  CHECK(FieldExpr("2^3^2").eval(0, 0, 0) == 512.0);  // right-associative
  CHECK(FieldExpr("-2^2").eval(0, 0, 0) == -4.0);    // ^ binds tighter than unary -
  CHECK(FieldExpr("2^-2").eval(0, 0, 0) == 0.25);
  CHECK(FieldExpr("7/2/2").eval(0, 0, 0) == 1.75);  // left-associative
  CHECK(FieldExpr("1-2-3").eval(0, 0, 0) == -4.0);
  CHECK(FieldExpr("x+2*y+3*z").eval(1, 2, 3) == 14.0);
  CHECK(FieldExpr("pi").eval(0, 0, 0) == doctest::Approx(3.14159265358979).epsilon(1e-14));
  CHECK(FieldExpr("e").eval(0, 0, 0) == doctest::Approx(2.71828182845905).epsilon(1e-14));

  CHECK(FieldExpr("smoothstep(-1)").eval(0, 0, 0) == 0.0);
  CHECK(FieldExpr("smoothstep(0)").eval(0, 0, 0) == 0.0);
  CHECK(FieldExpr("smoothstep(0.5)").eval(0, 0, 0) == 0.5);
  CHECK(FieldExpr("smoothstep(1)").eval(0, 0, 0) == 1.0);
  CHECK(FieldExpr("smoothstep(7)").eval(0, 0, 0) == 1.0);
  CHECK(FieldExpr("smoothstep(0.25)").eval(0, 0, 0) ==
        doctest::Approx(0.25 * 0.25 * (3 - 2 * 0.25)).epsilon(1e-15));

  CHECK(FieldExpr("exp(1)").eval(0, 0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(FieldExpr("log(e)").eval(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(FieldExpr("sqrt(z)").eval(0, 0, 9) == 3.0);
  CHECK(FieldExpr("abs(-3.5)").eval(0, 0, 0) == 3.5);
  CHECK(FieldExpr("sin(0)+cos(0)+tan(0)").eval(0, 0, 0) == 1.0);
  CHECK(FieldExpr("tanh(z)").eval(0, 0, 0.5) ==
        doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  CHECK(FieldExpr("sinh(1)-(e-1/e)/2").eval(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(FieldExpr("cosh(1)-(e+1/e)/2").eval(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-15));

  // The standard-preset shape evaluates to the intended Gaussian bump.
  const FieldExpr bump(
      "0.1*exp(-((z-0.25)/0.08)^2)*smoothstep((z-0.02)/0.06)*smoothstep((0.93-z)/0.06)");
  CHECK(bump.eval(0, 0, 0.25) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(bump.eval(0, 0, 0.0) == 0.0);   // exact zero at the wall
  CHECK(bump.eval(0, 0, 0.01) == 0.0);  // compact support
  CHECK(bump.eval(0, 0, 0.95) == 0.0);
  CHECK(bump.eval(0, 0, 0.35) ==
        doctest::Approx(0.1 * std::exp(-std::pow((0.35 - 0.25) / 0.08, 2))).epsilon(1e-14));
}

TEST_CASE("expression evaluator: malformed input is rejected") {
  const char* bad[] = {"",        "2+*3",   "foo(2)",   "sin 2",  "(2",      "2 3",
                       "x y",     "2..5",   "sin(2",    "2^",     "*2",      "2+",
                       "sin()",   "a",      "x(2)",     "1e",     "((((2)))"};
  for (const char* s : bad) {
    CAPTURE(s);
    CHECK_THROWS_AS((void)FieldExpr(s), Error);
  }
  // Deep but legal nesting is fine; pathological nesting is rejected.
  std::string deep = "z";
  for (int i = 0; i < 200; ++i) deep = "(" + deep + ")";
  CHECK_THROWS_AS((void)FieldExpr(deep), Error);
  std::string minus(200, '-');
  CHECK_THROWS_AS((void)FieldExpr(minus + "z"), Error);
  CHECK(FieldExpr("--z").eval(0, 0, 2) == 2.0);
}

TEST_CASE("toml subset: values, comments, strings, arrays") {
  const std::string text =
      "# full-line comment\n"
      "[grid]\n"
      "mode = \"column1d\"   # trailing comment\n"
      "nz = 33\n"
      "Lz = 2.5\n"
      "\n"
      "[material]\n"
      "gamma = 1.4\n"
      "elastic_on = false\n"
      "rho0 = \"1 + 0.5*z\"\n"
      "\n"
      "[output]\n"
      "directory = \"runs/a#b\\t\"  # '#' inside a string is literal\n"
      "\n"
      "[sweep]\n"
      "eps = [1e-1, 1e-2, 1e-3,]  # trailing comma allowed\n"
      "modes = [\"viscoelastic\", \"ns_contrast\"]\n";
  const RunConfig c = parse_config(text);
  CHECK(c.mode == GridMode::column1d);
  CHECK(c.nz == 33);
  CHECK(c.Lz == 2.5);
  CHECK(c.material.elastic_on == false);
  CHECK(c.rho0 == "1 + 0.5*z");
  CHECK(c.output.directory == "runs/a#b\t");
  REQUIRE(c.sweep.eps.size() == 3);
  CHECK(c.sweep.eps[1] == 1e-2);
  REQUIRE(c.sweep.modes.size() == 2);
  CHECK(c.sweep.modes[1] == "ns_contrast");
  // A numeric rho0 is accepted and normalized to text.
  const RunConfig c2 = parse_config("[material]\nrho0 = 2.0\n");
  CHECK(FieldExpr(c2.rho0).eval(0, 0, 0) == 2.0);
}

TEST_CASE("toml subset: parse errors carry line numbers") {
  CHECK(contains(error_message("[grid]\nnz == 33\n"), "line 2"));
  CHECK(contains(error_message("[grid\n"), "line 1"));
  CHECK(contains(error_message("[grid]\nnz = \n"), "line 2"));
  CHECK(contains(error_message("\n\nwhat is this\n"), "line 3"));
  CHECK(contains(error_message("[grid]\nnz = 33 junk\n"), "line 2"));
  CHECK(contains(error_message("[init]\nv1 = \"unterminated\n"), "line 2"));
  CHECK(contains(error_message("[sweep]\neps = [1e-1, \"a\"]\n"), "homogeneous"));
  CHECK(contains(error_message("[sweep]\neps = [1e-1, 1e-2\n"), "line 2"));
  const std::string dup = error_message("[grid]\nnz = 33\nnz = 65\n");
  CHECK(contains(dup, "duplicate key 'grid.nz'"));
  CHECK(contains(dup, "line 2"));
  CHECK(contains(error_message("[grid]\nnz = 17\n[grid]\nLz = 2\n"),
                 "section [grid] defined twice"));
}

TEST_CASE("strict mode: unknown keys and wrong types are rejected with paths") {
  const std::string unk = error_message("[material]\ngamm = 1.4\n");
  CHECK(contains(unk, "unknown config key 'material.gamm'"));
  CHECK(contains(unk, "line 2"));
  CHECK(contains(error_message("top_level = 1\n"), "unknown config key 'top_level'"));
  CHECK(contains(error_message("[grid]\nnz = \"a\"\n"), "'grid.nz' expects an integer"));
  CHECK(contains(error_message("[grid]\nnz = 32.5\n"), "'grid.nz' expects an integer"));
  CHECK(contains(error_message("[material]\ngamma = \"big\"\n"),
                 "'material.gamma' expects a number"));
  CHECK(contains(error_message("[material]\nelastic_on = 1\n"),
                 "'material.elastic_on' expects a boolean"));
  CHECK(contains(error_message("[sweep]\neps = []\n"), "non-empty array of numbers"));
}

TEST_CASE("validation: physical constraints are reported with key paths") {
  CHECK(contains(error_message("[material]\ngamma = 0.9\n"), "material.gamma must be > 1"));
  CHECK(contains(error_message("[material]\nmu = 1.0\nlambda = -1.0\n"),
                 "2*mu + 3*lambda > 0"));
  CHECK(contains(error_message("[material]\nmu = -2.0\n"), "material.mu must be > 0"));
  CHECK(contains(error_message("[material]\neps = -0.1\n"), "eps"));
  CHECK(contains(error_message("[grid]\nnz = 4\n"), "grid.nz"));
  CHECK(contains(error_message("[integrator]\nt_final = -0.5\n"),
                 "integrator.t_final must be > 0"));
  CHECK(contains(error_message("[integrator]\ncfl_adv = 0.0\n"), "integrator.cfl_adv"));
  CHECK(contains(error_message("[integrator]\nmax_steps = 0\n"), "integrator.max_steps"));
  CHECK(contains(error_message("[integrator]\nfixed_dt = -1.0\n"), "integrator.fixed_dt"));
  CHECK(contains(error_message("[output]\ndiagnostics_every = 0\n"),
                 "output.diagnostics_every"));
  CHECK(contains(error_message("[output]\nsnapshot_every = -2\n"), "output.snapshot_every"));
  CHECK(contains(error_message("[sweep]\neps = [1e-3, 1e-2]\n"), "sweep"));
  CHECK(contains(error_message("[sweep]\nmodes = [\"magic\"]\n"), "sweep.modes"));
  CHECK(contains(error_message("[sweep]\nbc_kinds = [\"free\"]\n"), "sweep.bc_kinds"));
  CHECK(contains(error_message("[sweep]\njobs = 0\n"), "sweep.jobs"));
  CHECK(contains(error_message("[bc]\nkind = \"slip\"\n"), "bc.kind"));
  CHECK(contains(error_message("[integrator]\nscheme = \"euler\"\n"), "integrator.scheme"));
  CHECK(contains(error_message("[grid]\nmode = \"cube\"\n"), "grid.mode"));
  CHECK(contains(error_message("[init]\nv1 = \"sin(\"\n"), "init.v1"));
  CHECK(contains(error_message("[material]\nrho0 = \"q\"\n"), "material.rho0"));
  CHECK(contains(error_message("[init]\npreset = \"whirl\"\n"), "init.preset"));
  CHECK(contains(error_message("[init]\npreset = \"standard\"\nv1 = \"z\"\n"),
                 "mutually exclusive"));
}

TEST_CASE("defaults and canonical serialization round-trip") {
  const RunConfig d = parse_config("");
  CHECK(d.mode == GridMode::column1d);
  CHECK(d.nz == 257);
  CHECK(d.material.gamma == 1.4);
  CHECK(d.material.mu == 1.0);
  CHECK(d.material.eps == 0.0);
  CHECK(d.bc_kind == BCKind::no_slip);
  CHECK(d.scheme == Scheme::imex_viscous);
  CHECK(d.t_final == 0.5);
  CHECK(d.init.v[0] == "0");
  CHECK(d.effective_bc_alpha() == d.material.alpha);

  const std::string canon = d.canonical_toml();
  CHECK(parse_config(canon).canonical_toml() == canon);

  // Execution-only knobs do not perturb the hashing pre-image: the same
  // physics run with different job counts or output paths must share a hash.
  RunConfig j = d;
  j.sweep.jobs = 8;
  j.output.directory = "elsewhere";
  j.output.diagnostics_every = 7;
  CHECK(j.canonical_toml() == canon);
  RunConfig p = d;
  p.material.eps = 0.25;
  CHECK(p.canonical_toml() != canon);

  const char* names[] = {"standard_noslip", "standard_navier", "compress", "slipstream",
                         "wide_bump"};
  for (const char* name : names) {
    CAPTURE(name);
    const RunConfig c = preset_config(name);
    const std::string s = c.canonical_toml();
    CHECK(parse_config(s).canonical_toml() == s);
  }
  CHECK_THROWS_AS((void)preset_config("nonsense"), Error);
}

TEST_CASE("the standard presets pin the reference setup") {
  const RunConfig c = preset_config("standard_noslip");
  CHECK(c.mode == GridMode::column1d);
  CHECK(c.nz == 257);
  CHECK(c.Lz == 1.0);
  CHECK(c.material.gamma == 1.4);
  CHECK(c.material.mu == 1.0);
  CHECK(c.material.lambda == 0.0);
  CHECK(c.material.alpha == 1.0);
  CHECK(c.material.elastic_on);
  CHECK(c.rho0 == "1");
  CHECK(c.bc_kind == BCKind::no_slip);
  CHECK(c.t_final == 0.5);
  CHECK(c.scheme == Scheme::imex_viscous);
  CHECK(c.init.preset == "standard");
  CHECK(c.init.phi[0] == "0");
  CHECK(c.init.v[1] == "0");
  CHECK(c.init.v[2] == "0");
  const FieldExpr v1(c.init.v[0]);
  CHECK(v1.eval(0, 0, 0.25) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(v1.eval(0, 0, 0.0) == 0.0);
  CHECK(v1.eval(0, 0, 1.0) == 0.0);
  REQUIRE(c.sweep.eps.size() == 5);
  CHECK(c.sweep.eps.front() == 1e-1);
  CHECK(c.sweep.eps.back() == 1e-3);

  const RunConfig n = preset_config("standard_navier");
  CHECK(n.bc_kind == BCKind::navier_slip);
  CHECK(n.init.v[0] == c.init.v[0]);  // same data, different wall law
}

TEST_CASE("builders assemble grid, density, state, bc, integrator, plan") {
  const RunConfig c = parse_config(
      "[grid]\nmode = \"column1d\"\nnz = 17\nLz = 2.0\n"
      "[material]\nrho0 = \"1 + 0.5*z\"\n"
      "[bc]\nkind = \"navier_slip\"\nalpha = 0.25\n"
      "[integrator]\nscheme = \"rk4_explicit\"\nt_final = 0.125\nfixed_dt = 1e-3\n"
      "[init]\nphi3 = \"0.01*sin(pi*z/2)\"\nv1 = \"0.2*z\"\n"
      "[sweep]\neps = [1e-1, 1e-2]\nmodes = [\"ns_contrast\"]\njobs = 3\n");

  const Grid g = build_grid(c);
  CHECK(g.nz == 17);
  CHECK(g.Lz == 2.0);

  const ScalarField rho0 = build_rho0(c, g);
  CHECK(rho0[g.idx(0, 0, 0)] == 1.0);
  CHECK(rho0[g.idx(0, 0, 16)] == 2.0);
  CHECK(rho0[g.idx(0, 0, 8)] == doctest::Approx(1.5).epsilon(1e-15));

  const FlowMapState st = build_initial_state(c, g);
  CHECK(st.t == 0.0);
  const std::size_t mid = g.idx(0, 0, 8);
  CHECK(st.eta.c[0][mid] == g.x(0));
  CHECK(st.eta.c[2][mid] ==
        doctest::Approx(g.z(8) + 0.01 * std::sin(3.14159265358979323846 * g.z(8) / 2))
            .epsilon(1e-15));
  CHECK(st.vel.c[0][mid] == doctest::Approx(0.2 * g.z(8)).epsilon(1e-15));
  CHECK(st.vel.c[1][mid] == 0.0);

  const BoundaryCondition bc = build_bc(c);
  CHECK(bc.kind == BCKind::navier_slip);
  CHECK(bc.alpha == 0.25);

  const IntegratorConfig ic = build_integrator(c);
  CHECK(ic.scheme == Scheme::rk4_explicit);
  CHECK(ic.t_final == 0.125);
  CHECK(ic.fixed_dt == 1e-3);

  const SweepPlan plan = build_sweep_plan(c);
  REQUIRE(plan.eps_list.size() == 2);
  CHECK(plan.modes == std::vector<SweepMode>{SweepMode::ns_contrast});
  CHECK(plan.bc_kinds == std::vector<BCKind>{BCKind::navier_slip});  // follows bc.kind
  CHECK(plan.jobs == 3);

  // bc.alpha defaults to material.alpha when omitted.
  const RunConfig c2 = parse_config("[material]\nalpha = 0.7\n");
  CHECK(build_bc(c2).alpha == 0.7);

  // A sign-changing reference density is rejected when realized on a grid.
  const RunConfig bad = parse_config("[material]\nrho0 = \"z - 0.5\"\n[grid]\nnz = 9\n");
  CHECK_THROWS_AS((void)build_rho0(bad, build_grid(bad)), Error);
}
