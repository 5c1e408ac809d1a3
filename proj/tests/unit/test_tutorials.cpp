#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flexfem/tutorials.hpp"

using namespace flexfem;
using namespace flexfem::tutorials;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fresh_dir(const std::string &name) {
  const auto dir = fs::path("tutorials_out") / name;
  fs::remove_all(dir);
  return dir.string();
}

double slope(double e_coarse, double e_fine, double ratio = 2.0) {
  return std::log(e_coarse / e_fine) / std::log(ratio);
}

const std::string mesh_sub = " / Mesh and space discretization";

}  // namespace

TEST_CASE("tutorial01: linear solution is reproduced exactly") {
  for (int p = 1; p <= 2; ++p) {
    Poisson app;
    configure(app, {{"Poisson / Problem", "Exact solution", "Linear"},
                    {"Poisson" + mesh_sub, "FE space degree", std::to_string(p)},
                    {"Poisson" + mesh_sub, "Number of subdivisions", "4"}});
    app.run();
    REQUIRE(app.cycles().size() == 1);
    CHECK(app.cycles()[0].linf_error <= 1e-10);
    CHECK(app.cycles()[0].l2_error <= 1e-10);
  }
}

TEST_CASE("tutorial01: h-refinement rates") {
  for (int p = 1; p <= 2; ++p) {
    Poisson app;
    configure(app, {{"Poisson / Problem", "Number of refinement cycles", "3"},
                    {"Poisson" + mesh_sub, "FE space degree", std::to_string(p)},
                    {"Poisson" + mesh_sub, "Number of subdivisions", "4"}});
    app.run();
    const auto &c = app.cycles();
    REQUIRE(c.size() == 3);
    CHECK(c[1].subdivisions == 8);
    CHECK(c[2].subdivisions == 16);
    const double l2 = slope(c[1].l2_error, c[2].l2_error);
    const double h1 = slope(c[1].h1_error, c[2].h1_error);
    CHECK(l2 == doctest::Approx(p + 1).epsilon(0.1));
    CHECK(h1 == doctest::Approx(p).epsilon(0.1));
  }
}

TEST_CASE("tutorial01: threaded assembly matches serial") {
  const auto m = mesh::generate_box(2, {0, 0, 0}, {1, 1, 0}, {12, 12, 1});
  const fem::FeSpace space(m, 2);
  const auto serial = Poisson::assemble(space, PoissonSolution::Sine, 1);
  for (int threads : {2, 3, 7}) {
    const auto par = Poisson::assemble(space, PoissonSolution::Sine, threads);
    REQUIRE(par.matrix.nnz() == serial.matrix.nnz());
    for (std::size_t k = 0; k < serial.matrix.nnz(); ++k) {
      const double a = serial.matrix.values()[k], b = par.matrix.values()[k];
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
    for (std::size_t i = 0; i < serial.rhs.size(); ++i)
      CHECK(std::abs(serial.rhs[i] - par.rhs[i]) <= 1e-12 * std::max(1.0, std::abs(serial.rhs[i])));
  }
}

TEST_CASE("tutorial02: Newton from zero reaches the constant solution") {
  NonlinearElliptic app;
  configure(app);
  app.run();
  const auto &r = app.report();
  CHECK(r.converged);
  CHECK(r.iterations <= 4);
  CHECK(app.l2_error() < 1e-12);
  for (double v : app.solution()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tutorial02: quadratic decay and chord comparison") {
  NonlinearElliptic exact;
  configure(exact, {{"Nonlinear elliptic / Problem", "Exact solution", "Sine"},
                    {"Nonlinear elliptic / Problem", "Initial guess", "-2"}});
  exact.run();
  const auto &e = exact.report().residual_norms;
  REQUIRE(e.size() >= 5);
  std::vector<double> ratios;
  for (int k = 1; k <= 3; ++k) ratios.push_back(e[k + 1] / (e[k] * e[k]));
  for (double r : ratios) CHECK(r < 1.0);
  CHECK(*std::max_element(ratios.begin(), ratios.end()) <
        10.0 * *std::min_element(ratios.begin(), ratios.end()));
  CHECK(exact.l2_error() < 5e-3);

  NonlinearElliptic chord;
  configure(chord, {{"Nonlinear elliptic / Problem", "Exact solution", "Sine"},
                    {"Nonlinear elliptic / Non-linear solver", "Type", "FrozenJacobian"},
                    {"Nonlinear elliptic / Non-linear solver", "Maximum number of iterations", "200"}});
  chord.run();
  CHECK(chord.report().converged);
  CHECK(chord.report().iterations > exact.report().iterations);
  CHECK(chord.report().jacobian_assemblies == 1);
  double diff = 0.0;
  for (std::size_t i = 0; i < chord.solution().size(); ++i)
    diff = std::max(diff, std::abs(chord.solution()[i] - exact.solution()[i]));
  CHECK(diff < 1e-9);
}

TEST_CASE("tutorial03: stationary solution keeps a constant error") {
  Heat app;
  configure(app, {{"Heat / Problem", "Time profile", "Stationary"},
                  {"Heat" + mesh_sub, "Number of subdivisions", "4"},
                  {"Heat / Time", "Final time", "0.5"},
                  {"Heat / Time", "Time step", "0.1"}});
  app.run();
  REQUIRE(app.steps().size() == 5);
  for (const auto &s : app.steps()) CHECK(s.l2_error < 1e-11);
}

TEST_CASE("tutorial03: temporal rates with exact bootstrap") {
  for (int k = 1; k <= 3; ++k) {
    std::vector<double> err;
    for (double dt : {0.1, 0.05, 0.025}) {
      Heat app;
      configure(app, {{"Heat" + mesh_sub, "Number of subdivisions", "3"},
                      {"Heat / Time", "BDF order", std::to_string(k)},
                      {"Heat / Time", "Time step", params::format_real(dt)}});
      app.run();
      double e = 0.0;
      for (const auto &st : app.steps()) e = std::max(e, st.l2_error);
      err.push_back(e);
    }
    CHECK(slope(err[1], err[2]) == doctest::Approx(k).epsilon(0.1 / k));
  }
}

TEST_CASE("tutorial03: restart reproduces solver inputs bit for bit") {
  const auto dir = fresh_dir("heat_restart");
  const std::vector<Setting> base{{"Heat" + mesh_sub, "Number of subdivisions", "4"},
                                  {"Heat / Time", "BDF order", "3"},
                                  {"Heat / Output", "Checkpoint period", "10"}};
  Heat full;
  full.set_output_dir(dir);
  configure(full, base);
  full.run();
  REQUIRE(fs::exists(fs::path(dir) / "checkpoint_10.fxcp"));
  REQUIRE(fs::exists(fs::path(dir) / "checkpoint_20.fxcp"));

  auto restart_settings = base;
  restart_settings.push_back({"Heat / Problem", "Restart file", dir + "/checkpoint_10.fxcp"});
  Heat resumed;
  configure(resumed, restart_settings);
  resumed.run();
  CHECK(resumed.first_step() == 11);
  REQUIRE(resumed.solver_rhs().size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(resumed.solver_rhs()[i] == full.solver_rhs()[10 + i]);
    CHECK(resumed.solver_guess()[i] == full.solver_guess()[10 + i]);
  }
  CHECK(resumed.solution() == full.solution());

  // Inconsistent settings are rejected.
  auto bad = restart_settings;
  bad.push_back({"Heat / Time", "Time step", "0.025"});
  Heat wrong;
  configure(wrong, bad);
  CHECK_THROWS_AS(wrong.run(), Error);
}

TEST_CASE("tutorial03: stop after a step") {
  Heat app;
  configure(app, {{"Heat" + mesh_sub, "Number of subdivisions", "2"},
                  {"Heat / Problem", "Stop after step", "3"}});
  app.run();
  REQUIRE(app.steps().size() == 3);
  CHECK(app.steps().back().time == doctest::Approx(0.15));
}

TEST_CASE("tutorial04: hand-written and AD Jacobians agree") {
  for (int p = 1; p <= 2; ++p) {
    NonlinearParabolic app;
    configure(app, {{"Nonlinear parabolic" + mesh_sub, "Number of subdivisions", "4"},
                    {"Nonlinear parabolic" + mesh_sub, "FE space degree", std::to_string(p)}});
    app.setup();
    DVector u(app.space().n_dofs());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(0.7 * double(i)) + 0.3;
    const auto hand = app.assemble(u, true, JacobianMode::Handwritten);
    const auto ad = app.assemble(u, true, JacobianMode::AutoDiff);
    REQUIRE(hand.jacobian);
    REQUIRE(ad.jacobian);
    const auto &a = hand.jacobian->values(), &b = ad.jacobian->values();
    REQUIRE(a.size() == b.size());
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < a.size(); ++k)
      CHECK(std::abs(a[k] - b[k]) <= 1e-12 * std::max(std::abs(a[k]), 1e-3 * scale));
    CHECK(hand.residual == ad.residual);
  }
}

TEST_CASE("tutorial04: both Jacobian modes give the same iterates") {
  const std::vector<Setting> s{{"Nonlinear parabolic" + mesh_sub, "Number of subdivisions", "6"},
                               {"Nonlinear parabolic / Time", "Final time", "0.3"}};
  NonlinearParabolic hand;
  configure(hand, s);
  hand.run();
  NonlinearParabolic ad("Nonlinear parabolic", JacobianMode::AutoDiff);
  configure(ad, s);
  ad.run();
  REQUIRE(hand.reports().size() == ad.reports().size());
  for (std::size_t k = 0; k < hand.reports().size(); ++k) {
    const auto &rh = hand.reports()[k].residual_norms, &ra = ad.reports()[k].residual_norms;
    REQUIRE(rh.size() == ra.size());
    for (std::size_t i = 0; i < rh.size(); ++i)
      CHECK(std::abs(rh[i] - ra[i]) <= 1e-10 * std::max(1.0, rh[i]));
  }
  for (std::size_t i = 0; i < hand.solution().size(); ++i)
    CHECK(std::abs(hand.solution()[i] - ad.solution()[i]) <= 1e-10);
}

TEST_CASE("tutorial04: zero data gives the zero solution") {
  NonlinearParabolic app;
  configure(app, {{"Nonlinear parabolic / Problem", "Exact solution", "Zero"},
                  {"Nonlinear parabolic" + mesh_sub, "Number of subdivisions", "4"},
                  {"Nonlinear parabolic / Time", "Final time", "0.3"}});
  app.run();
  for (double v : app.solution()) CHECK(v == 0.0);
  for (const auto &r : app.reports()) CHECK(r.iterations == 0);
}

TEST_CASE("tutorial06: monolithic is exact for the linear-in-time solution") {
  for (auto scheme : {CouplingScheme::Monolithic, CouplingScheme::Partitioned}) {
    ParabolicSystem app("Parabolic system", scheme);
    configure(app, {{"Parabolic system" + mesh_sub, "Dimension", "2"},
                    {"Parabolic system" + mesh_sub, "Number of subdivisions", "4"},
                    {"Parabolic system / Time", "Final time", "0.5"}});
    app.run();
    CHECK(app.scheme() == scheme);
    REQUIRE(app.steps().size() == 5);
    const auto &last = app.steps().back();
    CHECK(last.u_l2_error < 1e-10);
    if (scheme == CouplingScheme::Monolithic)
      CHECK(last.v_l2_error < 1e-10);
    else
      CHECK(last.v_l2_error > 1e-6);
  }
}

TEST_CASE("tutorial06: partitioned splitting error is first order") {
  std::vector<double> gap;
  for (double dt : {0.1, 0.05}) {
    std::vector<DVector> v;
    for (auto scheme : {CouplingScheme::Monolithic, CouplingScheme::Partitioned}) {
      ParabolicSystem app("Parabolic system", scheme);
      configure(app, {{"Parabolic system" + mesh_sub, "Dimension", "2"},
                      {"Parabolic system" + mesh_sub, "Number of subdivisions", "4"},
                      {"Parabolic system / Time", "Time step", params::format_real(dt)}});
      app.run();
      v.push_back(app.v());
    }
    double g = 0.0;
    for (std::size_t i = 0; i < v[0].size(); ++i) g = std::max(g, std::abs(v[0][i] - v[1][i]));
    gap.push_back(g);
  }
  CHECK(slope(gap[0], gap[1]) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("tutorial06: spatial rates for the trigonometric solution") {
  std::vector<double> eu, ev;
  for (int n : {4, 8}) {
    ParabolicSystem app("Parabolic system", CouplingScheme::Monolithic);
    configure(app, {{"Parabolic system / Problem", "Exact solution", "Trigonometric"},
                    {"Parabolic system" + mesh_sub, "Dimension", "2"},
                    {"Parabolic system" + mesh_sub, "Number of subdivisions", std::to_string(n)},
                    {"Parabolic system / Time", "BDF order u", "3"},
                    {"Parabolic system / Time", "Time step", "0.02"},
                    {"Parabolic system / Time", "Final time", "0.2"}});
    app.run();
    eu.push_back(app.steps().back().u_l2_error);
    ev.push_back(app.steps().back().v_l2_error);
  }
  CHECK(slope(eu[0], eu[1]) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(slope(ev[0], ev[1]) == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("tutorial07: uniform state is a fixed point") {
  CahnHilliard app;
  configure(app, {{"Cahn-Hilliard / Problem", "Initial condition", "Uniform"},
                  {"Cahn-Hilliard" + mesh_sub, "Number of subdivisions", "8"}});
  app.run();
  CHECK(app.reached_steady_state());
  REQUIRE(app.steps().size() == 1);
  for (std::size_t k = 0; k < app.space().n_nodes(); ++k) {
    CHECK(std::abs(app.solution()[2 * k] - 0.5) <= 1e-12);
    CHECK(std::abs(app.solution()[2 * k + 1]) <= 1e-12);
  }
}

TEST_CASE("tutorial07: mass is conserved and the run is reproducible") {
  const std::vector<Setting> s{{"Cahn-Hilliard" + mesh_sub, "Number of subdivisions", "12"},
                               {"Cahn-Hilliard / Time", "Maximum number of steps", "15"}};
  std::vector<std::string> csv;
  for (int run = 0; run < 2; ++run) {
    CahnHilliard app;
    app.set_output_dir(fresh_dir("ch_" + std::to_string(run)));
    configure(app, s);
    app.run();
    REQUIRE(app.steps().size() == 15);
    for (const auto &st : app.steps()) CHECK(st.mass_drift <= 1e-10);
    CHECK(app.steps().back().energy < app.steps().front().energy);
    CHECK(app.contour_levels() == std::vector<double>{0.35, 0.5, 0.65});
    REQUIRE(app.contours().size() == 3);
    csv.push_back(slurp(app.output_dir() + "/norms.csv"));
    CHECK(fs::exists(app.output_dir() + "/contours_15.vtk"));
    CHECK(fs::exists(app.output_dir() + "/solution_15.vtk"));
  }
  CHECK(!csv[0].empty());
  CHECK(csv[0] == csv[1]);

  // A different seed changes the initial state.
  CahnHilliard a, b;
  configure(a, {{"Cahn-Hilliard / Time", "Maximum number of steps", "1"},
                {"Cahn-Hilliard" + mesh_sub, "Number of subdivisions", "4"}});
  configure(b, {{"Cahn-Hilliard / Time", "Maximum number of steps", "1"},
                {"Cahn-Hilliard" + mesh_sub, "Number of subdivisions", "4"},
                {"Cahn-Hilliard / Problem", "Random seed", "7"}});
  a.run();
  b.run();
  CHECK(a.initial_state() != b.initial_state());
  for (std::size_t k = 0; k < a.space().n_nodes(); ++k)
    CHECK(std::abs(a.initial_state()[2 * k] - 0.5) <= 0.01);
}

TEST_CASE("tutorial07: contour levels are parsed") {
  CahnHilliard app;
  configure(app, {{"Cahn-Hilliard / Output", "Contour levels", "0.2,0.8"}});
  CHECK(app.contour_levels() == std::vector<double>{0.2, 0.8});
  CahnHilliard bad;
  CHECK_THROWS_AS(configure(bad, {{"Cahn-Hilliard / Output", "Contour levels", "0.2, x"}}),
                  std::exception);
}

TEST_CASE("transmission: matches the single-domain solution") {
  Transmission st;
  configure(st);
  st.run();
  CHECK(st.report().converged);
  CHECK(st.monodomain_error() < 1e-8);

  Transmission ai;
  configure(ai, {{"Transmission / Coupling / Acceleration", "Type", "Aitken"}});
  ai.run();
  CHECK(ai.report().converged);
  CHECK(ai.monodomain_error() < 1e-8);
  CHECK(ai.report().iterations < st.report().iterations);

  // Symmetric split: symmetric trace.
  Transmission sym;
  configure(sym, {{"Transmission / Problem", "Interface position", "1"}});
  sym.run();
  const auto &t = sym.trace();
  for (std::size_t k = 0; k < t.size(); ++k)
    CHECK(t[k] == doctest::Approx(t[t.size() - 1 - k]).epsilon(1e-9));

  Transmission off;
  configure(off, {{"Transmission / Problem", "Interface position", "1.03"}});
  CHECK_THROWS_AS(off.run(), Error);
}

TEST_CASE("every application round-trips its parameters at all verbosities") {
  using params::Format;
  using params::Verbosity;
  for (const auto &name : app_names()) {
    CAPTURE(name);
    auto app = make_app(name);
    params::ParamTree tree;
    app->declare_parameters(tree);
    for (auto v : {Verbosity::Minimal, Verbosity::Standard, Verbosity::Full})
      for (auto f : {Format::Prm, Format::Json}) {
        const std::string text = tree.emit(f, v);
        params::ParamTree again;
        app->declare_parameters(again);
        again.apply(params::parse(text, f));
        CHECK(again.emit(f, v) == text);
        CHECK(again.emit(Format::Prm, Verbosity::Full) == tree.emit(Format::Prm, Verbosity::Full));
        auto fresh = make_app(name);
        fresh->parse_parameters(again);
      }
  }
}

TEST_CASE("declaring parameters leaves the model untouched") {
  Poisson app;
  params::ParamTree a, b;
  app.declare_parameters(a);
  app.declare_parameters(b);
  CHECK(a.emit(params::Format::Prm, params::Verbosity::Full) ==
        b.emit(params::Format::Prm, params::Verbosity::Full));
  CHECK_THROWS(make_app("tutorial99"));
}

TEST_CASE("two identical runs write identical CSV files") {
  std::vector<std::string> out;
  for (int run = 0; run < 2; ++run) {
    Heat app;
    app.set_output_dir(fresh_dir("det_" + std::to_string(run)));
    configure(app, {{"Heat" + mesh_sub, "Number of subdivisions", "3"},
                    {"Heat / Output", "VTK output period", "5"}});
    app.run();
    out.push_back(slurp(app.output_dir() + "/norms.csv"));
    CHECK(fs::exists(app.output_dir() + "/solution_5.vtk"));
    CHECK(fs::exists(app.output_dir() + "/solution_20.vtk"));
  }
  CHECK(out[0].find("step,time,l2_error") == 0);
  CHECK(out[0] == out[1]);
}

TEST_CASE("application context is a single instance") {
  CHECK(!AppContext::exists());
  CHECK_THROWS_AS(AppContext::instance(), Error);
  {
    params::CliOptions cli;
    cli.output_dir = "ctx_dir";
    AppContext ctx(cli);
    CHECK(AppContext::exists());
    CHECK(&AppContext::instance() == &ctx);
    CHECK_THROWS_AS(AppContext{cli}, Error);
    Poisson app;
    CHECK(app.output_dir() == "ctx_dir");
  }
  CHECK(!AppContext::exists());
  Poisson detached;
  CHECK(detached.output_dir().empty());
}

TEST_CASE("command line") {
  std::ostringstream out, err;
  const auto run = [&](std::vector<std::string> args) {
    out.str("");
    err.str("");
    return cli_main(args, out, err);
  };

  CHECK(run({"--help"}) == 0);
  CHECK(out.str().find("tutorial07") != std::string::npos);

  CHECK(run({}) == 2);
  CHECK(run({"tutorial99"}) == 2);
  CHECK(err.str().find("unknown application") != std::string::npos);
  CHECK(err.str().find("usage") != std::string::npos);
  CHECK(run({"tutorial01", "tutorial02"}) == 2);
  CHECK(run({"tutorial01", "--bogus"}) == 2);

  fs::remove("cli_p.prm");
  fs::remove_all("output");
  CHECK(run({"tutorial01", "-g", "-f", "cli_p.prm"}) == 0);
  REQUIRE(fs::exists("cli_p.prm"));
  CHECK(!fs::exists("output"));
  const auto standard = slurp("cli_p.prm");
  CHECK(standard.find("Number of subdivisions") != std::string::npos);
  CHECK(standard.find("Number of threads") == std::string::npos);
  CHECK(run({"tutorial01", "-g", "full", "-f", "cli_p.prm"}) == 0);
  CHECK(slurp("cli_p.prm").find("Number of threads") != std::string::npos);
  CHECK(run({"tutorial01", "-g", "minimal", "-f", "cli_p.json"}) == 0);
  CHECK(slurp("cli_p.json").find('{') != std::string::npos);

  fs::remove_all("cli_out");
  CHECK(run({"tutorial01", "-f", "cli_p.json", "-o", "cli_out"}) == 0);
  CHECK(fs::exists("cli_out/norms.csv"));
  CHECK(fs::exists("cli_out/solution_0.vtk"));

  CHECK(run({"mesh-info"}) == 0);
  CHECK(out.str().find("cells            64") != std::string::npos);

  {
    std::ofstream("cli_bad.prm") << "subsection Poisson\n  subsection Problem\n    set Exact solution = Cubic\n  end\nend\n";
  }
  CHECK(run({"tutorial01", "-f", "cli_bad.prm"}) == 1);
  CHECK(err.str().find("error:") == 0);
  CHECK(run({"tutorial01", "-f", "missing.prm"}) == 1);
  CHECK(!AppContext::exists());
}
