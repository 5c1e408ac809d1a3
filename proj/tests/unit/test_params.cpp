#include <random>

#include "doctest.h"
#include "flexfem/params.hpp"

using namespace flexfem::params;

namespace {

// Mirrors the excerpt of a lifex-style parameter file.
ParamTree listing_tree() {
  ParamTree t;
  t.enter_subsection_path("Problem / Mesh and space discretization");
  t.declare_entry("Element type", "Hex", Selection{{"Hex"}},
                  "Here goes the parameter description.");
  t.leave_subsection_path();

  t.enter_subsection_path("Problem / Linear solver");
  t.declare_entry("Type", "GMRES", Selection{{"CG", "GMRES", "BiCGStab"}});
  t.enter_subsection("GMRES");
  t.declare_entry("Max. number of temporary vectors", "30", Integer{1, 1000});
  t.leave_subsection();
  t.leave_subsection_path();

  t.enter_subsection_path("Problem / Preconditioner");
  t.declare_entry("Type", "AMG", Selection{{"AMG", "Jacobi"}});
  t.enter_subsection("AMG");
  t.declare_entry("W-cycle", "false", Bool{});
  t.set_verbosity(Verbosity::Full);
  t.declare_entry("Smoother sweeps", "2", Integer{1, 10}, "Hidden unless full.");
  t.reset_verbosity();
  t.set_verbosity(Verbosity::Minimal);
  t.declare_entry("Aggregation threshold", "1e-4", Real{0, 1});
  t.reset_verbosity();
  t.leave_subsection();
  t.leave_subsection_path();
  return t;
}

bool contains(const std::string &haystack, const std::string &needle) {
  return haystack.find(needle) != std::string::npos;
}

// Random tree generator for the property checks below.
ParamTree random_tree(std::mt19937 &rng) {
  ParamTree t;
  std::uniform_int_distribution<int> depth(0, 3), kind(0, 4), level(0, 2);
  std::uniform_int_distribution<int> count(1, 12);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Path path;
    const int d = depth(rng);
    for (int k = 0; k < d; ++k)
      path.push_back("Section " + std::to_string(k) + "." +
                     std::to_string(rng() % 2));
    const auto v = static_cast<Verbosity>(level(rng));
    const std::string name = "Entry no. " + std::to_string(i);
    switch (kind(rng)) {
      case 0: t.declare(path, name, "some text", AnyString{}, v, "free text"); break;
      case 1: t.declare(path, name, std::to_string(rng() % 100), Integer{0, 100}, v, ""); break;
      case 2: t.declare(path, name, "2.5e-3", Real{0, 1}, v, "a real\nwith two lines"); break;
      case 3: t.declare(path, name, rng() % 2 ? "true" : "false", Bool{}, v, ""); break;
      default: t.declare(path, name, "B", Selection{{"A", "B", "C"}}, v, "pick"); break;
    }
  }
  return t;
}

}  // namespace

TEST_CASE("declare rejects duplicates and invalid defaults") {
  ParamTree t;
  t.declare({"Problem"}, "Element type", "Hex", Selection{{"Hex"}},
            Verbosity::Standard, "");
  CHECK(contains(t.emit(Format::Prm, Verbosity::Standard), "set Element type = Hex"));
  CHECK_THROWS_AS(t.declare({"Problem"}, "Element type", "Hex",
                            Selection{{"Hex"}}, Verbosity::Standard, ""),
                  ParamError);
  CHECK_THROWS_AS(t.declare({"Problem"}, "N", "abc", Integer{}, Verbosity::Standard, ""),
                  ParamError);
  CHECK_THROWS_AS(t.declare({"Problem"}, "B", "yes", Bool{}, Verbosity::Standard, ""),
                  ParamError);
  CHECK_THROWS_AS(t.declare({"Problem"}, "S", "hex", Selection{{"Hex"}},
                            Verbosity::Standard, ""),
                  ParamError);
}

TEST_CASE("parse_prm on the listing excerpt") {
  const auto overlay = parse_prm(
      "subsection Linear solver\n set Type = GMRES\nend\n");
  REQUIRE(overlay.size() == 1);
  CHECK(overlay[0] == Assignment{{"Linear solver"}, "Type", "GMRES"});

  CHECK(parse_prm("").empty());
  CHECK(parse_prm("# only a comment\n\n").empty());

  auto t = listing_tree();
  t.apply(parse_prm(R"(subsection Problem
  subsection Mesh and space discretization
    # Here goes the parameter description.
    set Element type = Hex
  end
  subsection Linear solver
    set Type = GMRES

    subsection GMRES
      set Max. number of temporary vectors = 100
    end
  end
  subsection Preconditioner
    set Type = AMG
    subsection AMG
      set W-cycle = true
    end
  end
end
)"));
  t.enter_subsection_path("Problem / Linear solver / GMRES");
  CHECK(t.get_integer("Max. number of temporary vectors") == 100);
  t.leave_subsection_path();
  CHECK(t.get({"Problem", "Preconditioner", "AMG"}, "W-cycle") == "true");
}

TEST_CASE("parse_prm reports syntax errors with line numbers") {
  try {
    parse_prm("subsection A\n  bogus line\nend\n");
    FAIL("expected an error");
  } catch (const ParamError &e) {
    CHECK(contains(e.what(), "line 2"));
  }
  CHECK_THROWS_AS(parse_prm("subsection A\n set x = 1\n"), ParamError);
  CHECK_THROWS_AS(parse_prm("end\n"), ParamError);
  CHECK_THROWS_AS(parse_prm("set novalue\n"), ParamError);
}

TEST_CASE("apply rejects unknown names and invalid values atomically") {
  auto t = listing_tree();
  const Path gmres{"Problem", "Linear solver", "GMRES"};
  CHECK_THROWS_AS(t.apply(parse_prm("set Nope = 1\n")), ParamError);
  CHECK_THROWS_AS(
      t.apply({{gmres, "Max. number of temporary vectors", "50"},
               {{"Problem", "Linear solver"}, "Type", "gmres"}}),
      ParamError);
  CHECK(t.get(gmres, "Max. number of temporary vectors") == "30");
}

TEST_CASE("parse_json mirrors prm") {
  CHECK(parse_json(R"({"Problem":{"Element type":"Hex"}})") ==
        parse_prm("subsection Problem\n set Element type = Hex\nend\n"));

  auto t = listing_tree();
  t.apply(parse_json(R"({"Problem":{"Preconditioner":{"AMG":{"W-cycle":true}}}})"));
  CHECK(t.get({"Problem", "Preconditioner", "AMG"}, "W-cycle") == "true");

  ParamTree small;
  small.declare({"A"}, "Known", "1", Integer{}, Verbosity::Standard, "");
  CHECK_THROWS_AS(small.apply(parse_json(R"({"A":{"Unknown":1}})")), ParamError);
  CHECK_THROWS_AS(parse_json("{not json"), ParamError);
  CHECK_THROWS_AS(parse_json(R"({"A":[1,2]})"), ParamError);
}

TEST_CASE("emit honours verbosity") {
  const auto t = listing_tree();
  const auto minimal = t.emit(Format::Prm, Verbosity::Minimal);
  const auto standard = t.emit(Format::Prm, Verbosity::Standard);
  const auto full = t.emit(Format::Prm, Verbosity::Full);
  CHECK(contains(full, "Smoother sweeps"));
  CHECK_FALSE(contains(standard, "Smoother sweeps"));
  CHECK(contains(standard, "# Here goes the parameter description."));
  CHECK(contains(minimal, "Aggregation threshold"));
  CHECK_FALSE(contains(minimal, "Element type"));
  // Minimal output is still valid JSON.
  CHECK_NOTHROW(parse_json(t.emit(Format::Json, Verbosity::Minimal)));
}

TEST_CASE("emit -> parse -> emit is a fixpoint") {
  for (auto v : {Verbosity::Minimal, Verbosity::Standard, Verbosity::Full}) {
    for (auto f : {Format::Prm, Format::Json}) {
      auto t = listing_tree();
      const auto first = t.emit(f, v);
      t.apply(parse(first, f));
      CHECK(t.emit(f, v) == first);
    }
  }
}

TEST_CASE("apply_overrides replaces defaults") {
  auto t = listing_tree();
  const Path ls{"Problem", "Linear solver"};
  t.apply_overrides(parse_json(R"({"Problem":{"Linear solver":{"Type":"CG"}}})"));
  CHECK(t.entry(ls, "Type").default_value == "CG");
  CHECK(contains(t.emit(Format::Prm, Verbosity::Standard), "set Type = CG"));

  const auto before = t.emit(Format::Prm, Verbosity::Full);
  t.apply_overrides({});
  CHECK(t.emit(Format::Prm, Verbosity::Full) == before);

  CHECK_THROWS_AS(
      t.apply_overrides({{ls, "Type", "GMRES"},
                         {{"Problem", "Linear solver", "GMRES"},
                          "Max. number of temporary vectors", "5000"}}),
      ParamError);
  CHECK(t.emit(Format::Prm, Verbosity::Full) == before);
}

TEST_CASE("property: format equivalence, monotone verbosity, total parsing") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    ParamTree t;
    try {
      t = random_tree(rng);
    } catch (const ParamError &) {
      continue;  // generator produced a name clash; skip
    }
    Overlay previous;
    for (auto v : {Verbosity::Minimal, Verbosity::Standard, Verbosity::Full}) {
      const auto from_prm = parse_prm(t.emit(Format::Prm, v));
      const auto from_json = parse_json(t.emit(Format::Json, v));
      CHECK(from_prm == from_json);
      CHECK(from_prm == t.entries(v));
      CHECK_NOTHROW(t.apply(from_prm));
      for (const auto &a : previous)
        CHECK(std::find(from_prm.begin(), from_prm.end(), a) != from_prm.end());
      previous = from_prm;
    }
  }
}

TEST_CASE("subsection paths") {
  CHECK(split_path("Problem / Linear solver") == Path{"Problem", "Linear solver"});
  CHECK(split_path(" / A/B / ") == Path{"A", "B"});
  ParamTree t;
  t.enter_subsection_path("A / B");
  t.declare_entry("x", "1", Integer{});
  t.leave_subsection_path();
  CHECK(t.current_path().empty());
  CHECK(t.get({"A", "B"}, "x") == "1");
  CHECK_THROWS_AS(t.leave_subsection_path(), ParamError);
}

TEST_CASE("command line parsing") {
  auto o = parse_cli({"-g", "full", "-f", "p.prm"});
  REQUIRE(o.generate);
  CHECK(*o.generate == Verbosity::Full);
  CHECK(o.params_file == "p.prm");

  o = parse_cli({"-h"});
  CHECK(o.help);
  o = parse_cli({"--help"});
  CHECK(o.help);

  o = parse_cli({"-f", "p.json"});
  CHECK_FALSE(o.generate);
  CHECK(format_from_path(o.params_file) == Format::Json);

  o = parse_cli({"tutorial01", "-g", "-f", "p.prm", "-o", "out"});
  REQUIRE(o.generate);
  CHECK(*o.generate == Verbosity::Standard);
  CHECK(o.output_dir == "out");
  CHECK(o.app_args == std::vector<std::string>{"tutorial01"});

  o = parse_cli({"--generate-params", "minimal", "--params-file", "q.prm"});
  CHECK(*o.generate == Verbosity::Minimal);

  CHECK_THROWS_AS(parse_cli({"--bogus"}), ParamError);
  CHECK_THROWS_AS(parse_cli({"-g", "everything"}), ParamError);
  CHECK_THROWS_AS(format_from_path("p.xml"), ParamError);
}
