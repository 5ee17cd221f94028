#include <doctest.h>

#include <cmath>
#include <set>

#include "scopf/case_io.hpp"
#include "scopf/grid.hpp"
#include "support/cases.hpp"

using namespace scopf;
using scopf::testing::load_data_case;

namespace {

// independent reachability check for the islanding tests
bool reachable_everywhere(const Grid& g, const std::vector<int>& lines,
                          const std::vector<int>& xfmrs) {
  std::set<int> seen{g.buses.front().id};
  bool grew = true;
  while (grew) {
    grew = false;
    auto visit = [&](int a, int b) {
      if (seen.count(a) && !seen.count(b)) {
        seen.insert(b);
        grew = true;
      }
      if (seen.count(b) && !seen.count(a)) {
        seen.insert(a);
        grew = true;
      }
    };
    for (int id : lines) {
      const Line& l = g.lines[g.line_index(id)];
      visit(l.from, l.to);
    }
    for (int id : xfmrs) {
      const Transformer& t = g.transformers[g.xfmr_index(id)];
      visit(t.from, t.to);
    }
  }
  return seen.size() == g.buses.size();
}

}  // namespace

TEST_CASE("minimal two-bus document parses to the smallest legal case") {
  Grid g = load_data_case("case2.json");
  CHECK(g.buses.size() == 2);
  CHECK(g.generators.size() == 1);
  CHECK(g.lines.size() == 1);
  CHECK(g.contingencies.empty());
  // powers arrive in MW and are stored per-unit
  CHECK(g.buses[1].pLoad == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(g.generators[0].pmax == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("voltage bound violation names the offending bus") {
  std::string doc = R"({
    "baseMVA": 100.0,
    "buses": [
      {"id": 1, "gFS": 0, "bFS": 0, "vminBase": 0.9, "vmaxBase": 1.1,
       "vminCtg": 0.88, "vmaxCtg": 1.12, "pLoad": 0, "qLoad": 0},
      {"id": 2, "gFS": 0, "bFS": 0, "vminBase": 0.9, "vmaxBase": 1.1,
       "vminCtg": 0.88, "vmaxCtg": 1.12, "pLoad": 0, "qLoad": 0},
      {"id": 3, "gFS": 0, "bFS": 0, "vminBase": 1.2, "vmaxBase": 1.1,
       "vminCtg": 0.88, "vmaxCtg": 1.2, "pLoad": 0, "qLoad": 0}
    ],
    "generators": [{"id": 1, "bus": 1, "pmin": 0, "pmax": 100, "qmin": -50,
                    "qmax": 50, "alpha": 1,
                    "cost": [{"breakpoint": 0, "marginal": 10}]}],
    "lines": [
      {"id": 1, "from": 1, "to": 2, "g": 1, "b": -10, "bch": 0,
       "ratingBase": 100, "ratingCtg": 120},
      {"id": 2, "from": 2, "to": 3, "g": 1, "b": -10, "bch": 0,
       "ratingBase": 100, "ratingCtg": 120}
    ],
    "transformers": [],
    "contingencies": []
  })";
  try {
    parse_case(doc);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bus 3") != std::string::npos);
  }
}

TEST_CASE("shipped 14-bus case matches the documented shape") {
  Grid g = load_data_case("case14.json");
  CHECK(g.buses.size() == 14);
  CHECK(g.generators.size() == 5);
  int loads = 0;
  for (const Bus& b : g.buses) {
    if (b.pLoad != 0.0) ++loads;
  }
  CHECK(loads == 11);
  CHECK(g.contingencies.size() == 2);
  // generator real-power limits arrive in MW (37.96 MW -> 0.3796 p.u.)
  CHECK(g.generators[0].pmin == doctest::Approx(0.3796).epsilon(1e-12));
  CHECK(g.generators[3].pmax == doctest::Approx(1.1050).epsilon(1e-12));
}

TEST_CASE("per-unit conversion and round trip") {
  Grid g;
  g.baseMVA = 100.0;
  g.buses = {Bus{}};
  g.buses[0].id = 1;
  g.buses[0].pLoad = 100.0;
  Generator gen;
  gen.id = 1;
  gen.bus = 1;
  gen.pmax = 200.0;
  gen.cost = {{0.0, 25.0}};
  g.generators = {gen};
  Grid pu = to_per_unit(g);
  CHECK(pu.buses[0].pLoad == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pu.generators[0].pmax == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(pu.generators[0].cost[0].marginal ==
        doctest::Approx(2500.0).epsilon(1e-14));

  Grid back = from_per_unit(pu);
  CHECK(back.buses[0].pLoad == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(back.generators[0].cost[0].marginal ==
        doctest::Approx(25.0).epsilon(1e-12));

  g.baseMVA = 0.0;
  CHECK_THROWS_AS(to_per_unit(g), ValidationError);
}

TEST_CASE("per-unit round trip is the identity on a real case") {
  Grid g = load_data_case("case14.json");
  Grid rt = to_per_unit(from_per_unit(g));
  for (size_t i = 0; i < g.buses.size(); ++i) {
    CHECK(std::abs(rt.buses[i].pLoad - g.buses[i].pLoad) < 1e-12);
    CHECK(std::abs(rt.buses[i].qLoad - g.buses[i].qLoad) < 1e-12);
  }
  for (size_t i = 0; i < g.generators.size(); ++i) {
    CHECK(std::abs(rt.generators[i].pmax - g.generators[i].pmax) < 1e-12);
    CHECK(std::abs(rt.generators[i].cost[0].marginal -
                   g.generators[i].cost[0].marginal) < 1e-9);
  }
  for (size_t i = 0; i < g.lines.size(); ++i) {
    CHECK(std::abs(rt.lines[i].ratingBase - g.lines[i].ratingBase) < 1e-12);
  }
}

TEST_CASE("serialize then parse reproduces the grid") {
  Grid g = load_data_case("case14.json");
  Grid g2 = parse_case(serialize_case(g));
  REQUIRE(g2.buses.size() == g.buses.size());
  for (size_t i = 0; i < g.buses.size(); ++i) {
    CHECK(std::abs(g2.buses[i].pLoad - g.buses[i].pLoad) < 1e-12);
    CHECK(std::abs(g2.buses[i].bFS - g.buses[i].bFS) < 1e-12);
  }
  REQUIRE(g2.lines.size() == g.lines.size());
  for (size_t i = 0; i < g.lines.size(); ++i) {
    CHECK(std::abs(g2.lines[i].b - g.lines[i].b) < 1e-12);
    CHECK(std::abs(g2.lines[i].ratingCtg - g.lines[i].ratingCtg) < 1e-12);
  }
  REQUIRE(g2.transformers.size() == g.transformers.size());
  for (size_t i = 0; i < g.transformers.size(); ++i) {
    CHECK(std::abs(g2.transformers[i].tau - g.transformers[i].tau) < 1e-12);
  }
  REQUIRE(g2.contingencies.size() == g.contingencies.size());
  CHECK(g2.contingencies[0].activeLines == g.contingencies[0].activeLines);
}

TEST_CASE("unknown keys are rejected with a path") {
  std::string doc = R"({"baseMVA": 100, "buses": [], "generators": [],
                        "lines": [], "transformers": [], "contingencies": [],
                        "frequency": 60})";
  CHECK_THROWS_WITH_AS(parse_case(doc),
                       "case: unknown key 'frequency'", ParseError);
}

TEST_CASE("malformed document reports a parse error") {
  CHECK_THROWS_AS(parse_case("{ not json"), ParseError);
  CHECK_THROWS_AS(parse_case(R"({"baseMVA": "x"})"), ParseError);
}

TEST_CASE("contingency enumeration") {
  Grid g3 = load_data_case("case3.json");
  SUBCASE("all N-1 on a 3-bus 2-generator 3-line grid yields 5") {
    ContingencySpec spec;
    spec.selection = ContingencySelection::kAllN1;
    auto ctgs = enumerate_contingencies(g3, spec);
    CHECK(ctgs.size() == 5);
    std::vector<int> allGens{1, 2}, allLines{1, 2, 3};
    for (const Contingency& c : ctgs) {
      // the outaged element is missing from exactly one active set and the
      // other sets equal the base sets
      std::vector<int> expGens = allGens, expLines = allLines;
      if (c.kind == OutageKind::kGenerator) {
        expGens.erase(std::find(expGens.begin(), expGens.end(), c.element));
      } else {
        expLines.erase(std::find(expLines.begin(), expLines.end(), c.element));
      }
      CHECK(c.activeGens == expGens);
      CHECK(c.activeLines == expLines);
      CHECK(c.activeXfmrs.empty());
    }
  }
  SUBCASE("explicit selection on the 14-bus case") {
    Grid g14 = load_data_case("case14.json");
    ContingencySpec spec;
    spec.selection = ContingencySelection::kExplicit;
    spec.elements = {{OutageKind::kLine, 9},        // the 6-12 branch
                     {OutageKind::kGenerator, 5}};  // least utilized unit
    auto ctgs = enumerate_contingencies(g14, spec);
    REQUIRE(ctgs.size() == 2);
    const Line& l = g14.lines[g14.line_index(9)];
    CHECK(l.from == 6);
    CHECK(l.to == 12);
    // generator outage drops the unit from both sets
    const Contingency& cg = ctgs[1];
    CHECK(std::find(cg.activeGens.begin(), cg.activeGens.end(), 5) ==
          cg.activeGens.end());
    CHECK(std::find(cg.participating.begin(), cg.participating.end(), 5) ==
          cg.participating.end());
    CHECK(cg.participating.size() == 4);  // every surviving unit has droop
  }
  SUBCASE("explicit selection referencing a missing element fails") {
    ContingencySpec spec;
    spec.selection = ContingencySelection::kExplicit;
    spec.elements = {{OutageKind::kLine, 99}};
    CHECK_THROWS_AS(enumerate_contingencies(g3, spec), ValidationError);
  }
  SUBCASE("branch selection covers lines and transformers") {
    Grid g14 = load_data_case("case14.json");
    ContingencySpec spec;
    spec.selection = ContingencySelection::kAllBranches;
    CHECK(enumerate_contingencies(g14, spec).size() == 20);
  }
}

TEST_CASE("islanding detection") {
  SUBCASE("radial two-bus grid loses its only line") {
    Grid g = load_data_case("case2.json");
    Contingency c = make_contingency(g, 1, OutageKind::kLine, 1);
    CHECK(is_islanding(g, c));
    CHECK(reachable_everywhere(g, c.activeLines, c.activeXfmrs) == false);
  }
  SUBCASE("14-bus 6-12 branch outage keeps the grid connected") {
    Grid g = load_data_case("case14.json");
    const Contingency& c = g.contingencies[0];
    CHECK(is_islanding(g, c) == false);
    CHECK(reachable_everywhere(g, c.activeLines, c.activeXfmrs));
  }
  SUBCASE("meshed triangle survives any single line outage") {
    Grid g = load_data_case("case3.json");
    for (const Line& l : g.lines) {
      Contingency c = make_contingency(g, 10 + l.id, OutageKind::kLine, l.id);
      CHECK(is_islanding(g, c) == false);
    }
  }
}

TEST_CASE("piecewise-linear cost evaluation") {
  Generator g;
  g.cost = {{0.0, 10.0}, {1.0, 20.0}};
  CHECK(g.cost_at(0.5) == doctest::Approx(5.0));
  CHECK(g.cost_at(1.0) == doctest::Approx(10.0));
  CHECK(g.cost_at(1.5) == doctest::Approx(20.0));
}

TEST_CASE("base connectivity is enforced") {
  CHECK_THROWS_AS(load_data_case("islanded.json"), IslandedError);
}
