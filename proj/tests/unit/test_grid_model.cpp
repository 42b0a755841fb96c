#include "gridthreat/error.hpp"
#include "gridthreat/fixtures.hpp"
#include "gridthreat/grid_model.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>

using namespace gridthreat;

namespace {

std::string two_bus(const std::string& line_record, const std::string& measurements) {
  return "# Topology (Line) Information\n" + line_record +
         "\n"
         "# Bus Types\n1 1 0\n2 0 1\n"
         "# Generator Information\n1 1 0 20 220\n"
         "# Load Information\n2 0.5 0.8 0.1\n"
         "# Measurement Information\n" +
         measurements +
         "# Cost Constraint\n-1\n"
         "# Attacker's Resource Limitation\n4 2\n"
         "# Maximum percent of delta load\n20\n"
         "# Overloading amount\n5 5\n";
}

const std::string kMeas = "1 1 0 1\n2 1 0 1\n3 1 0 1\n4 1 0 1\n";

}  // namespace

TEST_CASE("line record fields map to id, ends, admittance, capacity") {
  const GridCase g = parse_case(two_bus("1 1 2 16.90 0.65", kMeas));
  REQUIRE(g.lines.size() == 1);
  CHECK(g.lines[0] == Line{1, 1, 2, 16.90, 0.65});
}

TEST_CASE("percentages are stored as fractions") {
  const GridCase g = parse_case(two_bus("1 1 2 5 1", kMeas));
  CHECK(g.attacker.delta_b == Catch::Approx(0.20));
  CHECK(g.attacker.delta_l == Catch::Approx(0.05));
  CHECK(g.attacker.target_line_fraction == Catch::Approx(0.05));
  CHECK(g.attacker.max_measurements == 4);
  CHECK(g.attacker.max_buses == 2);
  CHECK(g.attacker.budget_from_scopf());
  CHECK(g.attacker.target_lines(20) == 1);
  CHECK(g.attacker.target_lines(1) == 1);
}

TEST_CASE("percent text in exponent form") {
  std::string text = two_bus("1 1 2 5 1", kMeas);
  text.replace(text.find("load\n20\n"), 8, "load\n1.5e1\n");
  text.replace(text.find("\n5 5\n"), 5, "\n2E+0 5\n");
  const GridCase g = parse_case(text);
  CHECK(g.attacker.delta_b == 0.15);
  CHECK(g.attacker.delta_l == 0.02);
}

TEST_CASE("trailing flags on line records are ignored") {
  const GridCase g = parse_case(two_bus("1 1 2 5 1 0 1", kMeas));
  CHECK(g.lines[0].capacity == 1.0);
}

TEST_CASE("measurement count must equal 2l + b") {
  CHECK_THROWS_AS(parse_case(two_bus("1 1 2 5 1", "1 1 0 1\n2 1 0 1\n3 1 0 1\n")),
                  ValidationError);
}

TEST_CASE("malformed records report line and section") {
  try {
    parse_case(two_bus("1 1 two 5 1", kMeas));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK_FALSE(e.section().empty());
  }
}

TEST_CASE("dangling bus references are rejected") {
  CHECK_THROWS_AS(parse_case(two_bus("1 1 3 5 1", kMeas)), ValidationError);
}

TEST_CASE("disconnected line graphs are rejected by name") {
  GridCase g = load_fixture("ieee14").grid;
  // Bus 8 hangs off a single line; moving that line elsewhere strands it.
  for (auto& ln : g.lines) {
    if (ln.from_bus == 8 || ln.to_bus == 8) {
      ln.from_bus = 1;
      ln.to_bus = 5;
    }
  }
  try {
    validate(g);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("disconnected") != std::string::npos);
  }
}

TEST_CASE("a case with no loads has zero total load") {
  std::string text = two_bus("1 1 2 5 1", kMeas);
  text.replace(text.find("2 0 1\n"), 6, "2 0 0\n");
  text.replace(text.find("2 0.5 0.8 0.1\n"), 14, "");
  const GridCase g = parse_case(text);
  CHECK(g.load_vector().sum() == 0.0);
}

TEST_CASE("one bus and no lines is rejected before serialization") {
  GridCase g;
  g.buses.push_back({1, true, false});
  g.generators.push_back({1, 1, 0, 0, 1});
  g.measurements.push_back({1, true, false, true});
  CHECK_THROWS_AS(serialize_case(g), ValidationError);
}

TEST_CASE("serialize then parse is the identity on the fixtures") {
  for (const auto& name : fixture_names()) {
    const GridCase g = load_fixture(name).grid;
    const std::string text = serialize_case(g);
    CHECK(parse_case(text) == g);
    CHECK(serialize_case(parse_case(text)) == text);
  }
}

TEST_CASE("round trip holds for perturbed cases") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    GridCase g = load_fixture("ieee14").grid;
    for (auto& ln : g.lines) {
      ln.admittance = u(rng);
      ln.capacity = u(rng) / 7.0;
    }
    g.attacker.delta_b = std::uniform_real_distribution<double>(0, 1)(rng);
    g.attacker.delta_l = std::uniform_real_distribution<double>(0, 1)(rng);
    g.attacker.cost_budget = u(rng) * 10;
    g.slack_bus = 1 + static_cast<int>(rng() % 14);
    for (auto& m : g.measurements) m.secured = rng() % 4 == 0;
    CHECK(parse_case(serialize_case(g)) == g);
  }
}

TEST_CASE("slack override survives a round trip") {
  GridCase g = load_fixture("3bus").grid;
  g.slack_bus = 3;
  CHECK(parse_case(serialize_case(g)).slack_bus == 3);
}

TEST_CASE("measurement kinds follow the index layout") {
  const GridCase g = load_fixture("3bus").grid;
  CHECK(g.measurement_kind(1) == MeasurementKind::ForwardFlow);
  CHECK(g.measurement_kind(4) == MeasurementKind::BackwardFlow);
  CHECK(g.measurement_kind(7) == MeasurementKind::Consumption);
  CHECK(g.measurement_element(5) == 2);
  CHECK(g.measurement_element(9) == 3);
  // line 3 runs 2 -> 3: forward metered at 2, backward at 3
  CHECK(g.metering_bus(3) == 2);
  CHECK(g.metering_bus(6) == 3);
  CHECK(g.metering_bus(8) == 2);
}

TEST_CASE("bridges on a radial chain") {
  GridCase g;
  for (int j = 1; j <= 3; ++j) g.buses.push_back({j, false, false});
  g.lines = {{1, 1, 2, 1, 1}, {2, 2, 3, 1, 1}};
  CHECK(find_bridges(g) == std::vector<bool>{true, true});
  CHECK(find_bridges(load_fixture("3bus").grid) == std::vector<bool>{false, false, false});
}

TEST_CASE("format_number round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    CHECK(std::stod(format_number(x)) == x);
  }
  CHECK(format_number(0.65) == "0.65");
  CHECK(format_number(20.0) == "20");
}
