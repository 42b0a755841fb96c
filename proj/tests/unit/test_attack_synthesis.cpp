#include "gridthreat/attack_synthesis.hpp"
#include "gridthreat/error.hpp"
#include "gridthreat/fixtures.hpp"
#include "gridthreat/scopf.hpp"
#include "gridthreat/state_estimation.hpp"
#include "gridthreat/verification.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <set>

using namespace gridthreat;

namespace {

struct Setup {
  GridCase grid;
  ScopfSolution pre;
};

Setup ieee14(int max_buses) {
  Setup s{load_fixture("ieee14").grid, {}};
  s.grid.attacker.max_buses = max_buses;
  s.pre = solve_scopf(s.grid, s.grid.load_vector());
  return s;
}

// Structural checks written against the case data directly.
void check_vector(const GridCase& g, const ScopfSolution& pre, const AttackVector& v,
                  const SynthesisGoal& goal) {
  const int l = g.num_lines();
  int altered = 0;
  std::set<int> meter_buses;
  for (int idx = 1; idx <= g.num_measurements(); ++idx) {
    if (!v.altered[idx - 1]) continue;
    ++altered;
    const MeasurementConfig& m = g.measurements[idx - 1];
    CHECK(m.taken);
    CHECK(m.accessible);
    CHECK_FALSE(m.secured);
    int bus;
    if (idx <= l) {
      bus = g.lines[idx - 1].from_bus;
    } else if (idx <= 2 * l) {
      bus = g.lines[idx - l - 1].to_bus;
    } else {
      bus = idx - 2 * l;
    }
    meter_buses.insert(bus);
    CHECK(v.compromised[bus - 1]);
  }
  CHECK(altered <= g.attacker.max_measurements);
  CHECK(v.compromised_count() <= g.attacker.max_buses);
  for (int b : meter_buses) {
    CHECK(std::find(v.attacked_subset.begin(), v.attacked_subset.end(), b) !=
          v.attacked_subset.end());
  }
  CHECK(std::abs(v.delta_bus.sum()) < 1e-8);
  const Eigen::VectorXd load = g.load_vector();
  for (int j = 0; j < g.num_buses(); ++j) {
    CHECK(std::abs(v.delta_bus[j]) <= g.attacker.delta_b * load[j] + 1e-8);
    CHECK(v.corrupted[j] == (std::abs(v.delta_theta[j]) > 1e-9));
  }
  // stealth: a from the line and bus deltas, c from the angle shift
  const std::vector<int> taken = taken_indices(g);
  Eigen::VectorXd a(taken.size());
  for (size_t r = 0; r < taken.size(); ++r) {
    const int idx = taken[r];
    a[r] = idx <= l ? v.delta_line[idx - 1]
           : idx <= 2 * l ? -v.delta_line[idx - l - 1]
                          : v.delta_bus[idx - 2 * l - 1];
  }
  const Eigen::VectorXd c = reduce_state(g, v.delta_theta);
  CHECK(stealth_check(g, simulate_measurements(g, pre.flows.theta), a, c));
  // corrupted dispatch: balanced on attacked loads, secure in the EMS's eyes, within budget
  CHECK(v.corrupted_dispatch.sum() == Catch::Approx(v.attacked_load.sum()));
  CHECK(oracle::worst_violation(g, v.corrupted_dispatch - v.attacked_load) < 1e-6);
  CHECK(oracle::cost(g, v.corrupted_dispatch) <= goal.cost_budget + 1e-6);
  // real loads under that dispatch: base case fine, enough overloads
  const Eigen::VectorXd real = v.corrupted_dispatch - load;
  const Eigen::VectorXd base = oracle::flows(g, real);
  for (const auto& ln : g.lines) CHECK(std::abs(base[ln.id - 1]) <= ln.capacity + 1e-6);
  int overloads = 0;
  for (const auto& out : g.lines) {
    if (!oracle::connected_without(g, out.id)) continue;
    const Eigen::VectorXd f = oracle::flows(g, real, out.id);
    for (const auto& ln : g.lines) {
      if (ln.id != out.id && std::abs(f[ln.id - 1]) > (1 + goal.overload_margin) * ln.capacity) {
        ++overloads;
      }
    }
  }
  CHECK(overloads >= goal.min_overload_pairs);
  CHECK(static_cast<int>(v.overload_pairs.size()) == overloads);
}

}  // namespace

TEST_CASE("14-bus with two buses is Unsat over every subset") {
  const Setup s = ieee14(2);
  const SynthesisResult r = synthesize(s.grid, s.pre, goal_from_case(s.grid, s.pre));
  CHECK_FALSE(r.sat);
  CHECK_FALSE(r.witness);
  CHECK(r.certificate.subsets_explored == 1 + 14 + 91);
  CHECK(enumerate_attack_space(s.grid, s.pre, goal_from_case(s.grid, s.pre)).empty());
}

TEST_CASE("14-bus with three buses is Sat and the witness holds up") {
  const Setup s = ieee14(3);
  const SynthesisGoal goal = goal_from_case(s.grid, s.pre);
  const SynthesisResult r = synthesize(s.grid, s.pre, goal);
  REQUIRE(r.sat);
  check_vector(s.grid, s.pre, *r.witness, goal);
  CHECK(r.witness->corrupted_cost <= s.pre.cost + 1e-6);
}

TEST_CASE("every enumerated vector satisfies the model") {
  const Setup s = ieee14(4);
  const SynthesisGoal goal = goal_from_case(s.grid, s.pre);
  const auto all = enumerate_attack_space(s.grid, s.pre, goal);
  REQUIRE_FALSE(all.empty());
  for (const auto& v : all) check_vector(s.grid, s.pre, v, goal);
  const AttackSpaceSummary sum = summarize_attack_space(s.grid, s.pre, goal);
  CHECK(sum.count == static_cast<long long>(all.size()));
}

TEST_CASE("enumeration contains the synthesize witness") {
  const Setup s = ieee14(3);
  const SynthesisGoal goal = goal_from_case(s.grid, s.pre);
  const AttackVector w = *synthesize(s.grid, s.pre, goal).witness;
  bool found = false;
  for (const auto& v : enumerate_attack_space(s.grid, s.pre, goal)) {
    found = found || (v.attacked_subset == w.attacked_subset && v.targets == w.targets &&
                      v.target_signs == w.target_signs);
  }
  CHECK(found);
}

TEST_CASE("zero load shift leaves nothing to attack") {
  for (const auto& name : fixture_names()) {
    GridCase g = load_fixture(name).grid;
    g.attacker.delta_b = 0;
    g.attacker.max_buses = 4;
    const ScopfSolution pre = solve_scopf(g, g.load_vector());
    CHECK_FALSE(synthesize(g, pre, goal_from_case(g, pre)).sat);
  }
}

TEST_CASE("impossible goals are errors") {
  Setup s = ieee14(3);
  SynthesisGoal goal = goal_from_case(s.grid, s.pre);
  goal.min_overload_pairs = 20 * 19 + 1;
  CHECK_THROWS_AS(synthesize(s.grid, s.pre, goal), ValidationError);
  goal.min_overload_pairs = 0;
  CHECK_THROWS_AS(synthesize(s.grid, s.pre, goal), ValidationError);
  s.grid.attacker.max_measurements = 0;
  CHECK_THROWS_AS(synthesize(s.grid, s.pre, goal_from_case(s.grid, s.pre)), ValidationError);
}

TEST_CASE("a vector found with k buses still validates with k + 1") {
  const Setup s = ieee14(3);
  const SynthesisGoal goal = goal_from_case(s.grid, s.pre);
  GridCase wider = s.grid;
  wider.attacker.max_buses = 4;
  const auto at4 = enumerate_attack_space(wider, s.pre, goal);
  for (const auto& v : enumerate_attack_space(s.grid, s.pre, goal)) {
    CHECK_NOTHROW(check_attack_invariants(wider, v));
    bool present = false;
    for (const auto& u : at4) {
      present = present || (u.attacked_subset == v.attacked_subset && u.targets == v.targets);
    }
    CHECK(present);
  }
}

TEST_CASE("attack space grows with the load shift limit") {
  Setup s = ieee14(4);
  long long prev = -1;
  for (double db : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    s.grid.attacker.delta_b = db;
    const long long n = summarize_attack_space(s.grid, s.pre, goal_from_case(s.grid, s.pre)).count;
    CHECK(n >= prev);
    prev = n;
  }
  CHECK(prev > 0);
}

TEST_CASE("secured or inaccessible measurements are never altered") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 8; ++trial) {
    Setup s = ieee14(4);
    for (auto& m : s.grid.measurements) {
      m.secured = rng() % 10 == 0;
      m.accessible = rng() % 10 != 0;
    }
    const SynthesisGoal goal = goal_from_case(s.grid, s.pre);
    for (const auto& v : enumerate_attack_space(s.grid, s.pre, goal)) check_vector(s.grid, s.pre, v, goal);
  }
}

TEST_CASE("measurement budget is respected") {
  Setup s = ieee14(4);
  for (int budget : {6, 8, 10}) {
    s.grid.attacker.max_measurements = budget;
    const SynthesisGoal goal = goal_from_case(s.grid, s.pre);
    for (const auto& v : enumerate_attack_space(s.grid, s.pre, goal)) {
      CHECK(v.altered_count() <= budget);
    }
  }
}

TEST_CASE("worker count does not change results") {
  const Setup s = ieee14(4);
  const SynthesisGoal goal = goal_from_case(s.grid, s.pre);
  const AttackSpaceSummary one = summarize_attack_space(s.grid, s.pre, goal, {1});
  const AttackSpaceSummary four = summarize_attack_space(s.grid, s.pre, goal, {4});
  CHECK(one.count == four.count);
  CHECK(one.bus_frequency == four.bus_frequency);
  CHECK(one.heatmap == four.heatmap);
}

TEST_CASE("load-shift vectors reproduce the 3-bus replay") {
  const GridCase g = load_fixture("3bus").grid;
  const Eigen::VectorXd attacked = Eigen::Vector3d(10, 7, 13);
  const Eigen::VectorXd dispatch = Eigen::Vector3d(20, 9, 1);
  const AttackVector v = attack_from_load_shift(g, attacked, dispatch, 0.0);
  CHECK((v.attacked_load - attacked).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(v.corrupted_cost == 4130.0);
  CHECK(v.overload_pairs.size() == 3);
  CHECK_THROWS_AS(attack_from_load_shift(g, Eigen::Vector3d(10, 8, 14), dispatch, 0.0),
                  ValidationError);
}
