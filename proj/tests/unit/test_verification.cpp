#include "gridthreat/attack_synthesis.hpp"
#include "gridthreat/error.hpp"
#include "gridthreat/fixtures.hpp"
#include "gridthreat/scopf.hpp"
#include "gridthreat/verification.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <set>

using namespace gridthreat;

TEST_CASE("null attack changes nothing") {
  const GridCase g = load_fixture("ieee14").grid;
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  const AttackVector v = attack_from_load_shift(g, g.load_vector(), pre.dispatch, g.attacker.delta_l);
  const VerificationReport r = verify(g, pre, v);
  CHECK(r.stealthy);
  REQUIRE(r.ems_view);
  CHECK((r.ems_view->dispatch - pre.dispatch).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.confirmed_overloads.empty());
  CHECK(r.cost_delta == Catch::Approx(0).margin(1e-9));
}

TEST_CASE("3-bus worked attack") {
  const GridCase g = load_fixture("3bus").grid;
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  const Eigen::VectorXd attacked = Eigen::Vector3d(10, 7, 13);
  const ScopfSolution ems = solve_scopf(g, attacked);
  CHECK((ems.dispatch - Eigen::Vector3d(20, 9, 1)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(ems.cost == Catch::Approx(4130));
  const AttackVector v = attack_from_load_shift(g, attacked, ems.dispatch, 0.0);
  VerifyOptions o;
  o.overload_margin = 0.0;
  const VerificationReport r = verify(g, pre, v, o);
  CHECK(r.stealthy);
  std::set<std::pair<int, int>> pairs;
  for (const auto& p : r.confirmed_overloads) pairs.insert({p.line, p.outage});
  CHECK(pairs == std::set<std::pair<int, int>>{{1, 2}, {3, 2}, {2, 3}});
  CHECK(r.cost_delta == Catch::Approx(4130 - pre.cost));
  // the EMS sees a clean N-1 picture
  CHECK(r.ems_max_loading <= 1 + 1e-9);
  // true screen: above 1.0 exactly for the overloaded pairs
  for (const auto& e : r.true_screen) {
    CHECK((e.loading > 1 + 1e-9) == (pairs.count({e.line, e.outage}) == 1));
  }
}

TEST_CASE("14-bus Sat vector has confirmed overloads and no extra cost") {
  GridCase g = load_fixture("ieee14").grid;
  g.attacker.max_buses = 3;
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  const SynthesisResult s = synthesize(g, pre, goal_from_case(g, pre));
  REQUIRE(s.sat);
  const VerificationReport r = verify(g, pre, *s.witness);
  CHECK(r.stealthy);
  CHECK(r.confirmed_overloads.size() >= 1);
  CHECK(r.cost_delta <= 1e-6);
  CHECK(r.oracle_gap < 1e-6);
}

TEST_CASE("screens of zero flows are zero and the pre-attack screen is clear") {
  const GridCase g = load_fixture("ieee14").grid;
  const LodfMatrix lodf = compute_lodf(g);
  PowerFlowState flat{Eigen::VectorXd::Zero(14), Eigen::VectorXd::Zero(20), Eigen::VectorXd::Zero(14)};
  for (const auto& e : contingency_screen(g, flat, lodf)) CHECK(e.loading == 0.0);
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  const auto screen = contingency_screen(g, pre.flows, lodf);
  REQUIRE_FALSE(screen.empty());
  CHECK(screen.front().loading <= 1 + 1e-7);
  for (size_t i = 1; i < screen.size(); ++i) CHECK(screen[i - 1].loading >= screen[i].loading);
  CHECK(screen.size() == 19u * 19u);
}

TEST_CASE("LODF screen and re-solve screen agree") {
  std::mt19937_64 rng(61);
  for (const auto& name : fixture_names()) {
    const GridCase g = load_fixture(name).grid;
    const LodfMatrix lodf = compute_lodf(g);
    for (int trial = 0; trial < 10; ++trial) {
      const PowerFlowState st = solve_consumption(g, oracle::random_balanced(g.num_buses(), rng));
      auto a = contingency_screen(g, st, lodf);
      auto b = contingency_screen_resolve(g, st);
      REQUIRE(a.size() == b.size());
      auto key = [](const ContingencyLoading& c) { return std::make_pair(c.outage, c.line); };
      auto by_key = [&](auto& v) {
        std::sort(v.begin(), v.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
      };
      by_key(a);
      by_key(b);
      for (size_t i = 0; i < a.size(); ++i) {
        CHECK(key(a[i]) == key(b[i]));
        CHECK(std::abs(a[i].flow - b[i].flow) < 1e-6);
      }
    }
  }
}

TEST_CASE("broken vectors are rejected with the invariant named") {
  GridCase g = load_fixture("ieee14").grid;
  g.attacker.max_buses = 3;
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  const AttackVector w = *synthesize(g, pre, goal_from_case(g, pre)).witness;

  auto expect_named = [&](AttackVector v, const std::string& fragment) {
    try {
      verify(g, pre, v);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring(fragment));
    }
  };
  AttackVector v = w;
  v.delta_line[0] += 0.1;
  expect_named(v, "angle shift");
  v = w;
  v.altered.assign(v.altered.size(), false);
  expect_named(v, "not marked altered");
  v = w;
  v.altered.pop_back();
  expect_named(v, "sizes");
}

TEST_CASE("a self-defeating attack is reported, not thrown") {
  GridCase g = load_fixture("3bus").grid;
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  // shrink capacities after the fact so the EMS cannot dispatch the lie
  GridCase tight = g;
  for (auto& ln : tight.lines) ln.capacity = 6;
  tight.attacker.delta_b = 1;
  const AttackVector v =
      attack_from_load_shift(tight, Eigen::Vector3d(10, 7, 13), Eigen::Vector3d(20, 9, 1), 0);
  const VerificationReport r = verify(tight, pre, v);
  CHECK_FALSE(r.ems_view);
  CHECK_FALSE(r.ems_error.empty());
}
