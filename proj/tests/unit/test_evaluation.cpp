#include "gridthreat/csv.hpp"
#include "gridthreat/evaluation.hpp"
#include "gridthreat/fixtures.hpp"
#include "gridthreat/scopf.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>
#include <fstream>
#include <sstream>

using namespace gridthreat;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gridthreat_eval_" + name);
  fs::remove_all(p);
  return p;
}

SweepSpec small_spec() {
  SweepSpec s;
  s.delta_b = {0.2, 0.5};
  s.delta_l = {0.05};
  s.line_fraction = {0.05};
  s.max_buses = {3, 4};
  return s;
}

}  // namespace

TEST_CASE("zero load shift zeroes every cell") {
  SweepSpec s = small_spec();
  s.delta_b = {0.0};
  const SweepResult r = run_sweep(load_fixture("ieee14").grid, s);
  for (const auto& c : r.cells) {
    CHECK(c.error.empty());
    CHECK(c.attack_space == 0);
  }
}

TEST_CASE("attack space shrinks as the margin grows") {
  SweepSpec s = small_spec();
  s.max_buses = {4};
  s.delta_l = {0.0, 0.05, 0.1, 0.2, 0.4};
  const SweepResult r = run_sweep(load_fixture("ieee14").grid, s);
  for (double db : s.delta_b) {
    long long prev = -1;
    for (const auto& c : r.cells) {
      if (c.delta_b != db) continue;
      if (prev >= 0) CHECK(c.attack_space <= prev);
      prev = c.attack_space;
    }
  }
}

TEST_CASE("securing the most frequent bus strictly shrinks a nonzero space") {
  SweepSpec s = small_spec();
  s.max_buses = {4};
  s.securing = {SecuringSpec{}, SecuringSpec{SecuringPolicy::Analytical}};
  const SweepResult r = run_sweep(load_fixture("ieee14").grid, s);
  REQUIRE(r.cells.size() == 4);
  for (size_t i = 0; i < r.cells.size(); i += 2) {
    REQUIRE(r.cells[i].policy == "none");
    if (r.cells[i].attack_space > 0) CHECK(r.cells[i + 1].attack_space < r.cells[i].attack_space);
    CHECK(r.cells[i + 1].secured > 0);
  }
}

TEST_CASE("ranking by frequency") {
  AttackVector v;
  v.compromised = {false, true, true, true, false};
  const auto rank = rank_buses_by_frequency(std::vector<AttackVector>{v});
  REQUIRE(rank.size() == 3);
  CHECK(rank == std::vector<int>{2, 3, 4});
  CHECK(rank_buses_by_frequency(std::vector<AttackVector>{}).empty());
  CHECK(rank_buses_by_frequency(std::vector<long long>{3, 5, 5, 0, 1}) == std::vector<int>{2, 3, 1, 5});
}

TEST_CASE("14-bus ranking leads with the central load buses") {
  SweepSpec s = small_spec();
  const SweepResult r = run_sweep(load_fixture("ieee14").grid, s);
  const auto rank = rank_buses_by_frequency(r.bus_frequency);
  REQUIRE(rank.size() >= 3);
  const std::set<int> allowed{2, 3, 4, 5, 6, 9};
  for (int i = 0; i < 3; ++i) CHECK(allowed.count(rank[i]) == 1);
}

TEST_CASE("heatmaps are consistent with cell counts") {
  SweepSpec s = small_spec();
  const SweepResult r = run_sweep(load_fixture("ieee14").grid, s);
  const GridCase g = load_fixture("ieee14").grid;
  for (int tb : s.max_buses) {
    long long space = 0;
    for (const auto& c : r.cells) {
      if (c.max_buses == tb) space += c.attack_space;
    }
    const Eigen::MatrixXi& heat = r.heatmaps.at(tb);
    for (int k = 0; k < heat.rows(); ++k) {
      for (int i = 0; i < heat.cols(); ++i) CHECK(heat(k, i) <= space);
    }
  }
  // per vector: an outage with any overload contributes at least one count
  GridCase one = g;
  one.attacker.max_buses = 4;
  const ScopfSolution pre = solve_scopf(one, one.load_vector());
  const auto all = enumerate_attack_space(one, pre, goal_from_case(one, pre));
  const AttackSpaceSummary sum = summarize_attack_space(one, pre, goal_from_case(one, pre));
  for (int k = 1; k <= 20; ++k) {
    long long with_k = 0;
    for (const auto& v : all) {
      bool hit = false;
      for (const auto& p : v.overload_pairs) hit = hit || p.outage == k;
      with_k += hit;
    }
    CHECK(sum.heatmap.row(k - 1).sum() >= with_k);
  }
}

TEST_CASE("sweeps are byte-identical across runs and worker counts") {
  SweepSpec s = small_spec();
  SecuringSpec rnd{SecuringPolicy::Random};
  rnd.fraction = 0.2;
  rnd.seed = 17;
  s.securing = {SecuringSpec{}, rnd};
  s.repetitions = 3;
  const GridCase g = load_fixture("ieee14").grid;
  const fs::path a = scratch("a"), b = scratch("b");
  write_sweep_outputs(run_sweep(g, s), a);
  s.workers = 4;
  write_sweep_outputs(run_sweep(g, s), b);
  for (const char* f : {"attack_space.csv", "bus_frequency.csv", "heatmap_TB3.csv", "heatmap_TB4.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK_FALSE(slurp(a / f).empty());
  }
  const auto rows = read_csv(a / "heatmap_TB4.csv");
  CHECK(rows.size() == 21);
  CHECK(rows[0].size() == 21);
}

TEST_CASE("failing cells are recorded and the sweep continues") {
  SweepSpec s = small_spec();
  s.delta_l = {0.05, -0.1};  // negative margin is rejected per cell
  const SweepResult r = run_sweep(load_fixture("ieee14").grid, s);
  int failed = 0, ok = 0;
  for (const auto& c : r.cells) (c.error.empty() ? ok : failed)++;
  CHECK(failed == 4);
  CHECK(ok == 4);
}

TEST_CASE("random securing is seeded and counts taken measurements") {
  GridCase g = load_fixture("ieee14").grid;
  g.measurements[0].taken = false;
  SecuringSpec s{SecuringPolicy::Random};
  s.count = 10;
  s.seed = 99;
  int n = 0;
  const GridCase a = apply_securing(g, s, {}, &n);
  CHECK(n == 10);
  CHECK(a == apply_securing(g, s, {}));
  int secured = 0;
  for (const auto& m : a.measurements) {
    secured += m.secured;
    if (m.secured) CHECK(m.taken);
  }
  CHECK(secured == 10);
  s.seed = 100;
  CHECK_FALSE(a == apply_securing(g, s, {}));
  SecuringSpec analytical{SecuringPolicy::Analytical};
  analytical.top_k = 1;
  const GridCase b = apply_securing(g, analytical, {3}, &n);
  for (const auto& m : b.measurements) {
    CHECK(m.secured == (m.taken && g.metering_bus(m.index) == 3));
  }
}

TEST_CASE("empty sweep grids are rejected") {
  SweepSpec s = small_spec();
  s.delta_l.clear();
  CHECK_THROWS(run_sweep(load_fixture("ieee14").grid, s));
}
