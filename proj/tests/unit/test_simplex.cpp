#include "gridthreat/simplex.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <limits>
#include <optional>
#include <random>

using gridthreat::LinearProgram;
using gridthreat::LpStatus;

namespace {

struct Problem {
  int n = 0;
  Eigen::MatrixXd A;
  Eigen::VectorXd lo, hi;  // row bounds
  Eigen::VectorXd xlo, xhi;
  Eigen::VectorXd c;
};

// Best vertex by trying every choice of n active constraints.
std::optional<double> brute_force(const Problem& p) {
  // stack rows and variable bounds into one list of (a, value) candidates
  std::vector<std::pair<Eigen::RowVectorXd, double>> planes;
  for (int r = 0; r < p.A.rows(); ++r) {
    planes.emplace_back(p.A.row(r), p.lo[r]);
    planes.emplace_back(p.A.row(r), p.hi[r]);
  }
  for (int j = 0; j < p.n; ++j) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(p.n);
    e[j] = 1;
    planes.emplace_back(e, p.xlo[j]);
    planes.emplace_back(e, p.xhi[j]);
  }
  std::optional<double> best;
  const int P = static_cast<int>(planes.size());
  std::vector<int> idx(p.n);
  std::function<void(int, int)> rec = [&](int depth, int start) {
    if (depth == p.n) {
      Eigen::MatrixXd M(p.n, p.n);
      Eigen::VectorXd v(p.n);
      for (int i = 0; i < p.n; ++i) {
        M.row(i) = planes[idx[i]].first;
        v[i] = planes[idx[i]].second;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < p.n) return;
      const Eigen::VectorXd x = lu.solve(v);
      for (int j = 0; j < p.n; ++j) {
        if (x[j] < p.xlo[j] - 1e-7 || x[j] > p.xhi[j] + 1e-7) return;
      }
      const Eigen::VectorXd ax = p.A * x;
      for (int r = 0; r < p.A.rows(); ++r) {
        if (ax[r] < p.lo[r] - 1e-7 || ax[r] > p.hi[r] + 1e-7) return;
      }
      const double val = p.c.dot(x);
      if (!best || val < *best) best = val;
      return;
    }
    for (int i = start; i < P; ++i) {
      idx[depth] = i;
      rec(depth + 1, i + 1);
    }
  };
  rec(0, 0);
  return best;
}

Problem random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(2, 3), md(1, 4);
  std::uniform_real_distribution<double> u(-5, 5);
  Problem p;
  p.n = nd(rng);
  const int m = md(rng);
  p.A.resize(m, p.n);
  p.lo.resize(m);
  p.hi.resize(m);
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < p.n; ++j) p.A(r, j) = u(rng);
    const double a = u(rng), b = u(rng);
    p.lo[r] = std::min(a, b);
    p.hi[r] = rng() % 3 == 0 ? p.lo[r] : std::max(a, b);
  }
  p.xlo.resize(p.n);
  p.xhi.resize(p.n);
  p.c.resize(p.n);
  for (int j = 0; j < p.n; ++j) {
    p.xlo[j] = u(rng) - 5;
    p.xhi[j] = p.xlo[j] + std::abs(u(rng)) + 0.5;
    p.c[j] = u(rng);
  }
  return p;
}

LinearProgram build(const Problem& p) {
  LinearProgram lp(p.n);
  for (int j = 0; j < p.n; ++j) lp.set_bounds(j, p.xlo[j], p.xhi[j]);
  for (int r = 0; r < p.A.rows(); ++r) lp.add_row(p.A.row(r), p.lo[r], p.hi[r]);
  lp.set_objective(p.c);
  return lp;
}

}  // namespace

TEST_CASE("textbook LP") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
  LinearProgram lp(2);
  lp.set_bounds(0, 0, LinearProgram::kInf);
  lp.set_bounds(1, 0, LinearProgram::kInf);
  lp.add_row(Eigen::RowVector2d(1, 0), -LinearProgram::kInf, 4);
  lp.add_row(Eigen::RowVector2d(0, 2), -LinearProgram::kInf, 12);
  lp.add_row(Eigen::RowVector2d(3, 2), -LinearProgram::kInf, 18);
  lp.set_objective(Eigen::Vector2d(-3, -5));
  REQUIRE(lp.solve() == LpStatus::Optimal);
  CHECK(lp.objective_value() == Catch::Approx(-36));
  CHECK(lp.solution()[0] == Catch::Approx(2));
  CHECK(lp.solution()[1] == Catch::Approx(6));
}

TEST_CASE("infeasible and unbounded problems are recognised") {
  LinearProgram lp(1);
  lp.set_bounds(0, 0, 1);
  lp.add_row(Eigen::RowVectorXd::Constant(1, 1.0), 2, 3);
  CHECK(lp.solve() == LpStatus::Infeasible);
  CHECK(lp.infeasibility() > 0.9);
  CHECK_FALSE(lp.violated_rows().empty());

  LinearProgram un(2);
  un.set_bounds(0, 0, LinearProgram::kInf);
  un.set_bounds(1, 0, LinearProgram::kInf);
  un.add_row(Eigen::RowVector2d(1, -1), -LinearProgram::kInf, 1);
  un.set_objective(Eigen::Vector2d(-1, -1));
  CHECK(un.solve() == LpStatus::Unbounded);
}

TEST_CASE("random LPs match vertex enumeration") {
  std::mt19937_64 rng(31);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Problem p = random_problem(rng);
    LinearProgram lp = build(p);
    const LpStatus st = lp.solve();
    const std::optional<double> best = brute_force(p);
    if (best) {
      ++optimal;
      REQUIRE(st == LpStatus::Optimal);
      CHECK(lp.objective_value() == Catch::Approx(*best).margin(1e-6));
      CHECK(lp.infeasibility() < 1e-7);
    } else {
      ++infeasible;
      CHECK(st == LpStatus::Infeasible);
    }
  }
  CHECK(optimal > 50);
  CHECK(infeasible > 10);
}

TEST_CASE("rows added after a solve are honoured and copies are independent") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    Problem p = random_problem(rng);
    LinearProgram lp = build(p);
    lp.solve();
    const LinearProgram snapshot = lp;
    Eigen::RowVectorXd extra(p.n);
    for (auto& v : extra) v = std::uniform_real_distribution<double>(-3, 3)(rng);
    const double bound = std::uniform_real_distribution<double>(-4, 4)(rng);
    lp.add_row(extra, -LinearProgram::kInf, bound);
    const LpStatus st = lp.solve();

    Problem q = p;
    q.A.conservativeResize(p.A.rows() + 1, Eigen::NoChange);
    q.A.row(p.A.rows()) = extra;
    q.lo.conservativeResize(q.lo.size() + 1);
    q.hi.conservativeResize(q.hi.size() + 1);
    q.lo[q.lo.size() - 1] = -1e6;  // far below any reachable value
    q.hi[q.hi.size() - 1] = bound;
    const std::optional<double> best = brute_force(q);
    if (best) {
      REQUIRE(st == LpStatus::Optimal);
      CHECK(lp.objective_value() == Catch::Approx(*best).margin(1e-6));
    } else {
      CHECK(st == LpStatus::Infeasible);
    }
    CHECK(snapshot.num_rows() == p.A.rows());
  }
}

TEST_CASE("objective can be replaced between solves") {
  LinearProgram lp(2);
  lp.set_bounds(0, 0, 1);
  lp.set_bounds(1, 0, 1);
  lp.add_row(Eigen::RowVector2d(1, 1), 1, 1);
  lp.set_objective(Eigen::Vector2d(1, 0));
  REQUIRE(lp.solve() == LpStatus::Optimal);
  CHECK(lp.solution()[0] == Catch::Approx(0).margin(1e-12));
  lp.set_objective(Eigen::Vector2d(0, 1));
  REQUIRE(lp.solve() == LpStatus::Optimal);
  CHECK(lp.solution()[1] == Catch::Approx(0).margin(1e-12));
  CHECK(lp.row_value(0) == Catch::Approx(1));
  lp.set_row_bounds(0, 0.5, 0.5);
  REQUIRE(lp.solve() == LpStatus::Optimal);
  CHECK(lp.solution().sum() == Catch::Approx(0.5));
}
