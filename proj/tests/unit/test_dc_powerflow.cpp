#include "gridthreat/dc_powerflow.hpp"
#include "gridthreat/error.hpp"
#include "gridthreat/fixtures.hpp"
#include "gridthreat/scopf.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gridthreat;

namespace {

GridCase triangle(double d12, double d13, double d23, int slack = 1) {
  GridCase g = oracle::make_case(3, {{1, 2, d12, 100}, {1, 3, d13, 100}, {2, 3, d23, 100}});
  g.slack_bus = slack;
  return g;
}

}  // namespace

TEST_CASE("two buses joined by one line") {
  const GridCase g = oracle::make_case(2, {{1, 2, 5, 1}});
  const Eigen::MatrixXd B = build_b_matrix(g);
  REQUIRE(B.rows() == 1);
  CHECK(B(0, 0) == 5.0);
}

TEST_CASE("equal triangle with slack at bus 3") {
  const Eigen::MatrixXd B = build_b_matrix(triangle(1, 1, 1, 3));
  Eigen::Matrix2d expect;
  expect << 2, -1, -1, 2;
  CHECK(B.isApprox(expect));
}

TEST_CASE("reduced matrix is symmetric with incident sums on the diagonal") {
  const GridCase g = load_fixture("ieee14").grid;
  const Eigen::MatrixXd B = build_b_matrix(g);
  CHECK(B.isApprox(B.transpose()));
  const Eigen::MatrixXd full = oracle::laplacian(g);
  for (int j = 2; j <= 14; ++j) CHECK(B(j - 2, j - 2) == Catch::Approx(full(j - 1, j - 1)));
  CHECK(build_full_b_matrix(g).isApprox(full));
}

TEST_CASE("hand-solved triangle flows") {
  const GridCase g = triangle(1, 1, 1);
  Eigen::VectorXd gen(3), load(3);
  gen << 10, 2, 0;
  load << 0, 0, 12;
  const PowerFlowState s = solve_powerflow(g, gen, load);
  CHECK(s.line_flow[0] == Catch::Approx(8.0 / 3));
  CHECK(s.line_flow[1] == Catch::Approx(22.0 / 3));
  CHECK(s.line_flow[2] == Catch::Approx(14.0 / 3));
  CHECK(s.theta[0] == 0.0);
}

TEST_CASE("zero generation and zero load give a flat state") {
  const GridCase g = load_fixture("ieee14").grid;
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(14);
  const PowerFlowState s = solve_powerflow(g, z, z);
  CHECK(s.theta.isZero());
  CHECK(s.line_flow.isZero());
}

TEST_CASE("imbalanced injections are rejected") {
  const GridCase g = load_fixture("3bus").grid;
  Eigen::VectorXd gen(3);
  gen << 1, 1, 1;
  CHECK_THROWS_AS(solve_powerflow(g, gen, g.load_vector()), ValidationError);
}

TEST_CASE("14-bus residual and conservation at the SCOPF point") {
  const GridCase g = load_fixture("ieee14").grid;
  const ScopfSolution pre = solve_scopf(g, g.load_vector());
  const PowerFlowState& s = pre.flows;
  const Eigen::VectorXd reduced = build_b_matrix(g) * s.theta.tail(13);
  CHECK((reduced + s.injection.tail(13)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((consumption_from_flows(g, s.line_flow) - s.injection).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(s.injection.sum()) < 1e-8);
  for (const auto& ln : g.lines) {
    CHECK(s.line_flow[ln.id - 1] ==
          ln.admittance * (s.theta[ln.from_bus - 1] - s.theta[ln.to_bus - 1]));
    CHECK(std::abs(s.line_flow[ln.id - 1]) <= ln.capacity + 1e-9);
  }
}

TEST_CASE("flows match the pseudo-inverse oracle for random injections") {
  std::mt19937_64 rng(11);
  for (const auto& name : fixture_names()) {
    GridCase g = load_fixture(name).grid;
    for (int trial = 0; trial < 50; ++trial) {
      g.slack_bus = 1 + static_cast<int>(rng() % g.num_buses());
      const Eigen::VectorXd net = oracle::random_balanced(g.num_buses(), rng);
      const PowerFlowState s = solve_consumption(g, -net);
      CHECK((s.line_flow - oracle::flows(g, net)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(s.theta[g.slack_bus - 1] == 0.0);
    }
  }
}

TEST_CASE("adding a constant to every angle leaves flows unchanged") {
  const GridCase g = load_fixture("ieee14").grid;
  std::mt19937_64 rng(5);
  const PowerFlowState s = solve_consumption(g, oracle::random_balanced(14, rng));
  for (double shift : {-1.0, 0.3, 7.5}) {
    const Eigen::VectorXd moved = s.theta.array() + shift;
    CHECK((line_flows(g, moved) - s.line_flow).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("reversing a line negates its flow and nothing else") {
  const GridCase g = load_fixture("ieee14").grid;
  std::mt19937_64 rng(6);
  const Eigen::VectorXd c = oracle::random_balanced(14, rng);
  const PowerFlowState s = solve_consumption(g, c);
  for (int i = 0; i < g.num_lines(); ++i) {
    GridCase r = g;
    std::swap(r.lines[i].from_bus, r.lines[i].to_bus);
    const PowerFlowState t = solve_consumption(r, c);
    Eigen::VectorXd expect = s.line_flow;
    expect[i] = -expect[i];
    CHECK((t.line_flow - expect).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((t.theta - s.theta).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("PTDF rows reproduce flows and the slack column is zero") {
  const GridCase g = load_fixture("ieee14").grid;
  const Eigen::MatrixXd ptdf = build_ptdf(g);
  CHECK(ptdf.col(g.slack_bus - 1).isZero());
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd net = oracle::random_balanced(14, rng);
    CHECK((ptdf * net - oracle::flows(g, net)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("removing a bridge makes the system singular") {
  GridCase g = oracle::make_case(3, {{1, 2, 1, 1}, {2, 3, 1, 1}});
  Eigen::VectorXd c(3);
  c << -1, 0, 1;
  CHECK_THROWS_AS(solve_consumption(g, c, 2), SingularSystemError);
}
