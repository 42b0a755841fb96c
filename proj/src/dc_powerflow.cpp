#include "gridthreat/dc_powerflow.hpp"

#include "gridthreat/error.hpp"

#include <cmath>

namespace gridthreat {

Eigen::MatrixXd build_full_b_matrix(const GridCase& grid, int skip_line) {
  const int b = grid.num_buses();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(b, b);
  for (const auto& ln : grid.lines) {
    if (ln.id == skip_line) continue;
    const int f = ln.from_bus - 1;
    const int e = ln.to_bus - 1;
    B(f, f) += ln.admittance;
    B(e, e) += ln.admittance;
    B(f, e) -= ln.admittance;
    B(e, f) -= ln.admittance;
  }
  return B;
}

Eigen::MatrixXd build_b_matrix(const GridCase& grid, int skip_line) {
  const Eigen::MatrixXd full = build_full_b_matrix(grid, skip_line);
  const int b = grid.num_buses();
  Eigen::MatrixXd reduced(b - 1, b - 1);
  for (int r = 1; r <= b; ++r) {
    const int ri = grid.state_index(r);
    if (ri < 0) continue;
    for (int c = 1; c <= b; ++c) {
      const int ci = grid.state_index(c);
      if (ci < 0) continue;
      reduced(ri, ci) = full(r - 1, c - 1);
    }
  }
  return reduced;
}

Eigen::VectorXd line_flows(const GridCase& grid, const Eigen::VectorXd& theta) {
  Eigen::VectorXd flows(grid.num_lines());
  for (const auto& ln : grid.lines) {
    flows[ln.id - 1] = ln.admittance * (theta[ln.from_bus - 1] - theta[ln.to_bus - 1]);
  }
  return flows;
}

Eigen::VectorXd consumption_from_flows(const GridCase& grid, const Eigen::VectorXd& flows) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(grid.num_buses());
  for (const auto& ln : grid.lines) {
    p[ln.to_bus - 1] += flows[ln.id - 1];
    p[ln.from_bus - 1] -= flows[ln.id - 1];
  }
  return p;
}

PowerFlowState solve_consumption(const GridCase& grid, const Eigen::VectorXd& consumption,
                                 int skip_line) {
  const int b = grid.num_buses();
  if (consumption.size() != b) throw ValidationError("consumption vector has wrong length");
  if (std::abs(consumption.sum()) > 1e-6) {
    throw ValidationError("generation and load are not balanced");
  }
  const Eigen::MatrixXd B = build_b_matrix(grid, skip_line);
  Eigen::VectorXd rhs(b - 1);
  for (int j = 1; j <= b; ++j) {
    const int s = grid.state_index(j);
    if (s >= 0) rhs[s] = -consumption[j - 1];
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(B);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, B.diagonal().maxCoeff())) {
    throw SingularSystemError("susceptance matrix is singular (network split)");
  }
  const Eigen::VectorXd x = ldlt.solve(rhs);
  PowerFlowState st;
  st.theta = Eigen::VectorXd::Zero(b);
  for (int j = 1; j <= b; ++j) {
    const int s = grid.state_index(j);
    if (s >= 0) st.theta[j - 1] = x[s];
  }
  st.line_flow = line_flows(grid, st.theta);
  if (skip_line > 0) st.line_flow[skip_line - 1] = 0.0;
  st.injection = consumption;
  return st;
}

PowerFlowState solve_powerflow(const GridCase& grid, const Eigen::VectorXd& gen,
                               const Eigen::VectorXd& load) {
  if (gen.size() != grid.num_buses() || load.size() != grid.num_buses()) {
    throw ValidationError("dispatch and load vectors need one entry per bus");
  }
  if (std::abs(gen.sum() - load.sum()) > 1e-6) {
    throw ValidationError("generation and load are not balanced");
  }
  return solve_consumption(grid, load - gen);
}

Eigen::MatrixXd build_ptdf(const GridCase& grid) {
  const int b = grid.num_buses();
  const int l = grid.num_lines();
  const Eigen::MatrixXd X = build_b_matrix(grid).inverse();
  // theta = X * net_generation (reduced); flow = d (theta_f - theta_e)
  Eigen::MatrixXd ptdf = Eigen::MatrixXd::Zero(l, b);
  for (const auto& ln : grid.lines) {
    const int sf = grid.state_index(ln.from_bus);
    const int se = grid.state_index(ln.to_bus);
    for (int j = 1; j <= b; ++j) {
      const int sj = grid.state_index(j);
      if (sj < 0) continue;
      double v = 0.0;
      if (sf >= 0) v += X(sf, sj);
      if (se >= 0) v -= X(se, sj);
      ptdf(ln.id - 1, j - 1) = ln.admittance * v;
    }
  }
  return ptdf;
}

Eigen::VectorXd bus_vector(const GridCase& grid, const std::vector<std::pair<int, double>>& values) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.num_buses());
  for (const auto& [bus, x] : values) {
    if (bus < 1 || bus > grid.num_buses()) throw ValidationError("unknown bus " + std::to_string(bus));
    v[bus - 1] = x;
  }
  return v;
}

}  // namespace gridthreat
