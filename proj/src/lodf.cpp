#include "gridthreat/lodf.hpp"

#include "gridthreat/error.hpp"

#include <cmath>
#include <limits>

namespace gridthreat {

std::vector<int> LodfMatrix::contingencies() const {
  std::vector<int> out;
  for (int k = 0; k < size(); ++k) {
    if (!islanding[k]) out.push_back(k + 1);
  }
  return out;
}

Eigen::MatrixXd build_ybus(const GridCase& grid) {
  const int b = grid.num_buses();
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(b, b);
  for (const auto& ln : grid.lines) {
    const int i = ln.from_bus - 1;
    const int j = ln.to_bus - 1;
    // z = 1/d for a purely inductive line
    Y(i, j) -= ln.admittance;
    Y(j, i) -= ln.admittance;
  }
  for (int i = 0; i < b; ++i) Y(i, i) = -Y.row(i).sum();
  return Y;
}

LodfMatrix compute_lodf(const GridCase& grid) {
  const int b = grid.num_buses();
  const int l = grid.num_lines();
  const Eigen::MatrixXd Y = build_ybus(grid);

  Eigen::MatrixXd reduced(b - 1, b - 1);
  for (int r = 1; r <= b; ++r) {
    for (int c = 1; c <= b; ++c) {
      const int ri = grid.state_index(r);
      const int ci = grid.state_index(c);
      if (ri >= 0 && ci >= 0) reduced(ri, ci) = Y(r - 1, c - 1);
    }
  }
  // Sensitivity matrix padded with zeros at the slack.
  const Eigen::MatrixXd inv = reduced.inverse();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(b, b);
  for (int r = 1; r <= b; ++r) {
    for (int c = 1; c <= b; ++c) {
      const int ri = grid.state_index(r);
      const int ci = grid.state_index(c);
      if (ri >= 0 && ci >= 0) X(r - 1, c - 1) = inv(ri, ci);
    }
  }

  LodfMatrix out;
  out.factors = Eigen::MatrixXd::Zero(l, l);
  out.islanding.assign(l, false);
  for (const auto& outage : grid.lines) {
    const int k = outage.id - 1;
    const int m = outage.from_bus - 1;
    const int n = outage.to_bus - 1;
    const double zk = 1.0 / outage.admittance;
    const double denom = zk - (X(m, m) + X(n, n) - 2.0 * X(m, n));
    if (std::abs(denom) < 1e-9) {
      out.islanding[k] = true;
      out.factors(k, k) = -1.0;
      continue;
    }
    for (const auto& mon : grid.lines) {
      const int i = mon.id - 1;
      if (i == k) {
        out.factors(i, k) = -1.0;
        continue;
      }
      const int a = mon.from_bus - 1;
      const int c = mon.to_bus - 1;
      const double zi = 1.0 / mon.admittance;
      out.factors(i, k) = (zk / zi) * (X(a, m) - X(a, n) - X(c, m) + X(c, n)) / denom;
    }
  }
  return out;
}

Eigen::VectorXd post_contingency_flows(const Eigen::VectorXd& base_flows, const LodfMatrix& lodf,
                                       int k) {
  if (k < 1 || k > lodf.size()) throw Error("unknown outage line " + std::to_string(k));
  if (lodf.islanding[k - 1]) {
    throw Error("outage of line " + std::to_string(k) + " islands the network");
  }
  Eigen::VectorXd post = base_flows + lodf.factors.col(k - 1) * base_flows[k - 1];
  post[k - 1] = std::numeric_limits<double>::quiet_NaN();
  return post;
}

Eigen::VectorXd post_contingency_flows(const PowerFlowState& state, const LodfMatrix& lodf, int k) {
  return post_contingency_flows(state.line_flow, lodf, k);
}

}  // namespace gridthreat
