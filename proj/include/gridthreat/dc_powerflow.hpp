#pragma once

#include "gridthreat/grid_model.hpp"

#include <Eigen/Dense>

namespace gridthreat {

/// One DC operating point. All vectors are 0-based by bus or line.
struct PowerFlowState {
  Eigen::VectorXd theta;      // radians, slack = 0
  Eigen::VectorXd line_flow;  // pu, positive from from_bus to to_bus
  Eigen::VectorXd injection;  // pu, consumption P^D - P^G per bus
};

/// Slack-reduced (b-1)x(b-1) susceptance matrix. `skip_line` (1-based)
/// removes one line from the network; 0 keeps all lines.
Eigen::MatrixXd build_b_matrix(const GridCase& grid, int skip_line = 0);

/// Full b x b Laplacian of the line graph (no slack elimination).
Eigen::MatrixXd build_full_b_matrix(const GridCase& grid, int skip_line = 0);

/// Solves for angles given per-bus generation and load (pu).
/// Throws ValidationError on imbalance above 1e-6 pu.
PowerFlowState solve_powerflow(const GridCase& grid, const Eigen::VectorXd& gen,
                               const Eigen::VectorXd& load);

/// Same, from a consumption vector P^B (must sum to zero).
PowerFlowState solve_consumption(const GridCase& grid, const Eigen::VectorXd& consumption,
                                 int skip_line = 0);

Eigen::VectorXd line_flows(const GridCase& grid, const Eigen::VectorXd& theta);

/// Bus consumption implied by a set of line flows: incoming minus outgoing.
Eigen::VectorXd consumption_from_flows(const GridCase& grid, const Eigen::VectorXd& flows);

/// l x b flow sensitivity to net generation (P^G - P^D) at each bus,
/// withdrawn at the slack. The slack column is zero.
Eigen::MatrixXd build_ptdf(const GridCase& grid);

/// Per-bus dispatch vector from (bus id, value) pairs.
Eigen::VectorXd bus_vector(const GridCase& grid, const std::vector<std::pair<int, double>>& values);

}  // namespace gridthreat
