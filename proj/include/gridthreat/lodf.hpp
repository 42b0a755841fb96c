#pragma once

#include "gridthreat/dc_powerflow.hpp"
#include "gridthreat/grid_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gridthreat {

struct LodfMatrix {
  // factors(i, k): share of line k's pre-outage flow picked up by line i.
  // Diagonal is -1. Columns of islanding outages are zero apart from it.
  Eigen::MatrixXd factors;
  std::vector<bool> islanding;

  int size() const { return static_cast<int>(islanding.size()); }
  /// 1-based ids of outages that do not island the network.
  std::vector<int> contingencies() const;
};

/// b x b bus admittance matrix of the lossless network (no shunts).
Eigen::MatrixXd build_ybus(const GridCase& grid);

LodfMatrix compute_lodf(const GridCase& grid);

/// Flows after tripping line `k` (1-based). Entry k-1 is NaN.
/// Throws Error if k islands the network.
Eigen::VectorXd post_contingency_flows(const Eigen::VectorXd& base_flows, const LodfMatrix& lodf,
                                       int k);
Eigen::VectorXd post_contingency_flows(const PowerFlowState& state, const LodfMatrix& lodf, int k);

}  // namespace gridthreat
