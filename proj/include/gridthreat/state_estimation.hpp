#pragma once

#include "gridthreat/grid_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace gridthreat {

/// Readings of the taken measurements, in measurement-index order.
struct MeasurementVector {
  std::vector<int> indices;  // 1-based measurement ids
  Eigen::VectorXd values;    // pu
};

struct EstimationResult {
  Eigen::VectorXd x_hat;  // b-1 angles, slack removed
  double residual_norm = 0.0;
  double tau = 0.0;
  bool flagged = false;
};

struct EstimatorOptions {
  std::optional<double> tau;  // default 1e-4 * sqrt(taken count)
  Eigen::VectorXd weights;    // per taken measurement; empty = identity
};

/// Full m x (b-1) Jacobian, every measurement included.
Eigen::MatrixXd build_h_matrix(const GridCase& grid);

/// Rows of H for the taken measurements only.
Eigen::MatrixXd taken_h_matrix(const GridCase& grid);

std::vector<int> taken_indices(const GridCase& grid);

double default_tau(const GridCase& grid);

/// Angles (full b-vector) -> state vector with the slack dropped.
Eigen::VectorXd reduce_state(const GridCase& grid, const Eigen::VectorXd& theta);

/// Noiseless readings of the taken measurements for a full angle vector.
/// A positive `noise_sigma` adds seeded Gaussian noise.
MeasurementVector simulate_measurements(const GridCase& grid, const Eigen::VectorXd& theta,
                                        double noise_sigma = 0.0, std::uint64_t seed = 0);

/// Throws UnobservableError when taken rows of H are rank deficient.
EstimationResult estimate(const GridCase& grid, const MeasurementVector& z,
                          const EstimatorOptions& options = {});

/// `a` is indexed like `z` (taken measurements), `c` has b-1 entries.
bool stealth_check(const GridCase& grid, const MeasurementVector& z, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& c, const EstimatorOptions& options = {});

}  // namespace gridthreat
