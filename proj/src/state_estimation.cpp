#include "gridthreat/state_estimation.hpp"

#include "gridthreat/error.hpp"

#include <cmath>
#include <random>

namespace gridthreat {

Eigen::MatrixXd build_h_matrix(const GridCase& grid) {
  const int l = grid.num_lines();
  const int b = grid.num_buses();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * l + b, b - 1);
  for (const auto& ln : grid.lines) {
    const int sf = grid.state_index(ln.from_bus);
    const int se = grid.state_index(ln.to_bus);
    const int fwd = ln.id - 1;
    const int bwd = l + ln.id - 1;
    if (sf >= 0) {
      H(fwd, sf) += ln.admittance;
      H(bwd, sf) -= ln.admittance;
    }
    if (se >= 0) {
      H(fwd, se) -= ln.admittance;
      H(bwd, se) += ln.admittance;
    }
  }
  // consumption: incoming minus outgoing flows
  for (const auto& ln : grid.lines) {
    H.row(2 * l + ln.to_bus - 1) += H.row(ln.id - 1);
    H.row(2 * l + ln.from_bus - 1) -= H.row(ln.id - 1);
  }
  return H;
}

std::vector<int> taken_indices(const GridCase& grid) {
  std::vector<int> idx;
  for (const auto& m : grid.measurements) {
    if (m.taken) idx.push_back(m.index);
  }
  return idx;
}

Eigen::MatrixXd taken_h_matrix(const GridCase& grid) {
  const Eigen::MatrixXd H = build_h_matrix(grid);
  const auto idx = taken_indices(grid);
  Eigen::MatrixXd out(idx.size(), H.cols());
  for (size_t r = 0; r < idx.size(); ++r) out.row(r) = H.row(idx[r] - 1);
  return out;
}

double default_tau(const GridCase& grid) {
  return 1e-4 * std::sqrt(static_cast<double>(taken_indices(grid).size()));
}

Eigen::VectorXd reduce_state(const GridCase& grid, const Eigen::VectorXd& theta) {
  Eigen::VectorXd x(grid.num_states());
  for (int j = 1; j <= grid.num_buses(); ++j) {
    const int s = grid.state_index(j);
    if (s >= 0) x[s] = theta[j - 1];
  }
  return x;
}

MeasurementVector simulate_measurements(const GridCase& grid, const Eigen::VectorXd& theta,
                                        double noise_sigma, std::uint64_t seed) {
  MeasurementVector z;
  z.indices = taken_indices(grid);
  const Eigen::VectorXd full = build_h_matrix(grid) * reduce_state(grid, theta);
  z.values.resize(z.indices.size());
  for (size_t r = 0; r < z.indices.size(); ++r) z.values[r] = full[z.indices[r] - 1];
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (Eigen::Index r = 0; r < z.values.size(); ++r) z.values[r] += noise(rng);
  }
  return z;
}

namespace {

struct Fit {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
};

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& H, const std::vector<int>& indices) {
  Eigen::MatrixXd out(indices.size(), H.cols());
  for (size_t r = 0; r < indices.size(); ++r) out.row(r) = H.row(indices[r] - 1);
  return out;
}

Fit weighted_fit(const Eigen::MatrixXd& H, const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
  // Solve min ||W^(1/2) (z - Hx)|| by QR, which avoids forming H'WH.
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd A = sw.asDiagonal() * H;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < H.cols()) {
    const int deficiency = static_cast<int>(H.cols() - qr.rank());
    throw UnobservableError(deficiency, "measurement set leaves " + std::to_string(deficiency) +
                                            " state direction(s) unobservable");
  }
  Fit fit;
  fit.x = qr.solve(sw.cwiseProduct(z));
  fit.residual = z - H * fit.x;
  return fit;
}

Eigen::VectorXd weights_for(const MeasurementVector& z, const EstimatorOptions& options) {
  if (options.weights.size() == 0) return Eigen::VectorXd::Ones(z.values.size());
  if (options.weights.size() != z.values.size()) {
    throw ValidationError("weight vector length does not match the measurements");
  }
  if ((options.weights.array() <= 0.0).any()) throw ValidationError("weights must be positive");
  return options.weights;
}

}  // namespace

EstimationResult estimate(const GridCase& grid, const MeasurementVector& z,
                          const EstimatorOptions& options) {
  if (z.values.size() != static_cast<Eigen::Index>(z.indices.size())) {
    throw ValidationError("measurement vector indices and values differ in length");
  }
  for (int idx : z.indices) {
    if (idx < 1 || idx > grid.num_measurements() || !grid.measurements[idx - 1].taken) {
      throw ValidationError("measurement " + std::to_string(idx) + " is not a taken measurement");
    }
  }
  const Eigen::MatrixXd H = rows_of(build_h_matrix(grid), z.indices);
  const Eigen::VectorXd w = weights_for(z, options);
  const Fit fit = weighted_fit(H, z.values, w);
  EstimationResult res;
  res.x_hat = fit.x;
  res.residual_norm = fit.residual.norm();
  res.tau = options.tau.value_or(1e-4 * std::sqrt(static_cast<double>(z.indices.size())));
  res.flagged = res.residual_norm > res.tau;
  return res;
}

bool stealth_check(const GridCase& grid, const MeasurementVector& z, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& c, const EstimatorOptions& options) {
  if (a.size() != z.values.size()) throw ValidationError("injection length does not match z");
  if (c.size() != grid.num_states()) throw ValidationError("state shift needs b-1 entries");
  const Eigen::MatrixXd H = rows_of(build_h_matrix(grid), z.indices);
  const EstimationResult base = estimate(grid, z, options);
  const double before = (z.values - H * base.x_hat).norm();
  const double after = ((z.values + a) - H * (base.x_hat + c)).norm();
  const double mismatch = (a - H * c).cwiseAbs().maxCoeff();
  return std::abs(after - before) <= 1e-9 && mismatch <= 1e-9;
}

}  // namespace gridthreat
