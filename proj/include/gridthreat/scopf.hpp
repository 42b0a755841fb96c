#pragma once

#include "gridthreat/dc_powerflow.hpp"
#include "gridthreat/grid_model.hpp"
#include "gridthreat/lodf.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gridthreat {

struct BindingConstraint {
  std::string kind;     // "base_flow", "contingency_flow", "gen_max", "gen_min"
  int element = 0;      // line id or generator bus
  int contingency = 0;  // outaged line id, 0 for the base case
  double value = 0.0;
  double limit = 0.0;
};

struct ScopfSolution {
  Eigen::VectorXd dispatch;  // per bus, pu
  double cost = 0.0;
  PowerFlowState flows;
  std::vector<BindingConstraint> binding;
  std::vector<int> committed;          // generator buses with P > 0 allowed
  std::vector<int> islanding_outages;  // excluded from the N-1 set
};

struct ScopfOptions {
  bool contingencies = true;  // false gives a plain DC-OPF
  double feasibility_tol = 1e-7;
};

/// Total cost of a per-bus dispatch; generators at zero cost nothing.
/// Throws ValidationError for dispatch outside {0} U [p_min, p_max].
double evaluate_cost(const GridCase& grid, const Eigen::VectorXd& dispatch);

/// Throws InfeasibleError when no secure dispatch exists.
ScopfSolution solve_scopf(const GridCase& grid, const Eigen::VectorXd& loads,
                          const ScopfOptions& options = {});
ScopfSolution solve_scopf(const GridCase& grid, const LodfMatrix& lodf,
                          const Eigen::VectorXd& loads, const ScopfOptions& options = {});

/// Largest violation of the N-1 secure-dispatch constraints (pu, 0 when
/// secure). Computed by full re-solves, independent of the LODF path.
double security_violation(const GridCase& grid, const Eigen::VectorXd& dispatch,
                          const Eigen::VectorXd& loads, bool contingencies = true);

/// Flow constraints shared by the dispatch problems: row r gives a line
/// flow as coeffs.row(r) * (gen - load) over all buses.
struct SecurityRows {
  Eigen::MatrixXd coeffs;
  std::vector<int> line;
  std::vector<int> outage;  // 0 for the base case
  std::vector<double> capacity;

  int size() const { return static_cast<int>(line.size()); }
};

SecurityRows build_security_rows(const GridCase& grid, const LodfMatrix& lodf,
                                 bool contingencies);

}  // namespace gridthreat
