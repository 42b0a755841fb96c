#pragma once

#include "gridthreat/attack_synthesis.hpp"
#include "gridthreat/dc_powerflow.hpp"
#include "gridthreat/grid_model.hpp"
#include "gridthreat/lodf.hpp"
#include "gridthreat/scopf.hpp"
#include "gridthreat/state_estimation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gridthreat {

struct ContingencyLoading {
  int line = 0;
  int outage = 0;
  double flow = 0.0;
  double loading = 0.0;  // |flow| / cap
};

/// Every non-islanding (i, k), sorted by loading descending.
std::vector<ContingencyLoading> contingency_screen(const GridCase& grid,
                                                   const PowerFlowState& state,
                                                   const LodfMatrix& lodf);

/// Same pairs from full re-solves with the outaged line removed.
std::vector<ContingencyLoading> contingency_screen_resolve(const GridCase& grid,
                                                           const PowerFlowState& state);

struct VerifyOptions {
  std::optional<double> overload_margin;  // default: the case's delta_l
  EstimatorOptions estimator;
};

struct VerificationReport {
  bool stealthy = false;
  double stealth_residual_change = 0.0;

  // EMS view: true SCOPF on the attacked loads.
  std::optional<ScopfSolution> ems_view;
  std::string ems_error;
  std::vector<ContingencyLoading> ems_screen;
  double ems_max_loading = 0.0;

  // True system under the vector's own dispatch.
  PowerFlowState true_base;
  std::vector<ContingencyLoading> true_screen;
  double true_base_max_loading = 0.0;
  std::vector<OverloadPair> confirmed_overloads;

  // True system under the EMS-optimal dispatch.
  std::vector<OverloadPair> ems_dispatch_overloads;

  double oracle_gap = 0.0;  // max |LODF path - re-solve path|, pu
  double cost_delta = 0.0;
  double ems_cost_delta = 0.0;
};

/// Throws ValidationError naming the broken invariant when the vector is
/// structurally invalid.
VerificationReport verify(const GridCase& grid, const ScopfSolution& pre,
                          const AttackVector& attack, const VerifyOptions& options = {});

void check_attack_invariants(const GridCase& grid, const AttackVector& attack);

/// Measurement injection a (taken measurements) and state shift c (b-1).
Eigen::VectorXd attack_injection(const GridCase& grid, const AttackVector& attack);
Eigen::VectorXd attack_state_shift(const GridCase& grid, const AttackVector& attack);

}  // namespace gridthreat
