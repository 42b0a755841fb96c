#pragma once

#include "gridthreat/grid_model.hpp"
#include "gridthreat/scopf.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace gridthreat {

/// (line i, outage k) with the true post-contingency flow on i.
struct OverloadPair {
  int line = 0;
  int outage = 0;
  double flow = 0.0;
  double capacity = 0.0;

  double percent_of_capacity() const;  // 100 |flow| / cap
  double percent_over() const;         // percent_of_capacity - 100
};

struct AttackVector {
  std::vector<int> attacked_subset;  // bus subset the search granted
  Eigen::VectorXd delta_theta;       // per bus, slack 0
  Eigen::VectorXd delta_line;        // per line
  Eigen::VectorXd delta_bus;         // per bus, equals the load shift
  std::vector<bool> altered;         // per measurement
  std::vector<bool> corrupted;       // per bus state
  std::vector<bool> compromised;     // per bus
  Eigen::VectorXd attacked_load;     // per bus
  Eigen::VectorXd corrupted_dispatch;
  double corrupted_cost = 0.0;
  std::vector<OverloadPair> overload_pairs;  // every true overload
  std::vector<std::pair<int, int>> targets;  // (line, outage) pairs the search aimed at
  std::vector<int> target_signs;

  int altered_count() const;
  int compromised_count() const;
};

struct SynthesisGoal {
  int min_overload_pairs = 1;   // T_L
  double overload_margin = 0;   // delta_l
  double cost_budget = 0;       // dollars
};

/// T_L, delta_l and the budget as written in the case (a negative budget
/// falls back to the pre-attack cost).
SynthesisGoal goal_from_case(const GridCase& grid, const ScopfSolution& pre);

struct SearchOptions {
  int workers = 1;
};

struct UnsatCertificate {
  int max_buses = 0;
  long long subsets_explored = 0;
  long long subsets_with_freedom = 0;  // subsets whose attack subspace is nonzero
  long long subspaces_solved = 0;
};

struct SynthesisResult {
  bool sat = false;
  std::optional<AttackVector> witness;
  UnsatCertificate certificate;
};

/// Aggregate view of the attack space without building every vector.
struct AttackSpaceSummary {
  long long count = 0;
  std::vector<long long> bus_frequency;  // per bus, over counted vectors
  Eigen::MatrixXi heatmap;               // (outage k, overloaded line i), 0-based
  UnsatCertificate certificate;
};

SynthesisResult synthesize(const GridCase& grid, const ScopfSolution& pre,
                           const SynthesisGoal& goal, const SearchOptions& options = {});

std::vector<AttackVector> enumerate_attack_space(const GridCase& grid, const ScopfSolution& pre,
                                                 const SynthesisGoal& goal,
                                                 const SearchOptions& options = {});

AttackSpaceSummary summarize_attack_space(const GridCase& grid, const ScopfSolution& pre,
                                          const SynthesisGoal& goal,
                                          const SearchOptions& options = {});

/// Builds the vector implied by replacing the true loads with
/// `attacked_load` and dispatching `dispatch`. Overloads use `margin`.
AttackVector attack_from_load_shift(const GridCase& grid, const Eigen::VectorXd& attacked_load,
                                    const Eigen::VectorXd& dispatch, double margin);

/// True post-contingency overloads (|flow| > (1+margin) cap) under the
/// real loads and `dispatch`, LODF path.
std::vector<OverloadPair> true_overloads(const GridCase& grid, const Eigen::VectorXd& dispatch,
                                         double margin);

}  // namespace gridthreat
