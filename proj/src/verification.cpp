#include "gridthreat/verification.hpp"

#include "gridthreat/error.hpp"

#include <algorithm>
#include <cmath>

namespace gridthreat {

namespace {

void sort_screen(std::vector<ContingencyLoading>& out) {
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.loading != b.loading) return a.loading > b.loading;
    if (a.outage != b.outage) return a.outage < b.outage;
    return a.line < b.line;
  });
}

Eigen::VectorXd balanced(const Eigen::VectorXd& consumption) {
  Eigen::VectorXd c = consumption;
  c.array() -= c.mean();
  return c;
}

std::vector<OverloadPair> overloads_from(const GridCase& grid,
                                         const std::vector<ContingencyLoading>& lodf_path,
                                         const std::vector<ContingencyLoading>& resolve_path,
                                         double margin) {
  std::vector<OverloadPair> out;
  for (const auto& c : lodf_path) {
    const double cap = grid.lines[c.line - 1].capacity;
    const double limit = (1.0 + margin) * cap + 1e-7;
    if (std::abs(c.flow) <= limit) continue;
    auto it = std::find_if(resolve_path.begin(), resolve_path.end(), [&](const auto& r) {
      return r.line == c.line && r.outage == c.outage;
    });
    if (it == resolve_path.end() || std::abs(it->flow) <= limit) continue;
    out.push_back({c.line, c.outage, c.flow, cap});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::make_pair(a.outage, a.line) < std::make_pair(b.outage, b.line);
  });
  return out;
}

double max_gap(const std::vector<ContingencyLoading>& a, const std::vector<ContingencyLoading>& b) {
  double gap = 0.0;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x.line == y.line && x.outage == y.outage) gap = std::max(gap, std::abs(x.flow - y.flow));
    }
  }
  return gap;
}

}  // namespace

std::vector<ContingencyLoading> contingency_screen(const GridCase& grid,
                                                   const PowerFlowState& state,
                                                   const LodfMatrix& lodf) {
  std::vector<ContingencyLoading> out;
  for (int k : lodf.contingencies()) {
    const Eigen::VectorXd post = post_contingency_flows(state, lodf, k);
    for (const auto& ln : grid.lines) {
      if (ln.id == k) continue;
      const double f = post[ln.id - 1];
      out.push_back({ln.id, k, f, std::abs(f) / ln.capacity});
    }
  }
  sort_screen(out);
  return out;
}

std::vector<ContingencyLoading> contingency_screen_resolve(const GridCase& grid,
                                                           const PowerFlowState& state) {
  std::vector<ContingencyLoading> out;
  const std::vector<bool> bridges = find_bridges(grid);
  const Eigen::VectorXd consumption = balanced(state.injection);
  for (const auto& outage : grid.lines) {
    if (bridges[outage.id - 1]) continue;
    const PowerFlowState post = solve_consumption(grid, consumption, outage.id);
    for (const auto& ln : grid.lines) {
      if (ln.id == outage.id) continue;
      const double f = post.line_flow[ln.id - 1];
      out.push_back({ln.id, outage.id, f, std::abs(f) / ln.capacity});
    }
  }
  sort_screen(out);
  return out;
}

void check_attack_invariants(const GridCase& grid, const AttackVector& v) {
  const int b = grid.num_buses();
  const int l = grid.num_lines();
  const int m = grid.num_measurements();
  auto fail = [](const std::string& what) {
    throw ValidationError("attack invariant violated: " + what);
  };
  if (v.delta_theta.size() != b || v.delta_bus.size() != b || v.delta_line.size() != l ||
      v.attacked_load.size() != b || v.corrupted_dispatch.size() != b ||
      static_cast<int>(v.altered.size()) != m || static_cast<int>(v.compromised.size()) != b ||
      static_cast<int>(v.corrupted.size()) != b) {
    fail("field sizes do not match the case");
  }
  if (std::abs(v.delta_theta[grid.slack_bus - 1]) > 1e-12) fail("slack angle shifted");
  if ((line_flows(grid, v.delta_theta) - v.delta_line).cwiseAbs().maxCoeff() > 1e-8) {
    fail("line deltas do not follow the angle shift");
  }
  if ((consumption_from_flows(grid, v.delta_line) - v.delta_bus).cwiseAbs().maxCoeff() > 1e-8) {
    fail("bus deltas are not the sum of line deltas");
  }
  if (std::abs(v.delta_bus.sum()) > 1e-8) fail("bus deltas do not sum to zero");
  const Eigen::VectorXd load = grid.load_vector();
  if ((v.attacked_load - load - v.delta_bus).cwiseAbs().maxCoeff() > 1e-8) {
    fail("attacked load differs from load plus bus delta");
  }
  for (int j = 1; j <= b; ++j) {
    const double d = v.delta_bus[j - 1];
    const LoadSpec* spec = grid.load_at(j);
    const double cap = spec ? grid.attacker.delta_b * spec->current : 0.0;
    if (std::abs(d) > cap + 1e-8) fail("load shift at bus " + std::to_string(j) + " exceeds delta_b");
    if (spec && (v.attacked_load[j - 1] < spec->min - 1e-8 ||
                 v.attacked_load[j - 1] > spec->max + 1e-8)) {
      fail("attacked load at bus " + std::to_string(j) + " outside its rating");
    }
  }
  int altered = 0;
  std::vector<bool> meters(b, false);
  for (int idx = 1; idx <= m; ++idx) {
    const int e = grid.measurement_element(idx);
    double delta = 0.0;
    switch (grid.measurement_kind(idx)) {
      case MeasurementKind::ForwardFlow: delta = v.delta_line[e - 1]; break;
      case MeasurementKind::BackwardFlow: delta = -v.delta_line[e - 1]; break;
      case MeasurementKind::Consumption: delta = v.delta_bus[e - 1]; break;
    }
    const MeasurementConfig& cfg = grid.measurements[idx - 1];
    if (cfg.taken && std::abs(delta) > 1e-9 && !v.altered[idx - 1]) {
      fail("measurement " + std::to_string(idx) + " changes but is not marked altered");
    }
    if (!v.altered[idx - 1]) continue;
    ++altered;
    if (!cfg.taken || !cfg.accessible || cfg.secured) {
      fail("measurement " + std::to_string(idx) + " altered without access");
    }
    meters[grid.metering_bus(idx) - 1] = true;
    if (!v.compromised[grid.metering_bus(idx) - 1]) {
      fail("measurement " + std::to_string(idx) + " altered at an uncompromised bus");
    }
  }
  if (altered > grid.attacker.max_measurements) fail("too many measurements altered");
  if (v.compromised_count() > grid.attacker.max_buses) fail("too many buses compromised");
  for (int j = 0; j < b; ++j) {
    if (v.corrupted[j] != (std::abs(v.delta_theta[j]) > 1e-9)) {
      fail("corrupted state flag of bus " + std::to_string(j + 1) + " disagrees with the shift");
    }
  }
  if (std::abs(v.corrupted_dispatch.sum() - v.attacked_load.sum()) > 1e-6) {
    fail("corrupted dispatch does not balance the attacked load");
  }
}

Eigen::VectorXd attack_injection(const GridCase& grid, const AttackVector& v) {
  std::vector<double> a;
  for (const auto& cfg : grid.measurements) {
    if (!cfg.taken) continue;
    const int e = grid.measurement_element(cfg.index);
    switch (grid.measurement_kind(cfg.index)) {
      case MeasurementKind::ForwardFlow: a.push_back(v.delta_line[e - 1]); break;
      case MeasurementKind::BackwardFlow: a.push_back(-v.delta_line[e - 1]); break;
      case MeasurementKind::Consumption: a.push_back(v.delta_bus[e - 1]); break;
    }
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

Eigen::VectorXd attack_state_shift(const GridCase& grid, const AttackVector& v) {
  return reduce_state(grid, v.delta_theta);
}

VerificationReport verify(const GridCase& grid, const ScopfSolution& pre,
                          const AttackVector& attack, const VerifyOptions& options) {
  check_attack_invariants(grid, attack);
  const double margin = options.overload_margin.value_or(grid.attacker.delta_l);
  const LodfMatrix lodf = compute_lodf(grid);
  const Eigen::VectorXd load = grid.load_vector();
  VerificationReport rep;

  // Readings of the pre-attack operating point, then the lie on top.
  const MeasurementVector z = simulate_measurements(grid, pre.flows.theta);
  const Eigen::VectorXd a = attack_injection(grid, attack);
  const Eigen::VectorXd c = attack_state_shift(grid, attack);
  rep.stealthy = stealth_check(grid, z, a, c, options.estimator);
  {
    const EstimationResult est = estimate(grid, z, options.estimator);
    const Eigen::MatrixXd H = taken_h_matrix(grid);
    const double before = (z.values - H * est.x_hat).norm();
    const double after = ((z.values + a) - H * (est.x_hat + c)).norm();
    rep.stealth_residual_change = std::abs(after - before);
  }

  // EMS optimizes on what it believes.
  try {
    rep.ems_view = solve_scopf(grid, lodf, attack.attacked_load);
    const PowerFlowState expected = rep.ems_view->flows;
    rep.ems_screen = contingency_screen(grid, expected, lodf);
    rep.ems_max_loading = rep.ems_screen.empty() ? 0.0 : rep.ems_screen.front().loading;
    rep.ems_cost_delta = rep.ems_view->cost - pre.cost;
  } catch (const InfeasibleError& e) {
    rep.ems_error = std::string(e.what()) + ": " + e.hint();
  }

  rep.true_base = solve_consumption(grid, balanced(load - attack.corrupted_dispatch));
  for (const auto& ln : grid.lines) {
    rep.true_base_max_loading =
        std::max(rep.true_base_max_loading, std::abs(rep.true_base.line_flow[ln.id - 1]) / ln.capacity);
  }
  rep.true_screen = contingency_screen(grid, rep.true_base, lodf);
  const auto resolved = contingency_screen_resolve(grid, rep.true_base);
  rep.oracle_gap = max_gap(rep.true_screen, resolved);
  rep.confirmed_overloads = overloads_from(grid, rep.true_screen, resolved, margin);
  rep.cost_delta = attack.corrupted_cost - pre.cost;

  if (rep.ems_view) {
    const PowerFlowState ems_true =
        solve_consumption(grid, balanced(load - rep.ems_view->dispatch));
    const auto lp = contingency_screen(grid, ems_true, lodf);
    const auto rs = contingency_screen_resolve(grid, ems_true);
    rep.oracle_gap = std::max(rep.oracle_gap, max_gap(lp, rs));
    rep.ems_dispatch_overloads = overloads_from(grid, lp, rs, margin);
  }
  return rep;
}

}  // namespace gridthreat
