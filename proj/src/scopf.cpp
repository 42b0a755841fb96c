#include "gridthreat/scopf.hpp"

#include "gridthreat/error.hpp"
#include "gridthreat/grid_model.hpp"
#include "gridthreat/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace gridthreat {

double evaluate_cost(const GridCase& grid, const Eigen::VectorXd& dispatch) {
  if (dispatch.size() != grid.num_buses()) {
    throw ValidationError("dispatch needs one entry per bus");
  }
  double total = 0.0;
  for (int j = 1; j <= grid.num_buses(); ++j) {
    const double p = dispatch[j - 1];
    const Generator* g = grid.generator_at(j);
    if (p == 0.0) continue;
    if (!g) {
      throw ValidationError("bus " + std::to_string(j) + " has no generator but is dispatched");
    }
    if (p < g->p_min - 1e-9 || p > g->p_max + 1e-9) {
      throw ValidationError("generator at bus " + std::to_string(j) +
                            " is dispatched outside {0} U [p_min, p_max]");
    }
    total += g->alpha + g->beta * p;
  }
  return total;
}

SecurityRows build_security_rows(const GridCase& grid, const LodfMatrix& lodf,
                                 bool contingencies) {
  const Eigen::MatrixXd ptdf = build_ptdf(grid);
  const int l = grid.num_lines();
  const std::vector<int> outages = contingencies ? lodf.contingencies() : std::vector<int>{};
  const int rows = l + static_cast<int>(outages.size()) * (l - 1);
  SecurityRows out;
  out.coeffs.resize(rows, grid.num_buses());
  out.line.reserve(rows);
  int r = 0;
  for (int i = 1; i <= l; ++i) {
    out.coeffs.row(r++) = ptdf.row(i - 1);
    out.line.push_back(i);
    out.outage.push_back(0);
    out.capacity.push_back(grid.lines[i - 1].capacity);
  }
  for (int k : outages) {
    for (int i = 1; i <= l; ++i) {
      if (i == k) continue;
      out.coeffs.row(r++) = ptdf.row(i - 1) + lodf.factors(i - 1, k - 1) * ptdf.row(k - 1);
      out.line.push_back(i);
      out.outage.push_back(k);
      out.capacity.push_back(grid.lines[i - 1].capacity);
    }
  }
  return out;
}

namespace {

struct Candidate {
  Eigen::VectorXd dispatch;
  double cost = 0.0;
  unsigned mask = 0;
};

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a[j] < b[j] - 1e-9) return true;
    if (a[j] > b[j] + 1e-9) return false;
  }
  return false;
}

void check_loads(const GridCase& grid, const Eigen::VectorXd& loads) {
  if (loads.size() != grid.num_buses()) throw ValidationError("load vector needs one entry per bus");
  for (int j = 1; j <= grid.num_buses(); ++j) {
    const LoadSpec* d = grid.load_at(j);
    const double p = loads[j - 1];
    if (!d) {
      if (std::abs(p) > 1e-12) {
        throw ValidationError("bus " + std::to_string(j) + " has no load record but carries load");
      }
      continue;
    }
    if (p < d->min - 1e-9 || p > d->max + 1e-9) {
      throw ValidationError("load at bus " + std::to_string(j) + " is outside its rating");
    }
  }
}

// Adds the flow rows for the committed generators. Returns false when a
// row has no generator dependence and is already violated.
bool add_flow_rows(LinearProgram& lp, const SecurityRows& rows, const std::vector<int>& gen_bus,
                   const Eigen::VectorXd& loads, double tol) {
  const int s = static_cast<int>(gen_bus.size());
  Eigen::RowVectorXd a(s);
  for (int r = 0; r < rows.size(); ++r) {
    for (int j = 0; j < s; ++j) a[j] = rows.coeffs(r, gen_bus[j] - 1);
    const double c0 = -rows.coeffs.row(r).dot(loads);
    const double cap = rows.capacity[r];
    if (a.cwiseAbs().maxCoeff() < 1e-12) {
      if (std::abs(c0) > cap + tol) return false;
      continue;
    }
    lp.add_row(a, -cap - c0, cap - c0);
  }
  return true;
}

std::string infeasibility_hint(const GridCase& grid, const SecurityRows& rows,
                               const Eigen::VectorXd& loads) {
  std::vector<int> gen_bus;
  for (const auto& g : grid.generators) gen_bus.push_back(g.bus);
  const int s = static_cast<int>(gen_bus.size());
  LinearProgram lp(s);
  for (int j = 0; j < s; ++j) lp.set_bounds(j, 0.0, grid.generators[j].p_max);
  lp.add_row(Eigen::RowVectorXd::Ones(s), loads.sum(), loads.sum());
  // Row 0 is balance, then one LP row per security row with generator terms.
  std::vector<int> source;
  Eigen::RowVectorXd a(s);
  for (int r = 0; r < rows.size(); ++r) {
    for (int j = 0; j < s; ++j) a[j] = rows.coeffs(r, gen_bus[j] - 1);
    const double c0 = -rows.coeffs.row(r).dot(loads);
    if (a.cwiseAbs().maxCoeff() < 1e-12) {
      if (std::abs(c0) > rows.capacity[r]) {
        std::ostringstream os;
        os << "line " << rows.line[r];
        if (rows.outage[r]) os << " under outage of line " << rows.outage[r];
        os << " exceeds its capacity regardless of dispatch";
        return os.str();
      }
      continue;
    }
    lp.add_row(a, -rows.capacity[r] - c0, rows.capacity[r] - c0);
    source.push_back(r);
  }
  lp.set_objective(Eigen::VectorXd::Zero(s));
  if (lp.solve() == LpStatus::Optimal) {
    return "relaxed problem is feasible; generator minimum outputs conflict with the load";
  }
  const auto viol = lp.violated_rows();
  if (viol.empty()) return "no violated constraint identified";
  const auto [row, amount] = viol.front();
  std::ostringstream os;
  if (row == 0) {
    os << "generation capacity cannot balance the load";
  } else {
    const int r = source[row - 1];
    os << "line " << rows.line[r];
    if (rows.outage[r]) os << " under outage of line " << rows.outage[r];
    os << " stays over its limit by at least " << amount << " pu";
  }
  return os.str();
}

}  // namespace

ScopfSolution solve_scopf(const GridCase& grid, const Eigen::VectorXd& loads,
                          const ScopfOptions& options) {
  return solve_scopf(grid, compute_lodf(grid), loads, options);
}

ScopfSolution solve_scopf(const GridCase& grid, const LodfMatrix& lodf,
                          const Eigen::VectorXd& loads, const ScopfOptions& options) {
  check_loads(grid, loads);
  const int ng = static_cast<int>(grid.generators.size());
  if (ng > 12) throw ValidationError("commitment enumeration supports at most 12 generators");
  const double total_load = loads.sum();
  const SecurityRows rows = build_security_rows(grid, lodf, options.contingencies);
  const double tol = options.feasibility_tol;

  std::optional<Candidate> best;
  for (unsigned mask = 1; mask < (1u << ng); ++mask) {
    std::vector<int> gen_bus;
    double pmin = 0.0, pmax = 0.0, alpha = 0.0;
    for (int g = 0; g < ng; ++g) {
      if (!(mask & (1u << g))) continue;
      gen_bus.push_back(grid.generators[g].bus);
      pmin += grid.generators[g].p_min;
      pmax += grid.generators[g].p_max;
      alpha += grid.generators[g].alpha;
    }
    if (pmin > total_load + 1e-9 || pmax < total_load - 1e-9) continue;
    const int s = static_cast<int>(gen_bus.size());
    LinearProgram lp(s);
    Eigen::VectorXd beta(s);
    for (int j = 0; j < s; ++j) {
      const Generator* g = grid.generator_at(gen_bus[j]);
      lp.set_bounds(j, g->p_min, g->p_max);
      beta[j] = g->beta;
    }
    lp.add_row(Eigen::RowVectorXd::Ones(s), total_load, total_load);
    if (!add_flow_rows(lp, rows, gen_bus, loads, tol)) continue;
    lp.set_objective(beta);
    if (lp.solve() != LpStatus::Optimal) continue;
    const double opt = lp.objective_value();
    if (best && alpha + opt > best->cost + 1e-7) continue;

    // Lexicographic tie-break among optimal dispatches, by bus order.
    const Eigen::VectorXd x0 = lp.solution();
    lp.add_row(beta.transpose(), -LinearProgram::kInf, opt + 1e-12 * std::max(1.0, std::abs(opt)));
    for (int j = 0; j < s; ++j) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(s);
      c[j] = 1.0;
      lp.set_objective(c);
      if (lp.solve() != LpStatus::Optimal) break;
      const double v = lp.solution()[j];
      lp.set_bounds(j, v, v);
    }
    Candidate cand;
    cand.dispatch = Eigen::VectorXd::Zero(grid.num_buses());
    Eigen::VectorXd x = lp.solution();
    // A move this small is slack in the cost row, not a distinct optimum.
    if ((x - x0).cwiseAbs().maxCoeff() < 1e-7) x = x0;
    for (int j = 0; j < s; ++j) cand.dispatch[gen_bus[j] - 1] = x[j];
    cand.cost = alpha + beta.dot(x);
    cand.mask = mask;
    if (!best || cand.cost < best->cost - 1e-7 || lex_less(cand.dispatch, best->dispatch)) {
      best = cand;
    }
  }
  if (!best) {
    throw InfeasibleError(infeasibility_hint(grid, rows, loads), "no secure dispatch exists");
  }

  ScopfSolution sol;
  sol.dispatch = best->dispatch;
  // Clean values within tolerance of a limit so cost evaluation is exact.
  for (int j = 1; j <= grid.num_buses(); ++j) {
    const Generator* g = grid.generator_at(j);
    if (!g) continue;
    double& p = sol.dispatch[j - 1];
    if (std::abs(p) < 1e-12) p = 0.0;
    if (std::abs(p - g->p_max) < 1e-10) p = g->p_max;
    if (std::abs(p - g->p_min) < 1e-10 && p != 0.0) p = g->p_min;
  }
  sol.cost = evaluate_cost(grid, sol.dispatch);
  for (int g = 0; g < ng; ++g) {
    if (best->mask & (1u << g)) sol.committed.push_back(grid.generators[g].bus);
  }
  for (int k = 0; k < lodf.size(); ++k) {
    if (lodf.islanding[k]) sol.islanding_outages.push_back(k + 1);
  }
  // Balance exactly before the flow solve; the LP holds it to ~1e-12.
  sol.flows = solve_powerflow(grid, sol.dispatch, loads);

  const Eigen::VectorXd net = sol.dispatch - loads;
  for (int r = 0; r < rows.size(); ++r) {
    const double f = rows.coeffs.row(r).dot(net);
    if (std::abs(f) >= rows.capacity[r] - 1e-7) {
      sol.binding.push_back({rows.outage[r] ? "contingency_flow" : "base_flow", rows.line[r],
                             rows.outage[r], f, f >= 0 ? rows.capacity[r] : -rows.capacity[r]});
    }
  }
  for (int bus : sol.committed) {
    const Generator* g = grid.generator_at(bus);
    const double p = sol.dispatch[bus - 1];
    if (std::abs(p - g->p_max) < 1e-7) sol.binding.push_back({"gen_max", bus, 0, p, g->p_max});
    else if (std::abs(p - g->p_min) < 1e-7) sol.binding.push_back({"gen_min", bus, 0, p, g->p_min});
  }
  return sol;
}

double security_violation(const GridCase& grid, const Eigen::VectorXd& dispatch,
                          const Eigen::VectorXd& loads, bool contingencies) {
  double worst = std::abs(dispatch.sum() - loads.sum());
  for (int j = 1; j <= grid.num_buses(); ++j) {
    const Generator* g = grid.generator_at(j);
    const double p = dispatch[j - 1];
    if (!g) {
      worst = std::max(worst, std::abs(p));
    } else if (p != 0.0) {
      worst = std::max({worst, g->p_min - p, p - g->p_max});
    }
  }
  Eigen::VectorXd consumption = loads - dispatch;
  consumption.array() -= consumption.mean();  // absorb rounding so the solve accepts it
  const PowerFlowState base = solve_consumption(grid, consumption);
  for (const auto& ln : grid.lines) {
    worst = std::max(worst, std::abs(base.line_flow[ln.id - 1]) - ln.capacity);
  }
  if (!contingencies) return std::max(worst, 0.0);
  const std::vector<bool> bridges = find_bridges(grid);
  for (const auto& out : grid.lines) {
    if (bridges[out.id - 1]) continue;
    const PowerFlowState post = solve_consumption(grid, consumption, out.id);
    for (const auto& ln : grid.lines) {
      if (ln.id == out.id) continue;
      worst = std::max(worst, std::abs(post.line_flow[ln.id - 1]) - ln.capacity);
    }
  }
  return std::max(worst, 0.0);
}

}  // namespace gridthreat
