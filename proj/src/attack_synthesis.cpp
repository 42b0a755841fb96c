#include "gridthreat/attack_synthesis.hpp"

#include "gridthreat/dc_powerflow.hpp"
#include "gridthreat/error.hpp"
#include "gridthreat/lodf.hpp"
#include "gridthreat/simplex.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

namespace gridthreat {

double OverloadPair::percent_of_capacity() const { return 100.0 * std::abs(flow) / capacity; }
double OverloadPair::percent_over() const { return percent_of_capacity() - 100.0; }

int AttackVector::altered_count() const {
  return static_cast<int>(std::count(altered.begin(), altered.end(), true));
}
int AttackVector::compromised_count() const {
  return static_cast<int>(std::count(compromised.begin(), compromised.end(), true));
}

SynthesisGoal goal_from_case(const GridCase& grid, const ScopfSolution& pre) {
  SynthesisGoal goal;
  goal.min_overload_pairs = std::max(1, grid.attacker.target_lines(grid.num_lines()));
  goal.overload_margin = grid.attacker.delta_l;
  goal.cost_budget = grid.attacker.budget_from_scopf() ? pre.cost : grid.attacker.cost_budget;
  return goal;
}

namespace {

constexpr double kTargetEps = 1e-6;   // strict overload tightened by this much
constexpr double kReportEps = 1e-7;   // overload test when replaying
constexpr double kZero = 1e-9;

using Key = std::vector<char>;  // per line then per bus: 1 = delta forced to zero

struct Subspace {
  Eigen::MatrixXd V;      // b x dim, orthonormal columns, slack row zero
  Eigen::MatrixXd D;      // b x dim, load shift per unit y
  std::vector<bool> line_nz;
  std::vector<bool> bus_nz;
  int altered = 0;        // taken measurements on the generic support
  int dim() const { return static_cast<int>(V.cols()); }
};

struct Unit {
  int row = 0;   // index into the security rows (a contingency pair)
  int sign = 1;
  unsigned mask = 0;
  Eigen::VectorXd x;  // y then committed generation
  std::vector<std::pair<int, int>> targets;
  std::vector<int> signs;
};

struct SubspaceResult {
  std::vector<Unit> units;  // sorted by (row, sign)
};

class Engine {
 public:
  Engine(const GridCase& grid, const ScopfSolution& pre, const SynthesisGoal& goal)
      : grid_(grid), goal_(goal) {
    (void)pre;
    const int l = grid.num_lines();
    const int b = grid.num_buses();
    if (goal.min_overload_pairs < 1) throw ValidationError("T_L must be at least 1");
    if (goal.overload_margin < 0.0) throw ValidationError("overload margin must be non-negative");
    if (grid.attacker.max_measurements == 0) {
      throw ValidationError("attacker may alter no measurement but must overload " +
                            std::to_string(goal.min_overload_pairs) + " pair(s)");
    }
    load_ = grid.load_vector();
    bfull_ = build_full_b_matrix(grid);
    lodf_ = compute_lodf(grid);
    rows_ = build_security_rows(grid, lodf_, true);
    for (int r = 0; r < rows_.size(); ++r) {
      if (rows_.outage[r] != 0) pair_rows_.push_back(r);
    }
    if (goal.min_overload_pairs > static_cast<int>(pair_rows_.size())) {
      throw ValidationError("goal asks for " + std::to_string(goal.min_overload_pairs) +
                            " overload pairs but only " + std::to_string(pair_rows_.size()) +
                            " non-islanding pairs exist");
    }
    dline_ = Eigen::MatrixXd::Zero(l, b);
    for (const auto& ln : grid.lines) {
      dline_(ln.id - 1, ln.from_bus - 1) = ln.admittance;
      dline_(ln.id - 1, ln.to_bus - 1) = -ln.admittance;
    }
    const double db = grid.attacker.delta_b;
    shift_lo_.resize(b);
    shift_hi_.resize(b);
    bus_can_shift_.assign(b, false);
    for (int j = 1; j <= b; ++j) {
      const LoadSpec* d = grid.load_at(j);
      if (!d) {
        shift_lo_[j - 1] = shift_hi_[j - 1] = 0.0;
        continue;
      }
      shift_lo_[j - 1] = std::max(-db * d->current, d->min - d->current);
      shift_hi_[j - 1] = std::min(db * d->current, d->max - d->current);
      bus_can_shift_[j - 1] = shift_hi_[j - 1] - shift_lo_[j - 1] > 0.0;
    }
    build_onsets();
  }

  Key key_for(const std::vector<int>& subset) const {
    const int l = grid_.num_lines();
    const int b = grid_.num_buses();
    std::vector<bool> in(b + 1, false);
    for (int j : subset) in[j] = true;
    auto blocked = [&](int index) {
      const MeasurementConfig& m = grid_.measurements[index - 1];
      if (!m.taken) return false;
      return !(m.accessible && !m.secured && in[grid_.metering_bus(index)]);
    };
    Key key(l + b, 0);
    for (int i = 1; i <= l; ++i) key[i - 1] = blocked(i) || blocked(l + i);
    for (int j = 1; j <= b; ++j) {
      key[l + j - 1] = !bus_can_shift_[j - 1] || blocked(2 * l + j);
    }
    return key;
  }

  // Subspaces to search for a key, after enforcing the measurement budget.
  std::vector<std::pair<Key, Subspace>> leaves(const Key& root) const {
    std::vector<std::pair<Key, Subspace>> out;
    std::set<Key> seen;
    std::vector<Key> stack{root};
    while (!stack.empty()) {
      Key key = stack.back();
      stack.pop_back();
      if (!seen.insert(key).second) continue;
      Subspace s = subspace(key);
      if (s.dim() == 0) continue;
      if (s.altered <= grid_.attacker.max_measurements) {
        out.emplace_back(key, std::move(s));
        continue;
      }
      // Budget binds on the generic support: branch on forcing one more
      // quantity to zero.
      const int l = grid_.num_lines();
      for (int q = static_cast<int>(key.size()) - 1; q >= 0; --q) {
        const bool nz = q < l ? s.line_nz[q] : s.bus_nz[q - l];
        if (!nz) continue;
        Key child = key;
        child[q] = 1;
        stack.push_back(std::move(child));
      }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  Subspace subspace(const Key& key) const {
    const int l = grid_.num_lines();
    const int b = grid_.num_buses();
    // Lines with zero flow change tie their end angles together.
    std::vector<int> parent(b);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& ln : grid_.lines) {
      if (key[ln.id - 1]) parent[find(ln.from_bus - 1)] = find(ln.to_bus - 1);
    }
    const int slack_root = find(grid_.slack_bus - 1);
    std::map<int, int> group;
    for (int j = 0; j < b; ++j) {
      const int r = find(j);
      if (r != slack_root && !group.count(r)) {
        const int next = static_cast<int>(group.size());
        group[r] = next;
      }
    }
    const int g = static_cast<int>(group.size());
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(b, g);
    for (int j = 0; j < b; ++j) {
      const int r = find(j);
      if (r != slack_root) E(j, group[r]) = 1.0;
    }
    Subspace s;
    s.line_nz.assign(l, false);
    s.bus_nz.assign(b, false);
    if (g == 0) {
      s.V = Eigen::MatrixXd::Zero(b, 0);
      return s;
    }
    std::vector<int> zero_buses;
    for (int j = 0; j < b; ++j) {
      if (key[l + j]) zero_buses.push_back(j);
    }
    Eigen::MatrixXd N;
    if (zero_buses.empty()) {
      N = Eigen::MatrixXd::Identity(g, g);
    } else {
      Eigen::MatrixXd C(zero_buses.size(), g);
      for (size_t r = 0; r < zero_buses.size(); ++r) C.row(r) = bfull_.row(zero_buses[r]) * E;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double cut = 1e-10 * std::max(1.0, sv.size() ? sv[0] : 0.0);
      int rank = 0;
      for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv[k] > cut) ++rank;
      }
      N = svd.matrixV().rightCols(g - rank);
    }
    if (N.cols() > 0) {
      // Orthonormalize in bus coordinates so row norms are comparable.
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(E * N);
      s.V = qr.householderQ() * Eigen::MatrixXd::Identity(b, N.cols());
      canonical_signs(s.V);
    } else {
      s.V = Eigen::MatrixXd::Zero(b, 0);
      return s;
    }
    s.D = -bfull_ * s.V;
    const Eigen::MatrixXd dl = dline_ * s.V;
    for (int i = 0; i < l; ++i) s.line_nz[i] = dl.row(i).norm() > kZero;
    for (int j = 0; j < b; ++j) s.bus_nz[j] = s.D.row(j).norm() > kZero;
    for (int i = 0; i < l; ++i) {
      if (!s.line_nz[i]) continue;
      s.altered += grid_.measurements[i].taken + grid_.measurements[l + i].taken;
    }
    for (int j = 0; j < b; ++j) {
      if (s.bus_nz[j]) s.altered += grid_.measurements[2 * l + j].taken;
    }
    return s;
  }

  SubspaceResult solve(const Subspace& s) const {
    SubspaceResult res;
    const int t = goal_.min_overload_pairs;
    std::map<std::pair<int, int>, Unit> found;

    // Per pair: can the load shift move this flow far enough at all?
    std::vector<std::pair<int, int>> targets;
    const double db = grid_.attacker.delta_b;
    (void)db;
    for (int r : pair_rows_) {
      const double need = goal_.overload_margin * rows_.capacity[r] + kTargetEps;
      const Eigen::RowVectorXd rd = rows_.coeffs.row(r) * s.D;
      // Max of +-R D y over the per-bus shift box.
      double up = 0.0, down = 0.0;
      const Eigen::RowVectorXd R = rows_.coeffs.row(r);
      for (int j = 0; j < grid_.num_buses(); ++j) {
        if (!s.bus_nz[j]) continue;
        up += std::max(R[j] * shift_hi_[j], R[j] * shift_lo_[j]);
        down += std::max(-R[j] * shift_hi_[j], -R[j] * shift_lo_[j]);
      }
      if (rd.norm() <= kZero) continue;
      if (up >= need) targets.emplace_back(r, 1);
      if (down >= need) targets.emplace_back(r, -1);
    }
    if (targets.empty()) return res;

    for (unsigned mask : onsets_) {
      auto lp_opt = build_lp(s, mask);
      if (!lp_opt) continue;
      LinearProgram& lp = *lp_opt;
      const std::vector<int>& gens = onset_buses_.at(mask);
      const int dim = s.dim();
      const int ns = static_cast<int>(gens.size());

      std::vector<std::pair<int, int>> singles;
      std::vector<Eigen::VectorXd> single_x;
      for (const auto& [r, sign] : targets) {
        if (t == 1 && found.count({r, sign})) continue;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(dim + ns);
        for (int j = 0; j < ns; ++j) c[dim + j] = -sign * rows_.coeffs(r, gens[j] - 1);
        if (quick_bound(c.tail(ns), gens) < threshold(r, sign)) continue;
        lp.set_objective(c);
        if (lp.solve() != LpStatus::Optimal) continue;
        if (-lp.objective_value() >= threshold(r, sign)) {
          singles.emplace_back(r, sign);
          single_x.push_back(lp.solution());
        }
      }
      if (t == 1) {
        for (size_t q = 0; q < singles.size(); ++q) {
          Unit u;
          u.row = singles[q].first;
          u.sign = singles[q].second;
          u.mask = mask;
          u.x = single_x[q];
          u.targets = {{rows_.line[u.row], rows_.outage[u.row]}};
          u.signs = {u.sign};
          found.emplace(singles[q], std::move(u));
        }
        continue;
      }
      cover_sets(lp, s, mask, singles, found);
    }
    for (auto& [k, u] : found) res.units.push_back(std::move(u));
    return res;
  }

  AttackVector build_vector(const std::vector<int>& subset, const Subspace& s,
                            const Unit& u) const {
    const int dim = s.dim();
    const std::vector<int>& gens = onset_buses_.at(u.mask);
    Eigen::VectorXd dispatch = Eigen::VectorXd::Zero(grid_.num_buses());
    for (size_t j = 0; j < gens.size(); ++j) {
      const Generator* g = grid_.generator_at(gens[j]);
      dispatch[gens[j] - 1] = std::clamp(u.x[dim + j], g->p_min, g->p_max);
    }
    const Eigen::VectorXd y = u.x.head(dim);
    Eigen::VectorXd shift = s.D * y;
    for (Eigen::Index j = 0; j < shift.size(); ++j) {
      if (std::abs(shift[j]) < 1e-13) shift[j] = 0.0;
    }
    AttackVector v = attack_from_load_shift(grid_, load_ + shift, dispatch, goal_.overload_margin);
    v.attacked_subset = subset;
    v.targets = u.targets;
    v.target_signs = u.signs;
    return v;
  }

  const GridCase& grid() const { return grid_; }

 private:
  double threshold(int r, int sign) const {
    // s * R (g - P^D) >= (1 + delta_l) cap + eps, written on R g.
    const double base = rows_.coeffs.row(r).dot(load_);
    return (1.0 + goal_.overload_margin) * rows_.capacity[r] + kTargetEps + sign * base;
  }

  // Upper bound of -c'g over the commitment box with the balance row.
  double quick_bound(const Eigen::VectorXd& c, const std::vector<int>& gens) const {
    const int ns = static_cast<int>(gens.size());
    std::vector<int> order(ns);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });
    double rest = load_.sum();
    double value = 0.0;
    std::vector<double> p(ns);
    for (int j = 0; j < ns; ++j) {
      p[j] = grid_.generator_at(gens[j])->p_min;
      rest -= p[j];
    }
    for (int j : order) {
      const double room = grid_.generator_at(gens[j])->p_max - p[j];
      const double add = std::clamp(rest, 0.0, room);
      p[j] += add;
      rest -= add;
    }
    for (int j = 0; j < ns; ++j) value -= c[j] * p[j];
    return value + 1e-9;
  }

  void build_onsets() {
    const int ng = static_cast<int>(grid_.generators.size());
    if (ng > 12) throw ValidationError("commitment enumeration supports at most 12 generators");
    const double total = load_.sum();
    for (unsigned mask = 1; mask < (1u << ng); ++mask) {
      std::vector<int> buses;
      double pmin = 0.0, pmax = 0.0, alpha = 0.0;
      std::vector<std::pair<double, int>> merit;
      for (int g = 0; g < ng; ++g) {
        if (!(mask & (1u << g))) continue;
        const Generator& gen = grid_.generators[g];
        buses.push_back(gen.bus);
        pmin += gen.p_min;
        pmax += gen.p_max;
        alpha += gen.alpha;
        merit.emplace_back(gen.beta, g);
      }
      if (pmin > total + 1e-9 || pmax < total - 1e-9) continue;
      std::sort(merit.begin(), merit.end());
      double cost = alpha;
      double rest = total - pmin;
      for (const auto& [beta, g] : merit) cost += beta * grid_.generators[g].p_min;
      for (const auto& [beta, g] : merit) {
        const double add = std::min(rest, grid_.generators[g].p_max - grid_.generators[g].p_min);
        cost += beta * add;
        rest -= add;
      }
      if (cost > goal_.cost_budget + 1e-9) continue;
      onsets_.push_back(mask);
      onset_buses_[mask] = buses;
      onset_alpha_[mask] = alpha;
    }
  }

  std::optional<LinearProgram> build_lp(const Subspace& s, unsigned mask) const {
    const std::vector<int>& gens = onset_buses_.at(mask);
    const int dim = s.dim();
    const int ns = static_cast<int>(gens.size());
    const int nv = dim + ns;
    LinearProgram lp(nv);
    for (int j = 0; j < ns; ++j) {
      const Generator* g = grid_.generator_at(gens[j]);
      lp.set_bounds(dim + j, g->p_min, g->p_max);
    }
    Eigen::RowVectorXd a(nv);
    // Expected flows (EMS view) in base case and every contingency.
    const Eigen::MatrixXd RD = rows_.coeffs * s.D;
    for (int r = 0; r < rows_.size(); ++r) {
      a.head(dim) = -RD.row(r);
      for (int j = 0; j < ns; ++j) a[dim + j] = rows_.coeffs(r, gens[j] - 1);
      const double c0 = -rows_.coeffs.row(r).dot(load_);
      const double cap = rows_.capacity[r];
      if (a.cwiseAbs().maxCoeff() < 1e-12) {
        if (std::abs(c0) > cap) return std::nullopt;
        continue;
      }
      lp.add_row(a, -cap - c0, cap - c0);
    }
    // True base-case flows.
    for (int r = 0; r < rows_.size(); ++r) {
      if (rows_.outage[r] != 0) continue;
      a.head(dim).setZero();
      for (int j = 0; j < ns; ++j) a[dim + j] = rows_.coeffs(r, gens[j] - 1);
      const double c0 = -rows_.coeffs.row(r).dot(load_);
      const double cap = rows_.capacity[r];
      if (a.cwiseAbs().maxCoeff() < 1e-12) {
        if (std::abs(c0) > cap) return std::nullopt;
        continue;
      }
      lp.add_row(a, -cap - c0, cap - c0);
    }
    // Per-bus load shift: within delta_b and the load rating.
    for (int j = 0; j < grid_.num_buses(); ++j) {
      if (!s.bus_nz[j]) continue;
      a.setZero();
      a.head(dim) = s.D.row(j);
      lp.add_row(a, shift_lo_[j], shift_hi_[j]);
    }
    a.setZero();
    a.tail(ns).setOnes();
    lp.add_row(a, load_.sum(), load_.sum());
    for (int j = 0; j < ns; ++j) a[dim + j] = grid_.generator_at(gens[j])->beta;
    lp.add_row(a, -LinearProgram::kInf, goal_.cost_budget - onset_alpha_.at(mask));
    lp.set_objective(Eigen::VectorXd::Zero(nv));
    if (lp.solve() != LpStatus::Optimal) return std::nullopt;
    return lp;
  }

  void cover_sets(const LinearProgram& lp, const Subspace& s, unsigned mask,
                  const std::vector<std::pair<int, int>>& singles,
                  std::map<std::pair<int, int>, Unit>& found) const {
    const int t = goal_.min_overload_pairs;
    if (static_cast<int>(singles.size()) < t) return;
    const std::vector<int>& gens = onset_buses_.at(mask);
    const int dim = s.dim();
    const int ns = static_cast<int>(gens.size());
    auto target_row = [&](int q) {
      const auto [r, sign] = singles[q];
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(dim + ns);
      for (int j = 0; j < ns; ++j) a[dim + j] = sign * rows_.coeffs(r, gens[j] - 1);
      return a;
    };
    const int n = static_cast<int>(singles.size());
    std::vector<int> chosen;
    // Depth-first search for a feasible t-set containing `anchor`.
    std::function<bool(const LinearProgram&, int)> extend = [&](const LinearProgram& cur,
                                                                 int start) -> bool {
      if (static_cast<int>(chosen.size()) == t) {
        const Eigen::VectorXd x = cur.solution();
        for (int q : chosen) {
          if (found.count(singles[q])) continue;
          Unit u;
          u.row = singles[q].first;
          u.sign = singles[q].second;
          u.mask = mask;
          u.x = x;
          for (int c : chosen) {
            u.targets.emplace_back(rows_.line[singles[c].first], rows_.outage[singles[c].first]);
            u.signs.push_back(singles[c].second);
          }
          found.emplace(singles[q], std::move(u));
        }
        return true;
      }
      for (int q = start; q < n; ++q) {
        if (std::find(chosen.begin(), chosen.end(), q) != chosen.end()) continue;
        bool clash = false;
        for (int c : chosen) clash |= singles[c].first == singles[q].first;
        if (clash) continue;
        if (n - q < t - static_cast<int>(chosen.size())) break;
        LinearProgram next = cur;
        const auto [r, sign] = singles[q];
        next.add_row(target_row(q), threshold(r, sign), LinearProgram::kInf);
        if (next.solve() != LpStatus::Optimal) continue;
        chosen.push_back(q);
        const bool ok = extend(next, q + 1);
        chosen.pop_back();
        if (ok) return true;
      }
      return false;
    };
    LinearProgram base = lp;
    base.set_objective(Eigen::VectorXd::Zero(dim + ns));
    for (int anchor = 0; anchor < n; ++anchor) {
      if (found.count(singles[anchor])) continue;
      LinearProgram with = base;
      const auto [r, sign] = singles[anchor];
      with.add_row(target_row(anchor), threshold(r, sign), LinearProgram::kInf);
      if (with.solve() != LpStatus::Optimal) continue;
      chosen = {anchor};
      extend(with, 0);
    }
  }

  static void canonical_signs(Eigen::MatrixXd& V) {
    for (Eigen::Index c = 0; c < V.cols(); ++c) {
      Eigen::Index idx = 0;
      V.col(c).cwiseAbs().maxCoeff(&idx);
      if (V(idx, c) < 0) V.col(c) *= -1.0;
    }
  }

  const GridCase& grid_;
  SynthesisGoal goal_;
  Eigen::VectorXd load_;
  Eigen::MatrixXd bfull_;
  Eigen::MatrixXd dline_;
  LodfMatrix lodf_;
  SecurityRows rows_;
  std::vector<int> pair_rows_;
  Eigen::VectorXd shift_lo_, shift_hi_;
  std::vector<bool> bus_can_shift_;
  std::vector<unsigned> onsets_;
  std::map<unsigned, std::vector<int>> onset_buses_;
  std::map<unsigned, double> onset_alpha_;
};

// Bus subsets of size <= k, by size then lexicographically.
std::vector<std::vector<int>> bus_subsets(int b, int k) {
  std::vector<std::vector<int>> out;
  k = std::min(k, b);
  for (int size = 0; size <= k; ++size) {
    std::vector<int> cur(size);
    std::iota(cur.begin(), cur.end(), 1);
    while (true) {
      out.push_back(cur);
      int i = size - 1;
      while (i >= 0 && cur[i] == b - size + i + 1) --i;
      if (i < 0) break;
      ++cur[i];
      for (int j = i + 1; j < size; ++j) cur[j] = cur[j - 1] + 1;
    }
  }
  return out;
}

struct SolvedKey {
  std::vector<std::pair<Key, Subspace>> leaves;
  std::vector<SubspaceResult> results;
  bool has_freedom = false;
};

// Units of one bus subset: union over the budget leaves, keyed by target.
std::vector<std::pair<const Subspace*, const Unit*>> units_of(const SolvedKey& sk) {
  std::map<std::pair<int, int>, std::pair<const Subspace*, const Unit*>> merged;
  for (size_t i = 0; i < sk.leaves.size(); ++i) {
    for (const Unit& u : sk.results[i].units) {
      merged.emplace(std::make_pair(u.row, u.sign), std::make_pair(&sk.leaves[i].second, &u));
    }
  }
  std::vector<std::pair<const Subspace*, const Unit*>> out;
  for (auto& [k, v] : merged) out.push_back(v);
  return out;
}

SolvedKey solve_key(const Engine& engine, const Key& key) {
  SolvedKey sk;
  sk.leaves = engine.leaves(key);
  sk.has_freedom = engine.subspace(key).dim() > 0;
  for (const auto& [k, s] : sk.leaves) sk.results.push_back(engine.solve(s));
  return sk;
}

struct Space {
  std::vector<std::vector<int>> subsets;
  std::vector<Key> keys;
  std::map<Key, SolvedKey> solved;
  UnsatCertificate certificate;
};

Space explore(const Engine& engine, const SearchOptions& options) {
  Space sp;
  const GridCase& grid = engine.grid();
  sp.subsets = bus_subsets(grid.num_buses(), grid.attacker.max_buses);
  std::vector<Key> unique;
  for (const auto& h : sp.subsets) {
    sp.keys.push_back(engine.key_for(h));
    if (!sp.solved.count(sp.keys.back())) {
      sp.solved[sp.keys.back()];
      unique.push_back(sp.keys.back());
    }
  }
  std::vector<SolvedKey> results(unique.size());
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(unique.size())));
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&] {
    try {
      for (size_t i = next++; i < unique.size(); i = next++) results[i] = solve_key(engine, unique[i]);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  for (size_t i = 0; i < unique.size(); ++i) {
    sp.certificate.subspaces_solved += static_cast<long long>(results[i].leaves.size());
    sp.solved[unique[i]] = std::move(results[i]);
  }
  sp.certificate.max_buses = grid.attacker.max_buses;
  sp.certificate.subsets_explored = static_cast<long long>(sp.subsets.size());
  for (const auto& key : sp.keys) sp.certificate.subsets_with_freedom += sp.solved[key].has_freedom;
  return sp;
}

}  // namespace

SynthesisResult synthesize(const GridCase& grid, const ScopfSolution& pre,
                           const SynthesisGoal& goal, const SearchOptions& options) {
  (void)options;
  Engine engine(grid, pre, goal);
  SynthesisResult res;
  res.certificate.max_buses = grid.attacker.max_buses;
  std::map<Key, SolvedKey> memo;
  for (const auto& h : bus_subsets(grid.num_buses(), grid.attacker.max_buses)) {
    ++res.certificate.subsets_explored;
    const Key key = engine.key_for(h);
    auto it = memo.find(key);
    if (it == memo.end()) {
      it = memo.emplace(key, solve_key(engine, key)).first;
      res.certificate.subspaces_solved += static_cast<long long>(it->second.leaves.size());
    }
    res.certificate.subsets_with_freedom += it->second.has_freedom;
    const auto units = units_of(it->second);
    if (!units.empty()) {
      res.sat = true;
      res.witness = engine.build_vector(h, *units.front().first, *units.front().second);
      return res;
    }
  }
  return res;
}

std::vector<AttackVector> enumerate_attack_space(const GridCase& grid, const ScopfSolution& pre,
                                                 const SynthesisGoal& goal,
                                                 const SearchOptions& options) {
  Engine engine(grid, pre, goal);
  const Space sp = explore(engine, options);
  std::vector<AttackVector> out;
  for (size_t h = 0; h < sp.subsets.size(); ++h) {
    for (const auto& [s, u] : units_of(sp.solved.at(sp.keys[h]))) {
      out.push_back(engine.build_vector(sp.subsets[h], *s, *u));
    }
  }
  return out;
}

AttackSpaceSummary summarize_attack_space(const GridCase& grid, const ScopfSolution& pre,
                                          const SynthesisGoal& goal,
                                          const SearchOptions& options) {
  Engine engine(grid, pre, goal);
  const Space sp = explore(engine, options);
  AttackSpaceSummary sum;
  sum.certificate = sp.certificate;
  sum.bus_frequency.assign(grid.num_buses(), 0);
  sum.heatmap = Eigen::MatrixXi::Zero(grid.num_lines(), grid.num_lines());
  // Vectors of one key are identical across subsets sharing it.
  std::map<Key, std::vector<AttackVector>> cache;
  for (size_t h = 0; h < sp.subsets.size(); ++h) {
    const Key& key = sp.keys[h];
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<AttackVector> vs;
      for (const auto& [s, u] : units_of(sp.solved.at(key))) {
        vs.push_back(engine.build_vector(sp.subsets[h], *s, *u));
      }
      it = cache.emplace(key, std::move(vs)).first;
    }
    for (const AttackVector& v : it->second) {
      ++sum.count;
      for (int j = 0; j < grid.num_buses(); ++j) sum.bus_frequency[j] += v.compromised[j];
      for (const auto& p : v.overload_pairs) ++sum.heatmap(p.outage - 1, p.line - 1);
    }
  }
  return sum;
}

std::vector<OverloadPair> true_overloads(const GridCase& grid, const Eigen::VectorXd& dispatch,
                                         double margin) {
  const Eigen::VectorXd load = grid.load_vector();
  Eigen::VectorXd consumption = load - dispatch;
  consumption.array() -= consumption.mean();
  const PowerFlowState st = solve_consumption(grid, consumption);
  const LodfMatrix lodf = compute_lodf(grid);
  std::vector<OverloadPair> out;
  for (int k : lodf.contingencies()) {
    const Eigen::VectorXd post = post_contingency_flows(st, lodf, k);
    for (const auto& ln : grid.lines) {
      if (ln.id == k) continue;
      const double f = post[ln.id - 1];
      if (std::abs(f) > (1.0 + margin) * ln.capacity + kReportEps) {
        out.push_back({ln.id, k, f, ln.capacity});
      }
    }
  }
  return out;
}

AttackVector attack_from_load_shift(const GridCase& grid, const Eigen::VectorXd& attacked_load,
                                    const Eigen::VectorXd& dispatch, double margin) {
  const int b = grid.num_buses();
  const int l = grid.num_lines();
  if (attacked_load.size() != b || dispatch.size() != b) {
    throw ValidationError("attacked load and dispatch need one entry per bus");
  }
  AttackVector v;
  v.delta_bus = attacked_load - grid.load_vector();
  Eigen::VectorXd shift = v.delta_bus;
  if (std::abs(shift.sum()) > 1e-8) {
    throw ValidationError("load shifts must sum to zero (generation is not measured as altered)");
  }
  shift.array() -= shift.mean();
  // Estimated angles move so that consumption changes by exactly the shift.
  v.delta_theta = solve_consumption(grid, shift).theta;
  v.delta_line = line_flows(grid, v.delta_theta);
  v.delta_bus = consumption_from_flows(grid, v.delta_line);
  v.attacked_load = grid.load_vector() + v.delta_bus;
  v.corrupted_dispatch = dispatch;
  v.altered.assign(grid.num_measurements(), false);
  v.compromised.assign(b, false);
  v.corrupted.assign(b, false);
  for (int idx = 1; idx <= grid.num_measurements(); ++idx) {
    const int e = grid.measurement_element(idx);
    double delta = 0.0;
    switch (grid.measurement_kind(idx)) {
      case MeasurementKind::ForwardFlow: delta = v.delta_line[e - 1]; break;
      case MeasurementKind::BackwardFlow: delta = -v.delta_line[e - 1]; break;
      case MeasurementKind::Consumption: delta = v.delta_bus[e - 1]; break;
    }
    if (grid.measurements[idx - 1].taken && std::abs(delta) > kZero) {
      v.altered[idx - 1] = true;
      v.compromised[grid.metering_bus(idx) - 1] = true;
    }
  }
  for (int j = 0; j < b; ++j) v.corrupted[j] = std::abs(v.delta_theta[j]) > kZero;
  (void)l;
  v.corrupted_cost = evaluate_cost(grid, dispatch);
  v.overload_pairs = true_overloads(grid, dispatch, margin);
  return v;
}

}  // namespace gridthreat
