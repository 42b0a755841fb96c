#include "gridthreat/simplex.hpp"

#include "gridthreat/error.hpp"

#include <algorithm>
#include <cmath>

namespace gridthreat {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr int kRefreshEvery = 25;
constexpr int kDegenerateStreak = 40;

double resting_value(double lo, double hi) {
  if (std::isfinite(lo)) return lo;
  if (std::isfinite(hi)) return hi;
  return 0.0;
}

}  // namespace

LinearProgram::LinearProgram(int num_vars)
    : n_(num_vars), vars_(num_vars), dict_(0, num_vars), xn_(num_vars), xb_(0),
      cost_(Eigen::VectorXd::Zero(num_vars)) {
  nonbasic_.resize(n_);
  for (int j = 0; j < n_; ++j) {
    vars_[j].nonbasic_col = j;
    nonbasic_[j] = j;
    xn_[j] = 0.0;
  }
}

void LinearProgram::set_bounds(int j, double lo, double hi) {
  if (j < 0 || j >= n_) throw Error("variable index out of range");
  if (lo > hi) throw Error("variable bounds cross");
  vars_[j].lo = lo;
  vars_[j].hi = hi;
  if (vars_[j].nonbasic_col >= 0) {
    xn_[vars_[j].nonbasic_col] = resting_value(lo, hi);
    recompute_basics();
  }
}

int LinearProgram::add_row(const Eigen::Ref<const Eigen::RowVectorXd>& coeffs, double lo,
                           double hi) {
  if (coeffs.size() != n_) throw Error("row length does not match the variable count");
  if (lo > hi) throw Error("row bounds cross");
  const double big = coeffs.cwiseAbs().maxCoeff();
  const double scale = big > 0.0 ? 1.0 / big : 1.0;
  const Eigen::RowVectorXd a = coeffs * scale;

  // Express the new row in the current nonbasic variables.
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    if (a[j] == 0.0) continue;
    if (vars_[j].nonbasic_col >= 0) {
      d[vars_[j].nonbasic_col] += a[j];
    } else {
      d += a[j] * dict_.row(vars_[j].basic_row);
    }
  }
  const int id = static_cast<int>(vars_.size());
  Var v;
  v.lo = lo * scale;
  v.hi = hi * scale;
  v.basic_row = static_cast<int>(basic_.size());
  vars_.push_back(v);
  basic_.push_back(id);
  rows_.push_back(a);
  row_var_.push_back(id);
  row_scale_.push_back(scale);
  dict_.conservativeResize(dict_.rows() + 1, Eigen::NoChange);
  dict_.row(dict_.rows() - 1) = d;
  xb_.conservativeResize(xb_.size() + 1);
  xb_[xb_.size() - 1] = d.dot(xn_);
  cost_.conservativeResize(cost_.size() + 1);
  cost_[cost_.size() - 1] = 0.0;
  return static_cast<int>(row_var_.size()) - 1;
}

void LinearProgram::set_row_bounds(int row, double lo, double hi) {
  if (lo > hi) throw Error("row bounds cross");
  Var& v = vars_[row_var_[row]];
  v.lo = lo * row_scale_[row];
  v.hi = hi * row_scale_[row];
  if (v.nonbasic_col >= 0) {
    xn_[v.nonbasic_col] = resting_value(v.lo, v.hi);
    recompute_basics();
  }
}

void LinearProgram::set_objective(const Eigen::VectorXd& c) {
  if (c.size() != n_) throw Error("objective length does not match the variable count");
  cost_.setZero();
  cost_.head(n_) = c;
}

double LinearProgram::var_value(int v) const {
  const Var& var = vars_[v];
  return var.basic_row >= 0 ? xb_[var.basic_row] : xn_[var.nonbasic_col];
}

void LinearProgram::recompute_basics() { xb_ = dict_ * xn_; }

void LinearProgram::refactor() {
  if (basic_.empty()) return;
  // Each nonbasic variable is a linear functional of x; invert that map
  // and rebuild every basic row from scratch.
  Eigen::MatrixXd M(n_, n_);
  for (int c = 0; c < n_; ++c) {
    const int v = nonbasic_[c];
    if (v < n_) {
      M.row(c).setZero();
      M(c, v) = 1.0;
    } else {
      M.row(c) = rows_[v - n_];
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::MatrixXd Minv = lu.inverse();
  for (size_t r = 0; r < basic_.size(); ++r) {
    const int v = basic_[r];
    if (v < n_) {
      dict_.row(r) = Minv.row(v);
    } else {
      dict_.row(r) = rows_[v - n_] * Minv;
    }
  }
  recompute_basics();
}

void LinearProgram::pivot(int row, int col) {
  const double p = dict_(row, col);
  const Eigen::RowVectorXd rr = dict_.row(row);
  const Eigen::VectorXd cq = dict_.col(col);
  dict_.noalias() -= cq * (rr / p);
  dict_.col(col) = cq / p;
  dict_.row(row) = -rr / p;
  dict_(row, col) = 1.0 / p;

  const int entering = nonbasic_[col];
  const int leaving = basic_[row];
  basic_[row] = entering;
  nonbasic_[col] = leaving;
  vars_[entering].basic_row = row;
  vars_[entering].nonbasic_col = -1;
  vars_[leaving].nonbasic_col = col;
  vars_[leaving].basic_row = -1;
}

LpStatus LinearProgram::run(bool phase_one) {
  const double tol = tolerance;
  int degenerate = 0;
  int since_refresh = 0;
  Eigen::VectorXd w(basic_.size());
  Eigen::VectorXd cn(n_);
  while (true) {
    if (iterations_ >= max_iterations) return LpStatus::IterationLimit;
    if (since_refresh >= kRefreshEvery) {
      refactor();
      since_refresh = 0;
    }
    const int m = static_cast<int>(basic_.size());
    w.resize(m);
    bool any_infeasible = false;
    for (int r = 0; r < m; ++r) {
      const Var& v = vars_[basic_[r]];
      if (phase_one) {
        if (xb_[r] < v.lo - tol) {
          w[r] = -1.0;
          any_infeasible = true;
        } else if (xb_[r] > v.hi + tol) {
          w[r] = 1.0;
          any_infeasible = true;
        } else {
          w[r] = 0.0;
        }
      } else {
        w[r] = cost_[basic_[r]];
      }
    }
    if (phase_one && !any_infeasible) return LpStatus::Optimal;
    for (int c = 0; c < n_; ++c) cn[c] = phase_one ? 0.0 : cost_[nonbasic_[c]];
    const Eigen::VectorXd d = dict_.transpose() * w + cn;

    const bool bland = degenerate >= kDegenerateStreak;
    int q = -1;
    int dir = 0;
    double best = 0.0;
    for (int c = 0; c < n_; ++c) {
      const Var& v = vars_[nonbasic_[c]];
      const double x = xn_[c];
      const bool up = x < v.hi - tol;
      const bool down = x > v.lo + tol;
      int cdir = 0;
      if (d[c] < -tol && up) cdir = 1;
      else if (d[c] > tol && down) cdir = -1;
      if (cdir == 0) continue;
      if (bland) {
        if (q < 0 || nonbasic_[c] < nonbasic_[q]) {
          q = c;
          dir = cdir;
        }
      } else if (std::abs(d[c]) > best) {
        best = std::abs(d[c]);
        q = c;
        dir = cdir;
      }
    }
    if (q < 0) {
      if (phase_one) return LpStatus::Infeasible;
      return LpStatus::Optimal;
    }

    const Var& ev = vars_[nonbasic_[q]];
    double t_best = (std::isfinite(ev.lo) && std::isfinite(ev.hi)) ? ev.hi - ev.lo : kInf;
    int r_best = -1;
    double r_bound = 0.0;
    double r_rate = 0.0;
    for (int r = 0; r < m; ++r) {
      const double rate = dict_(r, q) * dir;
      if (std::abs(rate) < kPivotTol) continue;
      const Var& v = vars_[basic_[r]];
      const double x = xb_[r];
      double t = kInf;
      double bound = 0.0;
      if (x < v.lo - tol) {
        if (rate > 0.0) {
          t = (v.lo - x) / rate;
          bound = v.lo;
        }
      } else if (x > v.hi + tol) {
        if (rate < 0.0) {
          t = (v.hi - x) / rate;
          bound = v.hi;
        }
      } else if (rate > 0.0 && std::isfinite(v.hi)) {
        t = std::max(0.0, (v.hi - x) / rate);
        bound = v.hi;
      } else if (rate < 0.0 && std::isfinite(v.lo)) {
        t = std::max(0.0, (v.lo - x) / rate);
        bound = v.lo;
      }
      if (t < t_best - 1e-12 ||
          (r_best >= 0 && t <= t_best + 1e-12 && std::abs(rate) > std::abs(r_rate))) {
        t_best = t;
        r_best = r;
        r_bound = bound;
        r_rate = rate;
      }
    }
    if (!std::isfinite(t_best)) {
      return phase_one ? LpStatus::Infeasible : LpStatus::Unbounded;
    }
    ++iterations_;
    degenerate = t_best <= tol ? degenerate + 1 : 0;
    if (r_best < 0) {
      // bound flip of the entering variable
      xn_[q] = dir > 0 ? ev.hi : ev.lo;
      recompute_basics();
      continue;
    }
    pivot(r_best, q);
    // q now holds the leaving variable, r_best the entering one
    xn_[q] = r_bound;
    recompute_basics();
    ++since_refresh;
  }
}

LpStatus LinearProgram::solve() {
  refactor();
  LpStatus s = run(true);
  if (s != LpStatus::Optimal) return s;
  s = run(false);
  if (s == LpStatus::Optimal) {
    refactor();
    // Drift can leave a basic a hair outside its bounds; one more pass fixes it.
    if (infeasibility() > tolerance) {
      s = run(true);
      if (s == LpStatus::Optimal) s = run(false);
    }
  }
  return s;
}

Eigen::VectorXd LinearProgram::solution() const {
  Eigen::VectorXd x(n_);
  for (int j = 0; j < n_; ++j) x[j] = var_value(j);
  return x;
}

double LinearProgram::objective_value() const { return cost_.head(n_).dot(solution()); }

double LinearProgram::row_value(int row) const {
  return var_value(row_var_[row]) / row_scale_[row];
}

double LinearProgram::infeasibility() const {
  double total = 0.0;
  for (size_t r = 0; r < basic_.size(); ++r) {
    const Var& v = vars_[basic_[r]];
    if (xb_[r] < v.lo) total += v.lo - xb_[r];
    if (xb_[r] > v.hi) total += xb_[r] - v.hi;
  }
  return total;
}

std::vector<std::pair<int, double>> LinearProgram::violated_rows() const {
  std::vector<std::pair<int, double>> out;
  for (size_t r = 0; r < row_var_.size(); ++r) {
    const Var& v = vars_[row_var_[r]];
    const double x = var_value(row_var_[r]);
    double viol = 0.0;
    if (x < v.lo - tolerance) viol = v.lo - x;
    if (x > v.hi + tolerance) viol = x - v.hi;
    if (viol > 0.0) out.emplace_back(static_cast<int>(r), viol / row_scale_[r]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace gridthreat
