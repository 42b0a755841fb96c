#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace gridthreat {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus status);

/// Bounded-variable primal simplex on
///   min c'x  s.t.  lo_r <= a_r x <= hi_r,  l_j <= x_j <= u_j
/// kept in dictionary form, so rows and objectives can be added or
/// replaced between solves without starting over. Copying the object
/// snapshots the basis.
class LinearProgram {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  explicit LinearProgram(int num_vars);

  int num_vars() const { return n_; }
  int num_rows() const { return static_cast<int>(row_var_.size()); }

  void set_bounds(int j, double lo, double hi);
  /// Returns the row index. Rows are scaled internally.
  int add_row(const Eigen::Ref<const Eigen::RowVectorXd>& coeffs, double lo, double hi);
  void set_row_bounds(int row, double lo, double hi);
  /// Minimize c'x.
  void set_objective(const Eigen::VectorXd& c);

  LpStatus solve();

  Eigen::VectorXd solution() const;
  double objective_value() const;
  double row_value(int row) const;
  /// Sum of bound violations at the current point (0 once feasible).
  double infeasibility() const;
  /// Rows whose value lies outside their bounds, worst first, paired with
  /// the size of the violation in the row's original units.
  std::vector<std::pair<int, double>> violated_rows() const;
  int iterations() const { return iterations_; }

  double tolerance = 1e-9;
  int max_iterations = 50000;

 private:
  struct Var {
    double lo = -kInf;
    double hi = kInf;
    int basic_row = -1;   // row of D when basic
    int nonbasic_col = -1;
  };

  double var_value(int v) const;
  void recompute_basics();
  void refactor();
  LpStatus run(bool phase_one);
  void pivot(int row, int col);

  int n_;
  std::vector<Var> vars_;          // n_ structural then one per row
  std::vector<int> row_var_;       // var id of each constraint row
  std::vector<Eigen::RowVectorXd> rows_;  // scaled coefficients
  std::vector<double> row_scale_;  // internal row = scale * original row
  std::vector<int> basic_;         // var id per dictionary row
  std::vector<int> nonbasic_;      // var id per dictionary column
  Eigen::MatrixXd dict_;           // basic = dict_ * nonbasic
  Eigen::VectorXd xn_;             // nonbasic values
  Eigen::VectorXd xb_;             // basic values
  Eigen::VectorXd cost_;           // per var
  int iterations_ = 0;
};

}  // namespace gridthreat
