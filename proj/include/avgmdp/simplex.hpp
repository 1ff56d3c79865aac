#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>
#include <string>

namespace avgmdp {

/// Thrown when an iterative solver (LP, policy iteration, cutting planes)
/// exhausts its iteration budget without reaching its convergence tolerance.
/// The CLI maps this exception family to a dedicated exit code.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Linear program in the mixed form
///   minimize c.x   subject to   A_eq x = b_eq,   A_ge x >= b_ge,   x >= 0.
/// Either constraint block may be empty (0 rows, num_vars columns).
struct LinearProgram {
  int num_vars = 0;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_ge;
  Eigen::VectorXd b_ge;
  Eigen::VectorXd c;

  explicit LinearProgram(int n)
      : num_vars(n),
        A_eq(0, n),
        b_eq(0),
        A_ge(0, n),
        b_ge(0),
        c(Eigen::VectorXd::Zero(n)) {}

  void add_eq(const Eigen::VectorXd& row, double rhs);
  void add_ge(const Eigen::VectorXd& row, double rhs);

  void add_eq(const std::vector<double>& row, double rhs) {
    add_eq(Eigen::Map<const Eigen::VectorXd>(row.data(),
                                             static_cast<Eigen::Index>(row.size())),
           rhs);
  }
  void add_ge(const std::vector<double>& row, double rhs) {
    add_ge(Eigen::Map<const Eigen::VectorXd>(row.data(),
                                             static_cast<Eigen::Index>(row.size())),
           rhs);
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// Dense two-phase primal simplex with Bland's anti-cycling rule.
/// `pivot_tol` guards pivot selection; feasibility of phase one is decided at
/// 1e-8 on the artificial objective.
LpSolution solve_lp(const LinearProgram& lp, double pivot_tol = 1e-11);

}  // namespace avgmdp
