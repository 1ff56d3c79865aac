#include "avgmdp/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace avgmdp {

namespace {

struct Tableau {
  Eigen::MatrixXd T;        // m x (n+1); last column is the rhs
  std::vector<int> basis;   // basic variable per row
  int n = 0;                // number of structural columns

  double rhs(int i) const { return T(i, n); }
};

/// One simplex phase on the tableau with costs `cost` (size n).
/// Returns true when an optimum was reached, false on iteration limit.
bool run_simplex(Tableau& tab, const Eigen::VectorXd& cost, double pivot_tol, bool& unbounded) {
  const int m = static_cast<int>(tab.T.rows());
  const int n = tab.n;
  unbounded = false;
  const long long max_iter = 2000LL * (m + n) + 10000;
  for (long long iter = 0; iter < max_iter; ++iter) {
    // Reduced costs under the current basis.
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) y[i] = cost[tab.basis[i]];
    int entering = -1;
    for (int j = 0; j < n; ++j) {
      const double rc = cost[j] - y.dot(tab.T.col(j));
      if (rc < -pivot_tol) {
        entering = j;  // Bland: smallest eligible index
        break;
      }
    }
    if (entering < 0) return true;

    int leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.T(i, entering);
      if (a > pivot_tol) {
        const double ratio = tab.rhs(i) / a;
        if (ratio < best_ratio - 1e-15 ||
            (ratio < best_ratio + 1e-15 &&
             (leaving < 0 || tab.basis[i] < tab.basis[leaving]))) {
          best_ratio = ratio;
          leaving = i;
        }
      }
    }
    if (leaving < 0) {
      unbounded = true;
      return true;
    }

    // Pivot.
    tab.T.row(leaving) /= tab.T(leaving, entering);
    for (int i = 0; i < m; ++i) {
      if (i == leaving) continue;
      const double f = tab.T(i, entering);
      if (f != 0.0) tab.T.row(i) -= f * tab.T.row(leaving);
    }
    tab.basis[leaving] = entering;
  }
  return false;
}

}  // namespace

void LinearProgram::add_eq(const Eigen::VectorXd& row, double rhs) {
  A_eq.conservativeResize(A_eq.rows() + 1, num_vars);
  A_eq.row(A_eq.rows() - 1) = row.transpose();
  b_eq.conservativeResize(b_eq.size() + 1);
  b_eq[b_eq.size() - 1] = rhs;
}

void LinearProgram::add_ge(const Eigen::VectorXd& row, double rhs) {
  A_ge.conservativeResize(A_ge.rows() + 1, num_vars);
  A_ge.row(A_ge.rows() - 1) = row.transpose();
  b_ge.conservativeResize(b_ge.size() + 1);
  b_ge[b_ge.size() - 1] = rhs;
}

LpSolution solve_lp(const LinearProgram& lp, double pivot_tol) {
  const int n0 = lp.num_vars;
  const int m_eq = static_cast<int>(lp.A_eq.rows());
  const int m_ge = static_cast<int>(lp.A_ge.rows());
  const int m = m_eq + m_ge;
  const int n = n0 + m_ge;  // surplus variables for the >= rows

  // Standard form A x = b with b >= 0.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd b(m);
  A.topLeftCorner(m_eq, n0) = lp.A_eq;
  b.head(m_eq) = lp.b_eq;
  A.block(m_eq, 0, m_ge, n0) = lp.A_ge;
  for (int i = 0; i < m_ge; ++i) A(m_eq + i, n0 + i) = -1.0;
  b.tail(m_ge) = lp.b_ge;
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      A.row(i) = -A.row(i);
      b[i] = -b[i];
    }
  }

  LpSolution out;
  if (m == 0) {
    // Unconstrained over the nonnegative orthant.
    out.x = Eigen::VectorXd::Zero(n0);
    bool neg = false;
    for (int j = 0; j < n0; ++j) neg = neg || lp.c[j] < -pivot_tol;
    out.status = neg ? LpStatus::Unbounded : LpStatus::Optimal;
    out.objective = 0.0;
    return out;
  }

  // Phase one with artificial variables.
  Tableau tab;
  tab.n = n + m;
  tab.T = Eigen::MatrixXd::Zero(m, tab.n + 1);
  tab.T.topLeftCorner(m, n) = A;
  tab.T.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
  tab.T.col(tab.n) = b;
  tab.basis.resize(m);
  for (int i = 0; i < m; ++i) tab.basis[i] = n + i;

  Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(tab.n);
  cost1.tail(m).setOnes();
  bool unbounded = false;
  if (!run_simplex(tab, cost1, pivot_tol, unbounded)) {
    out.status = LpStatus::IterationLimit;
    return out;
  }
  double phase1 = 0.0;
  for (int i = 0; i < m; ++i)
    if (tab.basis[i] >= n) phase1 += tab.rhs(i);
  if (phase1 > 1e-8) {
    out.status = LpStatus::Infeasible;
    return out;
  }

  // Drive remaining artificials out of the basis; drop truly redundant rows.
  std::vector<int> keep;
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] < n) {
      keep.push_back(i);
      continue;
    }
    int piv = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(tab.T(i, j)) > 1e-9) {
        piv = j;
        break;
      }
    }
    if (piv < 0) continue;  // redundant constraint
    tab.T.row(i) /= tab.T(i, piv);
    for (int k = 0; k < m; ++k) {
      if (k == i) continue;
      const double f = tab.T(k, piv);
      if (f != 0.0) tab.T.row(k) -= f * tab.T.row(i);
    }
    tab.basis[i] = piv;
    keep.push_back(i);
  }
  if (static_cast<int>(keep.size()) < m) {
    Eigen::MatrixXd T2(keep.size(), tab.n + 1);
    std::vector<int> basis2;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      T2.row(static_cast<int>(i)) = tab.T.row(keep[i]);
      basis2.push_back(tab.basis[keep[i]]);
    }
    tab.T = std::move(T2);
    tab.basis = std::move(basis2);
  }

  // Phase two on the structural columns only.
  Tableau tab2;
  tab2.n = n;
  const int m2 = static_cast<int>(tab.T.rows());
  tab2.T = Eigen::MatrixXd::Zero(m2, n + 1);
  tab2.T.leftCols(n) = tab.T.leftCols(n);
  tab2.T.col(n) = tab.T.col(tab.n);
  tab2.basis = tab.basis;

  Eigen::VectorXd cost2 = Eigen::VectorXd::Zero(n);
  cost2.head(n0) = lp.c;
  if (!run_simplex(tab2, cost2, pivot_tol, unbounded)) {
    out.status = LpStatus::IterationLimit;
    return out;
  }
  if (unbounded) {
    out.status = LpStatus::Unbounded;
    return out;
  }

  out.status = LpStatus::Optimal;
  out.x = Eigen::VectorXd::Zero(n0);
  for (int i = 0; i < m2; ++i)
    if (tab2.basis[i] < n0) out.x[tab2.basis[i]] = tab2.rhs(i);
  for (int j = 0; j < n0; ++j) out.x[j] = std::max(out.x[j], 0.0);
  out.objective = lp.c.dot(out.x);
  return out;
}

}  // namespace avgmdp
