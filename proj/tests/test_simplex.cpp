#include <doctest.h>

#include <avgmdp/simplex.hpp>

#include <Eigen/Dense>
#include <vector>

using namespace avgmdp;

TEST_CASE("solves a basic production problem") {
  // min -3x - 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0.
  LinearProgram lp(5);  // x, y, and three slacks
  lp.add_eq(std::vector<double>{1, 0, 1, 0, 0}, 4);
  lp.add_eq(std::vector<double>{0, 2, 0, 1, 0}, 12);
  lp.add_eq(std::vector<double>{3, 2, 0, 0, 1}, 18);
  lp.c = Eigen::VectorXd::Zero(5);
  lp.c(0) = -3;
  lp.c(1) = -5;
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-36.0).epsilon(1e-9));
  CHECK(sol.x(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sol.x(1) == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("inequality rows lower-bound the solution") {
  // min x + y s.t. x + y >= 2, x - y >= -1.
  LinearProgram lp(2);
  lp.add_ge(std::vector<double>{1, 1}, 2);
  lp.add_ge(std::vector<double>{1, -1}, -1);
  lp.c << 1, 1;
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("detects infeasibility") {
  // x >= 0 with x <= -1 via equality to a slack-free negative combination.
  LinearProgram lp(1);
  lp.add_eq(std::vector<double>{1}, -1);  // x = -1 impossible under x >= 0
  lp.c << 1;
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);

  LinearProgram lp2(2);
  lp2.add_ge(std::vector<double>{1, 0}, 3);
  lp2.add_ge(std::vector<double>{-1, 0}, -1);  // x <= 1 and x >= 3
  CHECK(solve_lp(lp2).status == LpStatus::Infeasible);
}

TEST_CASE("detects unboundedness") {
  LinearProgram lp(2);
  lp.add_ge(std::vector<double>{1, -1}, 0);
  lp.c << -1, 0;  // maximize x with only x >= y binding
  CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("handles degenerate ties without cycling") {
  // Klee-Minty style degeneracy at small size; Bland's rule must terminate.
  LinearProgram lp(6);
  lp.add_eq(std::vector<double>{1, 0, 0, 1, 0, 0}, 1);
  lp.add_eq(std::vector<double>{4, 1, 0, 0, 1, 0}, 8);
  lp.add_eq(std::vector<double>{8, 4, 1, 0, 0, 1}, 64);
  lp.c = Eigen::VectorXd::Zero(6);
  lp.c(0) = -4;
  lp.c(1) = -2;
  lp.c(2) = -1;
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-64.0).epsilon(1e-8));
}

TEST_CASE("equality and inequality blocks combine") {
  // min -y s.t. x + y = 1, y - x >= -1  ->  y can reach 1 at x = 0.
  LinearProgram lp(2);
  lp.add_eq(std::vector<double>{1, 1}, 1);
  lp.add_ge(std::vector<double>{-1, 1}, -1);
  lp.c << 0, -1;
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x(1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solver error type is catchable as runtime_error") {
  try {
    throw SolverError("probe");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "probe");
  }
}
