#pragma once

#include <functional>
#include <string>
#include <vector>

namespace avgmdp {

/// Regularization schedules used by the learner. eps_flat and eps_test are
/// functions of the time step t; eps_unif and eps_reg are functions of the
/// exploration-step count m.
struct Schedule {
  std::function<double(double)> eps_flat;
  std::function<double(double)> eps_test;
  std::function<double(double)> eps_unif;
  std::function<double(double)> eps_reg;
};

/// The default slowly vanishing schedule:
///   eps_flat(t) = eps_test(t) = 1 / max(1, ln ln t)
///   eps_unif(m) = 1 / max(1, ln ln m),   eps_reg(m) = 1 / max(1, ln m)
/// (natural logarithms; arguments at or below 1 evaluate to 1).
Schedule default_schedule();

/// Constant schedule, mainly for experiments and tests.
Schedule constant_schedule(double flat, double test, double unif, double reg);

/// Schedule values actually consumed at time t after m exploration steps:
/// eps_unif and eps_reg are frozen within dyadic blocks of m (evaluated at
/// the largest power of two at or below max(m, 1)), so they change at most
/// log2(m) times over a run.
struct FlooredRegularizers {
  double eps_flat = 1.0;
  double eps_test = 1.0;
  double eps_unif = 1.0;
  double eps_reg = 1.0;
  long dyadic_epoch = 1;  ///< the power of two the m-indexed values were taken at
};

FlooredRegularizers floored_regularizers(const Schedule& s, double t, long explore_count);

struct ScheduleCheck {
  std::string name;
  bool passed = true;
  std::string note;
};

struct ScheduleReport {
  std::vector<ScheduleCheck> checks;
  std::vector<std::string> violations;  ///< names of failed checks
};

/// Samples the schedule on a log-spaced grid over [lo, hi] and checks the
/// usable-schedule conditions that are decidable from samples: positivity and
/// boundedness by one at the endpoints, monotone non-increase of each
/// component on the grid, and decrease of the ratio eps_unif / eps_reg on the
/// grid. Asymptotic conditions are only spot-checked; failures are reported,
/// never thrown. The default schedule fails the ratio check by design (its
/// ratio grows like ln m / ln ln m), which this report states honestly.
ScheduleReport validate_schedule(const Schedule& s, double lo = 2.0, double hi = 1e8,
                                 int grid_points = 64);

}  // namespace avgmdp
