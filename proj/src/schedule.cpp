#include "avgmdp/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace avgmdp {

namespace {

double inv_max1_lnln(double x) {
  double v = x > 1.0 ? std::log(std::log(x)) : 0.0;  // log log x <= 0 for x <= e anyway
  return 1.0 / std::max(1.0, v);
}

double inv_max1_ln(double x) {
  double v = x > 1.0 ? std::log(x) : 0.0;
  return 1.0 / std::max(1.0, v);
}

}  // namespace

Schedule default_schedule() {
  Schedule s;
  s.eps_flat = inv_max1_lnln;
  s.eps_test = inv_max1_lnln;
  s.eps_unif = inv_max1_lnln;
  s.eps_reg = inv_max1_ln;
  return s;
}

Schedule constant_schedule(double flat, double test, double unif, double reg) {
  Schedule s;
  s.eps_flat = [flat](double) { return flat; };
  s.eps_test = [test](double) { return test; };
  s.eps_unif = [unif](double) { return unif; };
  s.eps_reg = [reg](double) { return reg; };
  return s;
}

FlooredRegularizers floored_regularizers(const Schedule& s, double t, long explore_count) {
  FlooredRegularizers out;
  long m = std::max<long>(explore_count, 1);
  long dyadic = 1;
  while (dyadic <= m / 2) dyadic *= 2;
  out.dyadic_epoch = dyadic;
  out.eps_flat = s.eps_flat(t);
  out.eps_test = s.eps_test(t);
  out.eps_unif = s.eps_unif(static_cast<double>(dyadic));
  out.eps_reg = s.eps_reg(static_cast<double>(dyadic));
  return out;
}

ScheduleReport validate_schedule(const Schedule& s, double lo, double hi, int grid_points) {
  ScheduleReport report;
  lo = std::max(lo, 1.0 + 1e-9);
  hi = std::max(hi, lo * (1.0 + 1e-9));
  grid_points = std::max(grid_points, 2);
  std::vector<double> grid(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    double u = static_cast<double>(i) / (grid_points - 1);
    grid[i] = lo * std::pow(hi / lo, u);
  }

  auto add = [&](const std::string& name, bool passed, const std::string& note) {
    report.checks.push_back({name, passed, note});
    if (!passed) report.violations.push_back(name);
  };

  struct Named {
    const char* name;
    const std::function<double(double)>* fn;
  };
  const Named comps[] = {{"eps_flat", &s.eps_flat},
                         {"eps_test", &s.eps_test},
                         {"eps_unif", &s.eps_unif},
                         {"eps_reg", &s.eps_reg}};

  for (const auto& c : comps) {
    double a = (*c.fn)(grid.front());
    double b = (*c.fn)(grid.back());
    bool in_range = a > 0.0 && a <= 1.0 + 1e-12 && b > 0.0 && b <= 1.0 + 1e-12;
    add(std::string(c.name) + "_in_unit_range", in_range,
        "values at the grid endpoints lie in (0, 1]");
    bool monotone = true;
    for (int i = 1; i < grid_points && monotone; ++i) {
      if ((*c.fn)(grid[i]) > (*c.fn)(grid[i - 1]) + 1e-12) monotone = false;
    }
    add(std::string(c.name) + "_nonincreasing", monotone, "monotone non-increasing on the grid");
  }

  bool ratio_dec = true;
  for (int i = 1; i < grid_points && ratio_dec; ++i) {
    double r0 = s.eps_unif(grid[i - 1]) / std::max(s.eps_reg(grid[i - 1]), 1e-300);
    double r1 = s.eps_unif(grid[i]) / std::max(s.eps_reg(grid[i]), 1e-300);
    if (r1 > r0 + 1e-12) ratio_dec = false;
  }
  add("eps_unif_over_eps_reg_decreasing", ratio_dec,
      "uniformity floor must shrink faster than the quadratic penalty; "
      "asymptotic conditions beyond the grid are not decidable from samples");

  bool vanish = s.eps_reg(grid.back()) <= s.eps_reg(grid.front()) + 1e-12;
  add("eps_reg_spot_decay", vanish, "endpoint spot check of decay; asymptotic only");
  return report;
}

}  // namespace avgmdp
