#include <doctest.h>

#include <avgmdp/schedule.hpp>

#include <algorithm>
#include <cmath>

using namespace avgmdp;

TEST_CASE("default schedule values along the time axis") {
  Schedule s = default_schedule();
  // ln ln t stays below 1 until t = e^e ~ 15.15, so the max(1, .) floor binds.
  CHECK(s.eps_flat(2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.eps_flat(15.0) == doctest::Approx(1.0).epsilon(1e-12));
  double ee = std::exp(std::exp(1.0));
  CHECK(s.eps_flat(ee + 1e-6) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.eps_flat(1e6) == doctest::Approx(1.0 / std::log(std::log(1e6))).epsilon(1e-12));
  CHECK(s.eps_flat(1e6) == doctest::Approx(0.380837).epsilon(1e-5));
  CHECK(s.eps_test(1e6) == doctest::Approx(s.eps_flat(1e6)).epsilon(1e-15));
  // m-indexed components.
  CHECK(s.eps_unif(1e6) == doctest::Approx(1.0 / std::log(std::log(1e6))).epsilon(1e-12));
  CHECK(s.eps_reg(1e6) == doctest::Approx(1.0 / std::log(1e6)).epsilon(1e-12));
  CHECK(s.eps_reg(2.0) == doctest::Approx(1.0).epsilon(1e-12));
  // Degenerate arguments stay at 1 instead of blowing up.
  CHECK(s.eps_flat(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.eps_flat(0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant schedule ignores its arguments") {
  Schedule s = constant_schedule(0.2, 0.3, 0.5, 1e-4);
  for (double t : {2.0, 100.0, 1e7}) {
    CHECK(s.eps_flat(t) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(s.eps_test(t) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(s.eps_unif(t) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.eps_reg(t) == doctest::Approx(1e-4).epsilon(1e-15));
  }
}

TEST_CASE("dyadic freezing of the exploration-indexed components") {
  Schedule s = default_schedule();
  // t-indexed components are live; m-indexed ones are taken at the largest
  // power of two at or below m.
  FlooredRegularizers f = floored_regularizers(s, 1e6, 1000);
  CHECK(f.dyadic_epoch == 512);
  CHECK(f.eps_flat == doctest::Approx(s.eps_flat(1e6)).epsilon(1e-15));
  CHECK(f.eps_test == doctest::Approx(s.eps_test(1e6)).epsilon(1e-15));
  CHECK(f.eps_unif == doctest::Approx(s.eps_unif(512.0)).epsilon(1e-15));
  CHECK(f.eps_reg == doctest::Approx(s.eps_reg(512.0)).epsilon(1e-15));

  // Within a dyadic block the frozen values do not move.
  FlooredRegularizers lo = floored_regularizers(s, 1e6, 512);
  FlooredRegularizers hi = floored_regularizers(s, 1e6, 1023);
  CHECK(lo.eps_unif == doctest::Approx(hi.eps_unif).epsilon(1e-15));
  CHECK(lo.eps_reg == doctest::Approx(hi.eps_reg).epsilon(1e-15));
  CHECK(lo.dyadic_epoch == 512);
  CHECK(hi.dyadic_epoch == 512);
  // Crossing the block boundary moves them.
  FlooredRegularizers next = floored_regularizers(s, 1e6, 1024);
  CHECK(next.dyadic_epoch == 1024);
  CHECK(next.eps_unif <= lo.eps_unif + 1e-15);
  CHECK(next.eps_reg < lo.eps_reg);

  // Zero exploration steps clamp to epoch 1.
  FlooredRegularizers zero = floored_regularizers(s, 100.0, 0);
  CHECK(zero.dyadic_epoch == 1);
  CHECK(zero.eps_unif == doctest::Approx(s.eps_unif(1.0)).epsilon(1e-15));
}

TEST_CASE("schedule report: constant schedules pass the sampled checks") {
  Schedule s = constant_schedule(0.2, 0.2, 0.5, 1e-4);
  ScheduleReport rep = validate_schedule(s);
  CHECK(!rep.checks.empty());
  for (const auto& c : rep.checks) {
    INFO(c.name, ": ", c.note);
    // A constant ratio is non-increasing, so nothing fails.
    CHECK(c.passed);
  }
  CHECK(rep.violations.empty());
}

TEST_CASE("schedule report: the default schedule fails only the ratio check") {
  ScheduleReport rep = validate_schedule(default_schedule());
  REQUIRE(!rep.violations.empty());
  for (const auto& v : rep.violations) {
    CHECK(v == "eps_unif_over_eps_reg_decreasing");
  }
  // Every other sampled condition holds.
  int passed = 0;
  for (const auto& c : rep.checks) {
    if (c.passed) ++passed;
  }
  CHECK(passed == static_cast<int>(rep.checks.size()) - 1);
}

TEST_CASE("schedule report flags nonpositive and growing components") {
  Schedule bad = constant_schedule(0.2, 0.2, 0.5, 1e-4);
  bad.eps_flat = [](double t) { return std::min(1.0, t / 1e6); };  // grows
  bad.eps_reg = [](double) { return 0.0; };                        // not positive
  ScheduleReport rep = validate_schedule(bad);
  bool saw_monotone = false, saw_positive = false;
  for (const auto& v : rep.violations) {
    if (v.find("positive") != std::string::npos) saw_positive = true;
    if (v.find("nonincreasing") != std::string::npos || v.find("decreasing") != std::string::npos)
      saw_monotone = true;
  }
  CHECK(saw_positive);
  CHECK(saw_monotone);
}
