#include <doctest.h>

#include <avgmdp/measures.hpp>
#include <avgmdp/model.hpp>
#include <avgmdp/solve.hpp>

#include "support/oracles.hpp"

#include <functional>
#include <random>
#include <string>

using namespace avgmdp;

namespace {

std::string models_dir() { return AVGMDP_MODELS_DIR; }

InvariantMeasure make_mu(std::initializer_list<double> w, bool prob = true) {
  InvariantMeasure mu;
  mu.weights = Eigen::Map<const Eigen::VectorXd>(w.begin(), static_cast<Eigen::Index>(w.size()));
  mu.is_probability = prob;
  return mu;
}

bool throws_with(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const std::exception& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("state marginal and flow residual on hand-built measures") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  // Pair order: (1,star) (1,par) (2,dag) (2,ddag).
  InvariantMeasure mu = make_mu({0.25, 0.25, 0.25, 0.25});
  Eigen::VectorXd marg = state_marginal(mu, m);
  CHECK(marg(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(marg(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(flow_residual(mu, m) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(is_invariant(mu, m));

  // Crossing masses must balance: star carries 0.1 more than dag here.
  InvariantMeasure bad = make_mu({0.3, 0.25, 0.2, 0.25});
  CHECK(flow_residual(bad, m) == doctest::Approx(0.1).epsilon(1e-9));
  CHECK_FALSE(is_invariant(bad, m));

  // Negative entries are rejected outright.
  InvariantMeasure neg = make_mu({0.5, 0.25, 0.5, -0.25});
  CHECK_FALSE(is_invariant(neg, m));
}

TEST_CASE("uniformity test inside the invariance predicate") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  InvariantMeasure skew = make_mu({0.49, 0.01, 0.49, 0.01});
  CHECK(is_invariant(skew, m));
  CHECK(is_invariant(skew, m, 0.02));        // 0.01 == 0.02 * 0.5 exactly
  CHECK_FALSE(is_invariant(skew, m, 0.1));   // 0.01 < 0.1 * 0.5
}

TEST_CASE("unichain policy measure concentrates on the recurrent class") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  // Self-loop at 1 plus return from 2: everything piles onto (1,par).
  DeterministicPolicy pi{1, 0};
  InvariantMeasure mu = unichain_policy_measure(m, StochasticPolicy::pure(m, pi));
  CHECK(mu.is_probability);
  CHECK(mu.weights(m.pair_by_names("1", "par")) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mu.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(is_invariant(mu, m));

  // Uniform policy: both states half the time, actions split evenly.
  InvariantMeasure mu_u = unichain_policy_measure(m, StochasticPolicy::uniform(m));
  for (int p = 0; p < 4; ++p) CHECK(mu_u.weights(p) == doctest::Approx(0.25).epsilon(1e-10));

  // Two disjoint self-loops: not unichain.
  DeterministicPolicy split{1, 1};
  CHECK_THROWS_AS(unichain_policy_measure(m, StochasticPolicy::pure(m, split)),
                  std::runtime_error);
}

TEST_CASE("fully randomized stationary measures and the support guard") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  InvariantMeasure mu = policy_stationary_measure(StochasticPolicy::uniform(m), m);
  CHECK(is_invariant(mu, m));
  CHECK(mu.weights.minCoeff() > 0.0);

  CHECK(throws_with(
      [&] { policy_stationary_measure(StochasticPolicy::pure(m, DeterministicPolicy{0, 0}), m); },
      "NotFullySupported"));
}

TEST_CASE("induced policy inverts the stationary-measure map") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  std::mt19937 rng(5150);
  std::uniform_real_distribution<double> un(0.05, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    StochasticPolicy pi = StochasticPolicy::uniform(m);
    for (int s = 0; s < m.num_states(); ++s) {
      for (int a = 0; a < m.num_actions(s); ++a) pi.probs[s](a) = un(rng);
      pi.probs[s] /= pi.probs[s].sum();
    }
    InvariantMeasure mu = policy_stationary_measure(pi, m);
    StochasticPolicy back = induced_policy(mu, m);
    for (int s = 0; s < m.num_states(); ++s) {
      CHECK((back.probs[s] - pi.probs[s]).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  CHECK(throws_with(
      [&] { induced_policy(make_mu({0.5, 0.5, 0.0, 0.0}), m); },
      "DegenerateMeasure"));
}

TEST_CASE("covering measure maximizes its smallest entry") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  InvariantMeasure cov = covering_measure(m);
  CHECK(cov.is_probability);
  CHECK(is_invariant(cov, m));
  // Guaranteed floor 1 / (pairs * diameter) = 1/8; here the symmetric
  // solution achieves 1/4.
  CHECK(cov.weights.minCoeff() >= 1.0 / 8.0 - 1e-9);
  CHECK(cov.weights.minCoeff() == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("covering floor holds on random communicating instances") {
  std::mt19937 rng(2718281);
  int built = 0;
  while (built < 25) {
    Mdp m = oracles::random_mdp_candidate(rng, 3, 3);
    if (!is_communicating(m)) continue;
    ++built;
    InvariantMeasure cov = covering_measure(m);
    CHECK(is_invariant(cov, m));
    double floor = 1.0 / (m.num_pairs() * diameter(m));
    CHECK(cov.weights.minCoeff() >= floor - 1e-9);
  }
}

TEST_CASE("uniformization floors every pair and moves the measure little") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  // All mass on the costly self-loop; state 2 starts empty.
  InvariantMeasure mu = make_mu({0.0, 1.0, 0.0, 0.0});
  REQUIRE(is_invariant(mu, m));

  double eps = 0.05;
  UniformizedMeasure u = uniformize(mu, m, eps);
  CHECK_FALSE(u.clamped);
  CHECK(u.epsilon_effective == doctest::Approx(eps).epsilon(1e-12));
  CHECK(is_invariant(u.measure, m, eps * (1.0 - 1e-9)));
  double dist = (u.measure.weights - mu.weights).cwiseAbs().maxCoeff();
  CHECK(dist <= m.num_pairs() * diameter(m) * eps + 1e-9);

  // Requests above the feasible ceiling clamp to 0.99 / (pairs * diameter).
  UniformizedMeasure big = uniformize(mu, m, 0.2);
  CHECK(big.clamped);
  CHECK(big.epsilon_effective == doctest::Approx(0.99 / 8.0).epsilon(1e-12));
  CHECK(is_invariant(big.measure, m, big.epsilon_effective * (1.0 - 1e-9)));
}

TEST_CASE("uniformization distance bound on random instances") {
  std::mt19937 rng(1123581);
  int built = 0;
  while (built < 20) {
    Mdp m = oracles::random_mdp_candidate(rng, 3, 3);
    if (!is_communicating(m)) continue;
    ++built;
    InvariantMeasure mu = policy_stationary_measure(StochasticPolicy::uniform(m), m);
    double eps = 0.01;
    UniformizedMeasure u = uniformize(mu, m, eps);
    CHECK(is_invariant(u.measure, m, u.epsilon_effective * (1.0 - 1e-9)));
    double dist = (u.measure.weights - mu.weights).cwiseAbs().maxCoeff();
    CHECK(dist <= m.num_pairs() * diameter(m) * u.epsilon_effective + 1e-9);
  }
}

TEST_CASE("unichain decomposition reconstructs deterministic-kernel measures") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  InvariantMeasure mu = make_mu({0.3, 0.2, 0.3, 0.2});
  REQUIRE(is_invariant(mu, m));

  UnichainDecomposition dec = decompose_unichain(mu, m);
  CHECK(dec.residual <= 1e-9);
  CHECK(static_cast<int>(dec.terms.size()) <= m.num_pairs());

  Eigen::VectorXd recon = Eigen::VectorXd::Zero(m.num_pairs());
  for (const auto& term : dec.terms) {
    CHECK(term.coefficient > 0.0);
    CHECK(term.measure.is_probability);
    CHECK(is_invariant(term.measure, m));
    recon += term.coefficient * term.measure.weights;
    // Deterministic kernels: each term lives exactly on its seed cycle.
    for (int p = 0; p < m.num_pairs(); ++p) {
      bool in_cycle = std::find(term.cycle_pairs.begin(), term.cycle_pairs.end(), p) !=
                      term.cycle_pairs.end();
      if (!in_cycle) CHECK(term.measure.weights(p) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
  CHECK((recon - mu.weights).cwiseAbs().maxCoeff() <= 1e-9);

  CHECK(throws_with([&] { decompose_unichain(make_mu({0.5, 0.5, 0.0, 0.0}), m); },
                    "NotInvariant"));
}

TEST_CASE("unichain decomposition on random branching kernels") {
  std::mt19937 rng(987654);
  int built = 0;
  while (built < 15) {
    Mdp m = oracles::random_mdp_candidate(rng, 3, 3);
    if (!is_communicating(m)) continue;
    ++built;
    InvariantMeasure mu = policy_stationary_measure(StochasticPolicy::uniform(m), m);
    UnichainDecomposition dec = decompose_unichain(mu, m);
    CHECK(dec.residual <= 1e-9);
    CHECK(static_cast<int>(dec.terms.size()) <= m.num_pairs());
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(m.num_pairs());
    for (const auto& term : dec.terms) {
      CHECK(is_invariant(term.measure, m));
      recon += term.coefficient * term.measure.weights;
    }
    CHECK((recon - mu.weights).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("measure-weighted gaps equal measure-weighted reward deficits") {
  // With a unique solution of the optimality equation the two weighted sums
  // agree for every invariant probability measure.
  std::mt19937 rng(314159);
  std::uniform_real_distribution<double> un(0.05, 1.0);
  int built = 0;
  while (built < 40) {
    Mdp m = oracles::random_mdp_candidate(rng, 3, 3);
    if (!is_communicating(m)) continue;
    ++built;
    OptimalSolution sol = classify_optimal(m);
    StochasticPolicy pi = StochasticPolicy::uniform(m);
    for (int s = 0; s < m.num_states(); ++s) {
      for (int a = 0; a < m.num_actions(s); ++a) pi.probs[s](a) = un(rng);
      pi.probs[s] /= pi.probs[s].sum();
    }
    InvariantMeasure mu = policy_stationary_measure(pi, m);
    double lhs = 0.0, rhs = 0.0;
    for (int p = 0; p < m.num_pairs(); ++p) {
      lhs += mu.weights(p) * sol.gaps(p);
      rhs += mu.weights(p) * (sol.opt_gain - m.reward[p]);
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9).scale(1.0));
  }
}
