#include <doctest.h>

#include <avgmdp/chains.hpp>
#include <avgmdp/model.hpp>

#include <cmath>
#include <limits>
#include <string>

using namespace avgmdp;

namespace {

std::string models_dir() { return AVGMDP_MODELS_DIR; }

MarkovChain two_state_cycle() {
  MarkovChain c;
  c.P.resize(2, 2);
  c.P << 0, 1, 1, 0;
  c.r.resize(2);
  c.r << 1.0, 0.0;
  return c;
}

}  // namespace

TEST_CASE("policy helpers build valid distributions") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  StochasticPolicy u = StochasticPolicy::uniform(m);
  u.validate(m);
  CHECK(u.probs[0](0) == doctest::Approx(0.5));

  StochasticPolicy p = StochasticPolicy::pure(m, {1, 0});
  p.validate(m);
  CHECK(p.probs[0](1) == 1.0);
  CHECK(p.probs[1](0) == 1.0);

  StochasticPolicy broken = u;
  broken.probs[0](0) = 0.9;  // no longer normalized
  CHECK_THROWS(broken.validate(m));
}

TEST_CASE("induced chain mixes kernels and rewards by action probability") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  MarkovChain c = induced_chain(m, StochasticPolicy::uniform(m));
  // State 1: star goes to 2, par self-loops; uniform mix.
  CHECK(c.P(0, 0) == doctest::Approx(0.5));
  CHECK(c.P(0, 1) == doctest::Approx(0.5));
  CHECK(c.r(0) == doctest::Approx(0.5 * 0.5 + 0.5 * 0.1));
}

TEST_CASE("chain analysis of a deterministic cycle") {
  ChainAnalysis a = analyze_chain(two_state_cycle());
  REQUIRE(a.recurrent_classes.size() == 1);
  CHECK(a.recurrent_classes[0] == std::vector<int>{0, 1});
  CHECK(a.gain(0) == doctest::Approx(0.5));
  CHECK(a.gain(1) == doctest::Approx(0.5));
  // Cesaro bias is stationary-orthogonal: nu . h = 0 with nu = (1/2, 1/2).
  CHECK(a.bias(0) + a.bias(1) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(a.bias(0) - a.bias(1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(a.stationary[0](0) == doctest::Approx(0.5));
}

TEST_CASE("chain analysis separates transient states and multiple classes") {
  MarkovChain c;
  c.P.resize(3, 3);
  // 0 is transient, splitting to the absorbing states 1 and 2.
  c.P << 0.0, 0.5, 0.5,
         0.0, 1.0, 0.0,
         0.0, 0.0, 1.0;
  c.r.resize(3);
  c.r << 0.0, 1.0, 0.0;
  ChainAnalysis a = analyze_chain(c);
  REQUIRE(a.recurrent_classes.size() == 2);
  CHECK(a.state_class[0] == -1);
  CHECK(a.gain(1) == doctest::Approx(1.0));
  CHECK(a.gain(2) == doctest::Approx(0.0));
  CHECK(a.gain(0) == doctest::Approx(0.5));  // half chance of each fate
  CHECK(a.reach(0, 0) == doctest::Approx(0.5));
  CHECK(a.reach(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("strongly connected components in least-vertex order") {
  // 0 -> 1 -> 2 -> 0 is one component; 3 hangs off it.
  std::vector<std::vector<int>> adj{{1}, {2}, {0}, {0}};
  auto sccs = strongly_connected_components(adj);
  REQUIRE(sccs.size() == 2);
  CHECK(sccs[0] == std::vector<int>{0, 1, 2});
  CHECK(sccs[1] == std::vector<int>{3});
}

TEST_CASE("expected hitting steps on a biased walk") {
  Eigen::MatrixXd P(2, 2);
  P << 0.75, 0.25, 0.0, 1.0;
  Eigen::VectorXd h = expected_hitting_steps(P, {1});
  CHECK(h(1) == 0.0);
  CHECK(h(0) == doctest::Approx(4.0).epsilon(1e-9));  // geometric with p = 1/4

  // Unreachable target: infinite from the stranded state.
  Eigen::MatrixXd Q(2, 2);
  Q << 1.0, 0.0, 0.0, 1.0;
  Eigen::VectorXd g = expected_hitting_steps(Q, {1});
  CHECK(std::isinf(g(0)));
  CHECK(g(1) == 0.0);
}

TEST_CASE("chain diameter counts arrivals") {
  // Single self-looping state: diameter 1.
  Eigen::MatrixXd loop(1, 1);
  loop << 1.0;
  CHECK(chain_diameter(loop) == doctest::Approx(1.0));

  // Deterministic 3-cycle: worst start needs 3 arrivals-counted steps.
  Eigen::MatrixXd cyc(3, 3);
  cyc << 0, 1, 0,
         0, 0, 1,
         1, 0, 0;
  CHECK(chain_diameter(cyc) == doctest::Approx(3.0).epsilon(1e-9));

  // Two absorbing states: the cover holds one state of each class; a walk
  // started in either class is already at its cover state.
  Eigen::MatrixXd two(2, 2);
  two << 1.0, 0.0, 0.0, 1.0;
  CHECK(chain_diameter(two) == doctest::Approx(1.0));
}
