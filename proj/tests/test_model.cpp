#include <doctest.h>

#include <avgmdp/model.hpp>

#include <stdexcept>
#include <string>

using namespace avgmdp;

namespace {

std::string models_dir() { return AVGMDP_MODELS_DIR; }

}  // namespace

TEST_CASE("flattened pair indexing is state-major") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  CHECK(m.num_states() == 2);
  CHECK(m.num_pairs() == 4);
  CHECK(m.num_actions(0) == 2);
  CHECK(m.num_actions(1) == 2);
  CHECK(m.pair_index(0, 0) == 0);
  CHECK(m.pair_index(1, 1) == 3);
  CHECK(m.state_action(2) == std::pair<int, int>{1, 0});
  CHECK(m.pair_label(0) == "1,star");
  CHECK(m.pair_label(3) == "2,ddag");
  CHECK(m.state_index("2") == 1);
  CHECK(m.pair_by_names("2", "dag") == 2);
  CHECK_THROWS_AS(m.state_index("nope"), std::out_of_range);
  CHECK_THROWS_AS(m.pair_by_names("1", "dag"), std::out_of_range);
}

TEST_CASE("frozen model inventory parses with expected rewards") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  CHECK(m.reward[m.pair_by_names("1", "star")] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.reward[m.pair_by_names("1", "par")] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(m.reward[m.pair_by_names("2", "dag")] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.reward[m.pair_by_names("2", "ddag")] == doctest::Approx(0.5).epsilon(1e-12));
  for (int p = 0; p < m.num_pairs(); ++p) CHECK(m.kernel_space[p] == KernelSpace::Known);

  Mdp t2 = load_mdp(models_dir() + "/regret_discontinuity_theta002.json");
  CHECK(t2.reward[t2.pair_by_names("1", "star")] == doctest::Approx(0.48).epsilon(1e-12));
  CHECK(t2.reward[t2.pair_by_names("2", "dag")] == doctest::Approx(0.48).epsilon(1e-12));

  Mdp mc = load_mdp(models_dir() + "/coexploration_theta01.json");
  CHECK(mc.reward[mc.pair_by_names("1", "stay")] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(mc.reward[mc.pair_by_names("2", "stay")] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mc.reward[mc.pair_by_names("1", "go")] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("serialization round-trips byte for byte") {
  for (const char* name :
       {"regret_discontinuity", "discontinuous_gaps_theta01", "example_leveling_mprime"}) {
    Mdp m = load_mdp(models_dir() + "/" + name + ".json");
    std::string once = mdp_to_json(m, false);
    Mdp back = parse_mdp(once);
    std::string twice = mdp_to_json(back, false);
    CHECK(once == twice);
    CHECK(same_shape(m, back));
    CHECK(same_skeleton(m, back));
  }
}

TEST_CASE("parser rejects malformed models") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");

  Mdp bad_reward = m;
  bad_reward.reward[0] = 1.5;
  CHECK_THROWS_AS(parse_mdp(mdp_to_json(bad_reward, false)), std::runtime_error);

  Mdp bad_kernel = m;
  bad_kernel.kernel[0](0) = 0.7;  // row sum now far from one
  CHECK_THROWS_AS(parse_mdp(mdp_to_json(bad_kernel, false)), std::runtime_error);

  CHECK_THROWS_AS(parse_mdp("{\"name\": \"x\"}"), std::runtime_error);
  CHECK_THROWS_AS(load_mdp("/definitely/not/here.json"), std::runtime_error);
}

TEST_CASE("small kernel defects are renormalized") {
  Mdp m = load_mdp(models_dir() + "/regret_discontinuity.json");
  m.kernel[0](0) += 5e-10;  // within the 1e-9 renormalization budget
  Mdp back = parse_mdp(mdp_to_json(m, false));
  CHECK(back.kernel[0].sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shape and skeleton predicates distinguish support from values") {
  Mdp a = load_mdp(models_dir() + "/regret_discontinuity.json");
  Mdp b = a;
  b.reward[0] = 0.25;
  CHECK(same_shape(a, b));  // rewards free to differ

  Mdp c = a;
  c.kernel[0] = Eigen::VectorXd::Zero(2);
  c.kernel[0](0) = 1.0;  // different support
  CHECK_FALSE(same_shape(a, c));
  CHECK(same_skeleton(a, c));  // skeleton ignores kernels entirely

  Mdp d = a;
  d.state_names.push_back("3");
  CHECK_FALSE(same_skeleton(a, d));
}
