#include <algorithm>
#include <sstream>

#include "support.hpp"
#include "toolforge/errors.hpp"
#include "toolforge/reward.hpp"

using namespace toolforge;

namespace {

/// Random walk of distances with occasional jumps, clamped to [0.011, 1].
std::vector<double> distance_sequence(Rng& rng, int n, double start) {
  std::vector<double> d{start};
  for (int i = 1; i < n; ++i) {
    double next = d.back() + rng.normal(0.0, 0.01);
    if (rng.bernoulli(0.01)) next = rng.uniform(0.011, 1.0);
    d.push_back(std::clamp(next, 0.011, 1.0));
  }
  return d;
}

}  // namespace

TEST_SUITE("reward") {
  TEST_CASE("smoothness") {
    const RewardConfig c;
    CHECK(smoothness_reward(VecX::Zero(7), VecX::Zero(22), c) == 0.0);
    CHECK(smoothness_reward(VecX::Ones(7), VecX::Zero(22), c) == doctest::Approx(-0.21).epsilon(1e-12));
    CHECK(smoothness_reward(VecX::Zero(7), -VecX::Ones(22), c) == doctest::Approx(-0.066).epsilon(1e-12));
    VecX a = VecX::Random(7), h = VecX::Random(22);
    const double base = smoothness_reward(a, h, c);
    CHECK(smoothness_reward(3.0 * a, 3.0 * h, c) == doctest::Approx(3.0 * base).epsilon(1e-12));
    CHECK(base <= 0.0);
  }

  TEST_CASE("approach rewards only improvement") {
    const RewardConfig c;
    RewardState s;
    reset_reward_state(s, 0.30, 1.0);
    CHECK(approach_reward(0.30, s, c) == 0.0);
    CHECK(approach_reward(0.25, s, c) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(s.dbar_star_ft == 0.25);
    CHECK(approach_reward(0.28, s, c) == 0.0);
    CHECK(s.dbar_star_ft == 0.25);
  }

  TEST_CASE("lift reward and one-shot bonus") {
    const RewardConfig c;
    RewardState s;
    reset_reward_state(s, 0.3, 1.0);
    CHECK(lift_reward(0.63, s, c) == 0.0);
    CHECK(lift_reward(0.68, s, c) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!s.grasped);
    CHECK(lift_reward(0.74, s, c) == doctest::Approx(302.2).epsilon(1e-12));
    CHECK(s.grasped);
    CHECK(s.lifted_bonus_paid);
    CHECK(lift_reward(0.74, s, c) == doctest::Approx(2.2).epsilon(1e-12));
  }

  TEST_CASE("lift term is gated off after grasping") {
    const RewardConfig c;
    RewardState s;
    reset_reward_state(s, 0.3, 0.5);
    RewardInputs in{VecX::Zero(7), VecX::Zero(22), 0.3, 0.74, 0.5};
    RewardTerms t = total_reward(in, s, c);
    CHECK(t.lift == doctest::Approx(302.2));
    CHECK(t.lifted_bonus);
    t = total_reward(in, s, c);
    CHECK(t.lift == 0.0);
    CHECK(!t.lifted_bonus);
  }

  TEST_CASE("goal reward") {
    const RewardConfig c;
    RewardState s;
    reset_reward_state(s, 0.3, 0.10);
    s.grasped = true;
    GoalReward g = goal_reward(0.10, s, c);
    CHECK(g.total() == 0.0);
    CHECK(!g.goal_reached);
    g = goal_reward(0.08, s, c);
    CHECK(g.dense == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(s.d_star == 0.08);
    g = goal_reward(0.005, s, c);
    CHECK(g.goal_reached);
    CHECK(g.bonus == 1000.0);
    CHECK(g.dense == doctest::Approx(200.0 * 0.075).epsilon(1e-12));
  }

  TEST_CASE("pre-grasp step with no progress pays nothing") {
    const RewardConfig c;
    RewardState s;
    reset_reward_state(s, 0.3, 0.5);
    const RewardTerms t = total_reward({VecX::Zero(7), VecX::Zero(22), 0.3, 0.6, 0.5}, s, c);
    CHECK(t.total == 0.0);
  }

  TEST_CASE("property: dense goal reward telescopes") {
    const RewardConfig c;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const auto d = distance_sequence(rng, 10000, rng.uniform(0.05, 1.0));
      RewardState s;
      reset_reward_state(s, 0.3, d.front());
      s.grasped = true;
      double sum = 0.0;
      for (double di : d) sum += goal_reward(di, s, c).dense;
      const double expected = c.lambda_goal * (d.front() - *std::min_element(d.begin(), d.end()));
      CHECK(sum == doctest::Approx(expected).epsilon(1e-9));
    }
  }

  TEST_CASE("property: trackers are monotone and latches never unset") {
    const RewardConfig c;
    Rng rng(77);
    RewardState s;
    reset_reward_state(s, 0.4, 0.6);
    int lifted_bonuses = 0;
    double prev_dstar = s.d_star, prev_ft = s.dbar_star_ft;
    bool was_grasped = false;
    for (int step = 0; step < 5000; ++step) {
      RewardInputs in{VecX::Zero(7), VecX::Zero(22), rng.uniform(0.0, 0.5), rng.uniform(0.6, 0.8),
                      rng.uniform(0.011, 0.7)};
      const RewardTerms t = total_reward(in, s, c);
      lifted_bonuses += t.lifted_bonus ? 1 : 0;
      CHECK(t.approach >= 0.0);
      CHECK(t.goal_dense >= 0.0);
      CHECK(s.d_star <= prev_dstar);
      CHECK(s.dbar_star_ft <= prev_ft);
      if (was_grasped) CHECK(s.grasped);
      was_grasped = s.grasped;
      prev_dstar = s.d_star;
      prev_ft = s.dbar_star_ft;
    }
    CHECK(lifted_bonuses == 1);
  }

  TEST_CASE("frozen object earns no dense goal reward after the first step") {
    const RewardConfig c;
    RewardState s;
    reset_reward_state(s, 0.3, 0.4);
    s.grasped = true;
    CHECK(goal_reward(0.35, s, c).dense == doctest::Approx(10.0));
    for (int i = 0; i < 100; ++i) CHECK(goal_reward(0.35, s, c).dense == 0.0);
  }

  TEST_CASE("success bonus fires once per goal") {
    const RewardConfig c;
    RewardState s;
    reset_reward_state(s, 0.3, 0.2);
    s.grasped = true;
    int bonuses = 0;
    for (int goal = 0; goal < 5; ++goal) {
      for (double d = 0.2; d > 0.0; d -= 0.004) {
        const GoalReward g = goal_reward(d, s, c);
        if (g.goal_reached) {
          ++bonuses;
          on_new_goal(s, 0.2);
          break;
        }
      }
    }
    CHECK(bonuses == 5);
  }

  TEST_CASE("presets and validation") {
    CHECK(RewardConfig::train().success_tolerance == 0.01);
    CHECK(RewardConfig::eval().success_tolerance == 0.02);
    RewardConfig c;
    c.lambda_goal = -1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }

  TEST_CASE("reward CSV layout") {
    std::ostringstream os;
    write_reward_csv_header(os);
    RewardTerms t;
    t.smooth = -0.5;
    t.goal = 4.0;
    write_reward_csv_row(os, 3, t, 0.08, 0.08);
    const std::string out = os.str();
    CHECK(out.rfind("step,r_smooth,r_approach,r_lift,r_goal,d,d_star\n", 0) == 0);
    CHECK(out.find("\n3,") != std::string::npos);
  }
}
