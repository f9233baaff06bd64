#include <algorithm>
#include <numbers>
#include <sstream>

#include "support.hpp"
#include "toolforge/errors.hpp"
#include "toolforge/policies.hpp"

using namespace toolforge;

namespace {

Env make_env(int episode_length = 600, bool dr = true) {
  EnvConfig e;
  e.episode_length = episode_length;
  RandomizationConfig r;
  r.enabled = dr;
  return Env(RobotModel::default_model(), sample_tool(3), e, ControlConfig{}, RewardConfig::eval(), r);
}

}  // namespace

TEST_SUITE("policies") {
  TEST_CASE("factory") {
    CHECK(make_policy("oracle")->name() == "oracle");
    CHECK(make_policy("random")->name() == "random");
    CHECK(make_policy("frozen")->name() == "frozen");
    CHECK_THROWS_AS(make_policy("ppo"), ValidationError);
  }

  TEST_CASE("random policy is seeded and in range") {
    Env env = make_env();
    const StepResult r = env.reset(1);
    RandomPolicy a, b;
    a.reset(env, 5);
    b.reset(env, 5);
    for (int i = 0; i < 200; ++i) {
      const VecX x = a.act(env, r).action, y = b.act(env, r).action;
      CHECK(x == y);
      CHECK(x.cwiseAbs().maxCoeff() <= 1.0);
      CHECK(x.size() == env.model().dof());
    }
  }

  TEST_CASE("1000-step random episode never leaves the joint limits") {
    Env env = make_env(1000);
    RandomPolicy policy;
    StepResult r = env.reset(12);
    policy.reset(env, 12);
    int steps = 0;
    while (!env.state().done) {
      r = env.step(policy.act(env, r).action);
      REQUIRE(env.model().within_limits(env.state().joints.q));
      REQUIRE(env.model().within_limits(env.state().control.prev_target));
      ++steps;
    }
    CHECK(steps <= 1000);
  }

  TEST_CASE("frozen policy makes no progress and times out") {
    Env env = make_env();
    FrozenPolicy frozen;
    EpisodeOptions opts;
    opts.goals = easy_goal_chain(env, 4);
    const EpisodeSummary s = run_episode(env, frozen, 4, opts);
    REQUIRE(s.progress.has_value());
    CHECK(s.progress->progress == 0.0);
    CHECK(s.termination == "timeout");
    CHECK(s.progress->failure == "timeout");
    CHECK(s.steps == 600);
  }

  TEST_CASE("oracle on an easy chain reaches every goal and matches the reward engine") {
    Env env = make_env(1500, false);
    OraclePolicy oracle;
    EpisodeOptions opts;
    opts.goals = easy_goal_chain(env, 2);
    std::ostringstream log, csv;
    opts.log = &log;
    opts.reward_csv = &csv;
    const EpisodeSummary s = run_episode(env, oracle, 2, opts);
    REQUIRE(s.progress.has_value());
    CHECK(s.progress->progress == 100.0);
    CHECK(s.success_events == s.progress->goals_reached);
    CHECK(s.lifted_events == 1);
    CHECK(s.termination == "max_success");

    // the logged rollout scores the same through the offline evaluator
    const Rollout rollout = parse_rollout(log.str());
    CHECK(static_cast<int>(rollout.object_poses.size()) == s.steps);
    CHECK(evaluate_progress(rollout, opts.goals).goals_reached == s.success_events);
    std::size_t lines = 0;
    for (char c : csv.str()) lines += c == '\n';
    CHECK(static_cast<int>(lines) == s.steps + 1);
  }

  TEST_CASE("oracle in random-goal mode earns one success bonus per goal and resamples") {
    // random first goals need large reorientations, so allow a long episode
    Env env = make_env(1500, false);
    OraclePolicy oracle;
    StepResult r = env.reset(7);
    oracle.reset(env, 7);
    int successes = 0;
    while (!env.state().done && successes == 0) {
      const Pose goal_before = env.state().goal;
      const PolicyOutput out = oracle.act(env, r);
      r = env.step(out.action, out.event);
      const auto n = std::count(r.info.events.begin(), r.info.events.end(), "success");
      if (n > 0) {
        CHECK(n == 1);
        CHECK(r.info.terms.goal >= env.reward_config().success_bonus);
        CHECK(!test::near_pose(env.state().goal, goal_before, 1e-9));
        CHECK(env.state().reward.success_count == 1);
      }
      successes += static_cast<int>(n);
    }
    CHECK(successes == 1);
  }

  TEST_CASE("unreachable goals leave progress below 100% with a reason") {
    EnvConfig e;
    e.clamp_goals = false;
    RandomizationConfig r;
    r.enabled = false;
    Env env(RobotModel::default_model(), sample_tool(3), e, ControlConfig{}, RewardConfig::eval(), r);
    std::vector<Pose> goals = easy_goal_chain(env, 6, 1);
    Pose far = goals.back();
    far.translation += Vec3(3.0, 0.0, 0.0);  // beyond the arm's reach
    goals.push_back(far);
    OraclePolicy oracle;
    EpisodeOptions opts;
    opts.goals = goals;
    const EpisodeSummary s = run_episode(env, oracle, 6, opts);
    REQUIRE(s.progress.has_value());
    CHECK(s.progress->progress < 100.0);
    CHECK(!s.progress->failure.empty());
    CHECK(s.progress->goals_reached == s.success_events);
  }

  TEST_CASE("easy goal chain shape") {
    Env env = make_env();
    const auto goals = easy_goal_chain(env, 9, 4, 0.2, 0.03, 10.0);
    REQUIRE(goals.size() == 5);
    Env probe = make_env();
    probe.reset(9);
    CHECK(goals[0].translation.z() == doctest::Approx(probe.state().object.translation.z() + 0.2));
    for (std::size_t i = 1; i < goals.size(); ++i) {
      CHECK((goals[i].translation - goals[i - 1].translation).norm() <= 0.03 + 1e-12);
      CHECK(rotation_angle(goals[i].rotation, goals[i - 1].rotation) <= 10.0 * std::numbers::pi / 180.0 + 1e-9);
    }
    CHECK(easy_goal_chain(env, 9).size() == goals.size());
  }

  TEST_CASE("batch results do not depend on the job count") {
    auto episode = [](int i) {
      Env env = make_env(200);
      RandomPolicy policy;
      return run_episode(env, policy, derive_seed(3, "episode", static_cast<std::uint64_t>(i)));
    };
    const auto serial = run_batch(6, 1, episode);
    const auto threaded = run_batch(6, 3, episode);
    REQUIRE(serial.size() == threaded.size());
    for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].to_json().dump() == threaded[i].to_json().dump());
  }

  TEST_CASE("episode log records carry the documented fields") {
    Env env = make_env(5);
    FrozenPolicy frozen;
    std::ostringstream log;
    EpisodeOptions opts;
    opts.log = &log;
    run_episode(env, frozen, 1, opts);
    std::istringstream in(log.str());
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
      const json rec = json::parse(line);
      for (const char* key : {"step", "q", "object_pose", "goal_pose", "d", "reward_terms", "events"}) {
        CHECK(rec.contains(key));
      }
      CHECK(rec["step"].get<int>() == ++count);
    }
    CHECK(count == 5);
  }
}
