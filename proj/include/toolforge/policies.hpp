#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "toolforge/env.hpp"
#include "toolforge/traj_eval.hpp"

namespace toolforge {

struct PolicyOutput {
  VecX action;
  GraspEvent event = GraspEvent::None;
};

/// Maps the current environment state to an action in [-1, 1]^dof.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void reset(const Env& env, std::uint64_t seed) = 0;
  virtual PolicyOutput act(const Env& env, const StepResult& last) = 0;
};

/// Zero action every step: the arm holds still and the hand settles at the
/// middle of its range.
class FrozenPolicy final : public Policy {
 public:
  std::string name() const override { return "frozen"; }
  void reset(const Env&, std::uint64_t) override {}
  PolicyOutput act(const Env& env, const StepResult& last) override;
};

/// Uniform actions in [-1, 1]^dof from a per-episode stream.
class RandomPolicy final : public Policy {
 public:
  std::string name() const override { return "random"; }
  void reset(const Env& env, std::uint64_t seed) override;
  PolicyOutput act(const Env& env, const StepResult& last) override;

 private:
  Rng rng_{0};
};

struct OracleConfig {
  double damping = 0.05;
  double attach_radius = 0.01;  // emit attach once the palm is this close
};

/// Scripted expert with privileged state. Phase 1 servoes the palm to the
/// grasp-box center, holding its reset orientation, and attaches; phase 2 servoes the palm so that the
/// attached object tracks the current goal. Joint steps come from one DLS
/// step and are converted to delta-arm actions.
class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(OracleConfig config = {}) : config_(config) {}
  std::string name() const override { return "oracle"; }
  void reset(const Env& env, std::uint64_t seed) override;
  PolicyOutput act(const Env& env, const StepResult& last) override;

 private:
  VecX arm_action(const Env& env, const VecX& dq_arm) const;
  OracleConfig config_;
  Quat approach_rotation_ = Quat::Identity();
};

std::unique_ptr<Policy> make_policy(const std::string& name);

/// One JSONL record per control step.
json episode_record(int step, const Env& env, const Pose& goal_used, const StepResult& r);

struct EpisodeSummary {
  std::uint64_t seed = 0;
  int steps = 0;
  double total_reward = 0.0;
  int success_events = 0;  // B_succ payouts
  int lifted_events = 0;
  std::string termination;
  std::optional<ProgressReport> progress;

  json to_json() const;
};

struct EpisodeOptions {
  std::vector<Pose> goals;  // empty: random goals, no progress report
  double eps = 0.02;
  int step_budget = 0;      // 0: the environment's episode length
  std::ostream* log = nullptr;
  std::ostream* reward_csv = nullptr;
};

/// Resets `env` with `seed` and runs `policy` until termination. With goals,
/// the environment runs in sequence mode and the closed-loop tracker scores
/// the post-step object poses.
EpisodeSummary run_episode(Env& env, Policy& policy, std::uint64_t seed, const EpisodeOptions& opts = {});

/// Runs `count` independent episodes; results depend only on their index.
std::vector<EpisodeSummary> run_batch(int count, int jobs,
                                      const std::function<EpisodeSummary(int index)>& episode);

/// Goals for a trivially trackable episode: the spawn pose lifted by `lift`
/// followed by `extra` small moves (at most max_step m and max_rot_deg each).
std::vector<Pose> easy_goal_chain(const Env& env, std::uint64_t seed, int extra = 4, double lift = 0.2,
                                  double max_step = 0.03, double max_rot_deg = 10.0);

}  // namespace toolforge
