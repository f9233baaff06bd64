#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/asset.hpp"
#include "toolforge/control.hpp"
#include "toolforge/randomization.hpp"
#include "toolforge/reward.hpp"
#include "toolforge/robot.hpp"

namespace toolforge {

struct Box3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  bool contains(const Vec3& p, double tol = 0.0) const {
    return ((p.array() >= lo.array() - tol) && (p.array() <= hi.array() + tol)).all();
  }
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(lo).cwiseMin(hi); }
};

struct EnvConfig {
  int episode_length = 600;       // control steps
  int sim_hz = 120;
  int control_hz = 60;
  double object_xy_range = 0.10;  // +- m around the table center
  double table_height_range = 0.01;
  double joint_init_noise = 0.1;  // +- rad
  double table_surface_z = 0.6;   // nominal
  double table_half_x = 0.6;
  double table_half_y = 0.4;
  double object_rest_offset = 0.015;  // resting object height above the surface
  // goal workspace relative to the table center (on its top surface)
  Vec3 goal_lo = Vec3(-0.35, -0.1, 0.15);
  Vec3 goal_hi = Vec3(0.35, 0.2, 0.52);
  double next_goal_max_translation = 0.1;  // m
  double next_goal_max_rotation_deg = 90.0;
  bool clamp_goals = true;
  double hand_wander_limit = 1.5;   // m
  double table_force_limit = 100.0; // N
  double table_stiffness = 5000.0;  // N/m of palm penetration
  double palm_contact_radius = 0.01;
  int max_consecutive_successes = 50;
  double capture_radius = 0.03;
  double gravity = 9.81;

  int substeps() const { return sim_hz / control_hz; }
  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

enum class Termination { Running, Fallen, Dropped, Wander, Force, Timeout, MaxSuccess };
std::string to_string(Termination t);

enum class GraspEvent { None, Attach, Detach };

/// Fields of the policy observation; flatten() gives the 140-vector for the
/// default 29-DoF model.
struct ActorObservation {
  VecX q, qd, prev_target;
  Vec3 palm_pos = Vec3::Zero();
  Quat palm_quat = Quat::Identity();
  std::array<Vec3, 5> fingertips_rel{};
  Quat object_quat = Quat::Identity();
  KeypointSet keypoints_rel{};
  KeypointSet keypoint_errors{};
  Vec3 scales = Vec3::Zero();

  VecX flatten() const;
};

struct CriticState {
  ActorObservation clean;
  Vec3 palm_lin_vel = Vec3::Zero(), palm_ang_vel = Vec3::Zero();
  Vec3 object_lin_vel = Vec3::Zero(), object_ang_vel = Vec3::Zero();
  double reward = 0.0;
  int success_count = 0;
  double min_fingertip_dist = 0.0;
  double min_keypoint_dist = 0.0;
  int steps = 0;
  bool grasped = false;

  VecX flatten() const;
};

/// Everything that changes during an episode.
struct EpisodeState {
  std::uint64_t seed = 0;
  JointState joints;
  Pose object;
  Vec3 object_lin_vel = Vec3::Zero();
  Vec3 object_ang_vel = Vec3::Zero();
  bool attached = false;
  Pose grab;  // object in palm frame while attached
  bool supported = true;
  Pose palm;
  Vec3 palm_lin_vel = Vec3::Zero();
  Vec3 palm_ang_vel = Vec3::Zero();
  Pose goal;
  int goal_index = 0;        // goals issued so far minus one
  int goals_sampled = 0;
  RewardState reward;
  ControlState control;
  DelayQueue<VecX> action_queue;
  DelayQueue<VecX> proprio_queue;
  DelayQueue<Pose> object_queue;
  Vec3 obs_scales = Vec3::Ones();
  int step = 0;
  double table_z = 0.6;
  double rest_z = 0.615;
  double table_force = 0.0;
  double min_keypoint_dist = 0.0;
  bool goals_exhausted = false;
  bool done = false;
  Termination termination = Termination::Running;

  /// Canonical dump of the numeric state (used for determinism checks).
  nlohmann::json to_json() const;
};

struct StepInfo {
  RewardTerms terms;
  double goal_dist = 0.0;
  double d_star = 0.0;
  Termination termination = Termination::Running;
  std::vector<std::string> events;
};

struct StepResult {
  ActorObservation obs;
  CriticState critic;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Goal-reaching tool manipulation environment with attach-to-palm dynamics.
///
/// A grasped (attached) object follows the palm through a fixed grab
/// transform; a free object rests on the table or falls ballistically under
/// gravity and random wrench impulses. All randomness is keyed on
/// (episode seed, purpose, counter).
class Env {
 public:
  Env(RobotModel model, ToolSpec tool, EnvConfig env = {}, ControlConfig control = {},
      RewardConfig reward = {}, RandomizationConfig dr = {});

  /// Closed-loop evaluation mode: goals are taken from `goals` in order and
  /// the episode ends once the last one is reached. Empty restores random goals.
  void set_goal_sequence(std::vector<Pose> goals);
  const std::vector<Pose>& goal_sequence() const { return goal_sequence_; }

  StepResult reset(std::uint64_t seed);
  StepResult step(const VecX& action, GraspEvent event = GraspEvent::None);

  /// Next goal: uniform offset in a ball of radius max_translation and a
  /// rotation about a uniform axis by an angle uniform in [0, max_rotation],
  /// clamped back into the workspace when clamp_goals is set.
  Pose sample_next_goal(const Pose& prev, Rng& rng) const;
  Pose sample_initial_goal(Rng& rng, double table_z) const;
  Box3 goal_workspace(double table_z) const;

  Termination check_termination() const;
  ActorObservation build_actor_obs();
  ActorObservation build_clean_obs() const;
  CriticState build_critic_state(double reward) const;

  double goal_distance() const;
  double mean_fingertip_distance() const;
  Vec3 grasp_center_world() const;
  bool can_attach() const;

  const EpisodeState& state() const { return state_; }
  const RobotModel& model() const { return model_; }
  const ToolSpec& tool() const { return tool_; }
  const EnvConfig& env_config() const { return env_; }
  const ControlConfig& control_config() const { return control_.config(); }
  const RewardConfig& reward_config() const { return reward_; }
  const RandomizationConfig& dr_config() const { return dr_; }

 private:
  void update_palm();
  void integrate_object(double dt, const Wrench& wrench, bool apply_wrench);
  void advance_goal(const Vec3& object_pos);

  RobotModel model_;
  ToolSpec tool_;
  EnvConfig env_;
  ControlPipeline control_;
  RewardConfig reward_;
  RandomizationConfig dr_;
  std::vector<Pose> goal_sequence_;
  EpisodeState state_;
  std::vector<Pose> link_poses_;
};

}  // namespace toolforge
