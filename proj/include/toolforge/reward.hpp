#pragma once

#include <limits>
#include <ostream>
#include <string>

#include "toolforge/robot.hpp"

namespace toolforge {

struct RewardConfig {
  double lambda_arm = 0.03;
  double lambda_hand = 0.003;
  double lambda_approach = 50.0;
  double lambda_lift = 20.0;
  double lifted_bonus = 300.0;
  double lambda_goal = 200.0;
  double success_bonus = 1000.0;
  double success_tolerance = 0.01;  // m
  double z_init = 0.63;             // m
  double z_lifted = 0.73;           // m

  /// Training preset (1 cm tolerance) and evaluation preset (2 cm).
  static RewardConfig train() { return {}; }
  static RewardConfig eval() {
    RewardConfig c;
    c.success_tolerance = 0.02;
    return c;
  }

  void validate() const;
  bool operator==(const RewardConfig&) const = default;
};

struct RewardState {
  double d_star = std::numeric_limits<double>::infinity();
  double dbar_star_ft = std::numeric_limits<double>::infinity();
  bool grasped = false;
  bool lifted_bonus_paid = false;
  int success_count = 0;
};

/// Resets trackers for a new episode.
void reset_reward_state(RewardState& state, double initial_mean_ft_dist, double initial_goal_dist);
/// Re-arms d* for a freshly sampled goal.
void on_new_goal(RewardState& state, double goal_dist);

double smoothness_reward(const VecX& qd_arm, const VecX& qd_hand, const RewardConfig& config);
double approach_reward(double mean_ft_dist, RewardState& state, const RewardConfig& config);
/// Sets the lifted-bonus and grasped latches once z >= z_lifted.
double lift_reward(double z, RewardState& state, const RewardConfig& config);

struct GoalReward {
  double dense = 0.0;
  double bonus = 0.0;
  bool goal_reached = false;
  double total() const { return dense + bonus; }
};
/// lambda_goal * max(d* - d, 0) + B_succ * [d < eps]; then d* = min(d*, d).
GoalReward goal_reward(double d, RewardState& state, const RewardConfig& config);

struct RewardInputs {
  VecX qd_arm;
  VecX qd_hand;
  double mean_ft_dist = 0.0;
  double object_z = 0.0;
  double goal_dist = 0.0;
};

struct RewardTerms {
  double smooth = 0.0;
  double approach = 0.0;
  double lift = 0.0;
  double goal = 0.0;
  double goal_dense = 0.0;
  double total = 0.0;
  bool lifted_bonus = false;
  bool goal_reached = false;
};

/// r = r_smooth + r_approach + (1 - I_grasped) r_lift + I_grasped r_goal, with
/// I_grasped read before this step's lift update.
RewardTerms total_reward(const RewardInputs& in, RewardState& state, const RewardConfig& config);

/// CSV log: step, r_smooth, r_approach, r_lift, r_goal, d, d_star.
void write_reward_csv_header(std::ostream& os);
void write_reward_csv_row(std::ostream& os, int step, const RewardTerms& terms, double d,
                          double d_star);

}  // namespace toolforge
