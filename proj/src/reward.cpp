#include "toolforge/reward.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "toolforge/errors.hpp"

namespace toolforge {

void RewardConfig::validate() const {
  const double vals[] = {lambda_arm,    lambda_hand,   lambda_approach,   lambda_lift,
                         lifted_bonus,  lambda_goal,   success_bonus,     success_tolerance,
                         z_init,        z_lifted};
  for (double v : vals) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("reward: coefficients must be finite and >= 0");
  }
}

void reset_reward_state(RewardState& state, double initial_mean_ft_dist, double initial_goal_dist) {
  state = RewardState{};
  state.dbar_star_ft = initial_mean_ft_dist;
  state.d_star = initial_goal_dist;
}

void on_new_goal(RewardState& state, double goal_dist) { state.d_star = goal_dist; }

double smoothness_reward(const VecX& qd_arm, const VecX& qd_hand, const RewardConfig& config) {
  return -config.lambda_arm * qd_arm.lpNorm<1>() - config.lambda_hand * qd_hand.lpNorm<1>();
}

double approach_reward(double mean_ft_dist, RewardState& state, const RewardConfig& config) {
  const double r = config.lambda_approach * std::max(state.dbar_star_ft - mean_ft_dist, 0.0);
  state.dbar_star_ft = std::min(state.dbar_star_ft, mean_ft_dist);
  return r;
}

double lift_reward(double z, RewardState& state, const RewardConfig& config) {
  double r = config.lambda_lift * std::max(z - config.z_init, 0.0);
  if (z >= config.z_lifted) {
    if (!state.lifted_bonus_paid) {
      r += config.lifted_bonus;
      state.lifted_bonus_paid = true;
    }
    state.grasped = true;
  }
  return r;
}

GoalReward goal_reward(double d, RewardState& state, const RewardConfig& config) {
  GoalReward out;
  out.dense = config.lambda_goal * std::max(state.d_star - d, 0.0);
  state.d_star = std::min(state.d_star, d);
  out.goal_reached = d < config.success_tolerance;
  if (out.goal_reached) {
    out.bonus = config.success_bonus;
    ++state.success_count;
  }
  return out;
}

RewardTerms total_reward(const RewardInputs& in, RewardState& state, const RewardConfig& config) {
  RewardTerms t;
  const bool grasped = state.grasped;
  t.smooth = smoothness_reward(in.qd_arm, in.qd_hand, config);
  t.approach = approach_reward(in.mean_ft_dist, state, config);
  if (!grasped) {
    const bool paid_before = state.lifted_bonus_paid;
    t.lift = lift_reward(in.object_z, state, config);
    t.lifted_bonus = !paid_before && state.lifted_bonus_paid;
  } else {
    const GoalReward g = goal_reward(in.goal_dist, state, config);
    t.goal = g.total();
    t.goal_dense = g.dense;
    t.goal_reached = g.goal_reached;
  }
  t.total = t.smooth + t.approach + t.lift + t.goal;
  return t;
}

void write_reward_csv_header(std::ostream& os) {
  os << "step,r_smooth,r_approach,r_lift,r_goal,d,d_star\n";
}

void write_reward_csv_row(std::ostream& os, int step, const RewardTerms& terms, double d,
                          double d_star) {
  os << step << ',' << std::setprecision(17) << terms.smooth << ',' << terms.approach << ','
     << terms.lift << ',' << terms.goal << ',' << d << ',' << d_star << '\n';
}

}  // namespace toolforge
