#pragma once

#include "toolforge/robot.hpp"

namespace toolforge {

struct ControlConfig {
  double k_arm = 0.025;   // rad per step at full action
  double alpha_arm = 0.1;
  double alpha_hand = 0.1;

  void validate() const;
  bool operator==(const ControlConfig&) const = default;
};

/// Previous joint position targets, length n_arm + n_hand.
struct ControlState {
  VecX prev_target;
};

/// Turns raw policy actions into joint position targets.
///
/// Arm: delta control. clip(a) -> prev + k_arm * a -> clip to limits -> EMA.
/// Hand: absolute control. clip(a) -> affine map onto [lower, upper] -> EMA ->
/// clip to limits. EMA is filtered = alpha * new + (1 - alpha) * prev.
class ControlPipeline {
 public:
  ControlPipeline(ControlConfig config, VecX lower, VecX upper, int n_arm);
  ControlPipeline(ControlConfig config, const RobotModel& model)
      : ControlPipeline(config, model.lower(), model.upper(), model.n_arm()) {}

  const ControlConfig& config() const { return config_; }
  int n_arm() const { return n_arm_; }
  int n_hand() const { return static_cast<int>(lower_.size()) - n_arm_; }

  VecX process_arm_action(const VecX& a_arm, ControlState& state) const;
  VecX process_hand_action(const VecX& a_hand, ControlState& state) const;
  /// Full action (arm ++ hand); returns the new full target.
  VecX process_action(const VecX& action, ControlState& state) const;

  void reset(ControlState& state, const VecX& q_current) const;

 private:
  ControlConfig config_;
  VecX lower_, upper_;
  int n_arm_;
};

}  // namespace toolforge
