#include "toolforge/control.hpp"

#include <algorithm>
#include <cmath>

#include "toolforge/errors.hpp"

namespace toolforge {
namespace {

VecX clip_unit(const VecX& a) {
  // NaN actions are treated as zero
  VecX out = a;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = std::isnan(out[i]) ? 0.0 : std::clamp(out[i], -1.0, 1.0);
  }
  return out;
}

}  // namespace

void ControlConfig::validate() const {
  if (!(k_arm > 0.0)) throw ValidationError("control.k_arm: must be > 0");
  if (!(alpha_arm > 0.0 && alpha_arm <= 1.0)) throw ValidationError("control.alpha_arm: must be in (0, 1]");
  if (!(alpha_hand > 0.0 && alpha_hand <= 1.0)) throw ValidationError("control.alpha_hand: must be in (0, 1]");
}

ControlPipeline::ControlPipeline(ControlConfig config, VecX lower, VecX upper, int n_arm)
    : config_(config), lower_(std::move(lower)), upper_(std::move(upper)), n_arm_(n_arm) {
  config_.validate();
  if (lower_.size() != upper_.size() || n_arm_ < 0 || n_arm_ > lower_.size()) {
    throw ValidationError("control: inconsistent joint limit dimensions");
  }
}

VecX ControlPipeline::process_arm_action(const VecX& a_arm, ControlState& state) const {
  if (a_arm.size() != n_arm_) throw ValidationError("arm action has wrong length");
  const VecX lo = lower_.head(n_arm_), hi = upper_.head(n_arm_);
  const VecX prev = state.prev_target.head(n_arm_);
  const VecX intermediate = (prev + config_.k_arm * clip_unit(a_arm)).cwiseMax(lo).cwiseMin(hi);
  const VecX target = config_.alpha_arm * intermediate + (1.0 - config_.alpha_arm) * prev;
  state.prev_target.head(n_arm_) = target;
  return target;
}

VecX ControlPipeline::process_hand_action(const VecX& a_hand, ControlState& state) const {
  const int n = n_hand();
  if (a_hand.size() != n) throw ValidationError("hand action has wrong length");
  const VecX lo = lower_.tail(n), hi = upper_.tail(n);
  const VecX prev = state.prev_target.tail(n);
  const VecX mapped = ((clip_unit(a_hand).array() + 1.0) / 2.0 * (hi - lo).array() + lo.array()).matrix();
  const VecX filtered = config_.alpha_hand * mapped + (1.0 - config_.alpha_hand) * prev;
  const VecX target = filtered.cwiseMax(lo).cwiseMin(hi);
  state.prev_target.tail(n) = target;
  return target;
}

VecX ControlPipeline::process_action(const VecX& action, ControlState& state) const {
  if (action.size() != lower_.size()) throw ValidationError("action has wrong length");
  if (state.prev_target.size() != lower_.size()) throw ValidationError("control state not reset");
  process_arm_action(action.head(n_arm_), state);
  process_hand_action(action.tail(n_hand()), state);
  return state.prev_target;
}

void ControlPipeline::reset(ControlState& state, const VecX& q_current) const {
  if (q_current.size() != lower_.size()) throw ValidationError("reset: joint vector has wrong length");
  state.prev_target = q_current.cwiseMax(lower_).cwiseMin(upper_);
}

}  // namespace toolforge
