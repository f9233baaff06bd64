#pragma once

#include <cstddef>
#include <deque>
#include <stdexcept>

#include "toolforge/errors.hpp"
#include "toolforge/geometry.hpp"
#include "toolforge/rng.hpp"

namespace toolforge {

struct RandomizationConfig {
  bool enabled = true;
  int obs_delay_max = 3;            // steps
  int action_delay_max = 3;         // steps
  int object_pose_delay_max = 10;   // steps
  double joint_vel_noise = 0.1;     // rad/s
  double object_pos_noise = 0.01;   // m
  double object_rot_noise_deg = 5.0;
  double force_scale = 5.0;         // N
  double torque_scale = 0.5;        // N m
  double perturb_probability = 0.02;  // per control step
  double bbox_perturb_fraction = 0.1;

  void validate() const;
  bool operator==(const RandomizationConfig&) const = default;
};

/// FIFO delay line. Each push returns the payload pushed `delay` steps earlier,
/// or the oldest one available while the line is still filling.
template <typename T>
class DelayQueue {
 public:
  DelayQueue() = default;
  DelayQueue(int max_delay, int delay) { reset(max_delay, delay); }

  void reset(int max_delay, int delay) {
    if (max_delay < 0 || delay < 0 || delay > max_delay) {
      throw ValidationError("delay queue: need 0 <= delay <= max_delay");
    }
    max_delay_ = max_delay;
    delay_ = delay;
    buffer_.clear();
  }

  /// Draws the delay uniformly from [0, max_delay] and clears the buffer.
  void reset(int max_delay, Rng& rng) {
    reset(max_delay, static_cast<int>(rng.uniform_int(0, max_delay)));
  }

  T push_pop(T payload) {
    buffer_.push_back(std::move(payload));
    while (buffer_.size() > static_cast<std::size_t>(delay_) + 1) buffer_.pop_front();
    return buffer_.front();
  }

  /// Payload the queue is currently emitting.
  const T& current() const {
    if (buffer_.empty()) throw std::logic_error("delay queue: pop before any push");
    return buffer_.front();
  }

  int delay() const { return delay_; }
  int max_delay() const { return max_delay_; }
  bool empty() const { return buffer_.empty(); }

 private:
  int max_delay_ = 0;
  int delay_ = 0;
  std::deque<T> buffer_;
};

/// Gaussian translation noise per axis plus a rotation about a uniformly
/// random axis by an angle ~ N(0, rot_sigma^2), applied in the world frame.
Pose perturb_pose(const Pose& pose, double trans_sigma, double rot_sigma, Rng& rng);

struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
};

/// Each component uniform in [-scale, +scale].
Wrench sample_wrench(Rng& rng, double force_scale, double torque_scale);

/// Multiplicative jitter U[1 - f, 1 + f] per axis, floored at 1 mm.
Vec3 perturb_bbox(const Vec3& extents, Rng& rng, double fraction);

}  // namespace toolforge
