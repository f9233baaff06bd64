#include "toolforge/randomization.hpp"

#include <cmath>

namespace toolforge {

void RandomizationConfig::validate() const {
  if (obs_delay_max < 0 || action_delay_max < 0 || object_pose_delay_max < 0) {
    throw ValidationError("dr: delays must be >= 0");
  }
  const double vals[] = {joint_vel_noise, object_pos_noise, object_rot_noise_deg, force_scale,
                         torque_scale,    bbox_perturb_fraction};
  for (double v : vals) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("dr: magnitudes must be finite and >= 0");
  }
  if (!(perturb_probability >= 0.0 && perturb_probability <= 1.0)) {
    throw ValidationError("dr.perturb_probability: must be in [0, 1]");
  }
  if (bbox_perturb_fraction >= 1.0) throw ValidationError("dr.bbox_perturb_fraction: must be < 1");
}

Pose perturb_pose(const Pose& pose, double trans_sigma, double rot_sigma, Rng& rng) {
  if (trans_sigma < 0.0 || rot_sigma < 0.0) throw ValidationError("perturb_pose: sigma must be >= 0");
  Pose out = pose;
  for (int i = 0; i < 3; ++i) out.translation[i] += rng.normal(0.0, trans_sigma);
  const Vec3 axis = random_unit_vector(rng);
  const double angle = rng.normal(0.0, rot_sigma);
  if (angle != 0.0) {
    out.rotation = (quat_from_axis_angle(axis, angle) * pose.rotation).normalized();
  }
  return out;
}

Wrench sample_wrench(Rng& rng, double force_scale, double torque_scale) {
  Wrench w;
  for (int i = 0; i < 3; ++i) w.force[i] = force_scale * rng.uniform(-1.0, 1.0);
  for (int i = 0; i < 3; ++i) w.torque[i] = torque_scale * rng.uniform(-1.0, 1.0);
  return w;
}

Vec3 perturb_bbox(const Vec3& extents, Rng& rng, double fraction) {
  if (!(extents.array() > 0.0).all()) throw ValidationError("perturb_bbox: extents must be > 0");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    out[i] = std::max(extents[i] * rng.uniform(1.0 - fraction, 1.0 + fraction), 1e-3);
  }
  return out;
}

}  // namespace toolforge
