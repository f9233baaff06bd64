#pragma once

#include <array>
#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "toolforge/rng.hpp"

namespace toolforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Rigid transform: translation in metres plus a unit quaternion.
///
/// Quaternions are written and read in (w, x, y, z) order everywhere outside of
/// Eigen; a serialized pose is the 7-vector [tx, ty, tz, qw, qx, qy, qz].
struct Pose {
  Vec3 translation = Vec3::Zero();
  Quat rotation = Quat::Identity();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {t, Quat::Identity()}; }
  static Pose from_rotation(const Quat& q) { return {Vec3::Zero(), q.normalized()}; }

  static Pose from_array(std::span<const double, 7> v);
  std::array<double, 7> to_array() const;

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  Vec3 apply(const Vec3& p) const { return translation + rotation * p; }

  /// Exact component equality (q and -q compare unequal).
  bool operator==(const Pose& o) const {
    return translation == o.translation && rotation.coeffs() == o.rotation.coeffs();
  }
};

/// a * b. Throws ValidationError on non-finite input.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

bool is_finite(const Pose& p);
void require_finite(const Pose& p, const char* what);

Quat quat_from_axis_angle(const Vec3& axis, double angle);
/// Axis-angle vector (axis * angle, angle in [0, pi]) of a rotation.
Vec3 rotation_vector(const Quat& q);
Quat quat_from_rotation_vector(const Vec3& v);
/// Geodesic angle between two rotations, in [0, pi].
double rotation_angle(const Quat& a, const Quat& b);

/// Box extents used to place the four pose keypoints. All strictly positive.
struct KeypointScales {
  double x = 0.14;
  double y = 0.03;
  double z = 0.03;

  KeypointScales() = default;
  KeypointScales(double sx, double sy, double sz);
  explicit KeypointScales(const Vec3& s) : KeypointScales(s.x(), s.y(), s.z()) {}

  Vec3 vec() const { return {x, y, z}; }
};

/// Fixed scales the success metric uses for every tool.
inline KeypointScales reward_keypoint_scales() { return KeypointScales(0.14, 0.03, 0.03); }

using KeypointSet = std::array<Vec3, 4>;

/// Local offsets (+,+,+), (+,+,-), (-,-,+), (-,-,-) of the half extents.
KeypointSet keypoint_offsets(const KeypointScales& s);
KeypointSet keypoints_world(const Pose& pose, const KeypointScales& s);

/// max_i |a_i - b_i| over the four paired keypoints.
double keypoint_distance(const Pose& a, const Pose& b, const KeypointScales& s);

/// Uniform rotation over SO(3) using Shoemake's subgroup algorithm
/// (three uniforms mapped onto S^3). Returns a unit quaternion with w >= 0.
Quat random_rotation(Rng& rng);

/// Uniformly distributed unit vector (normalized Gaussian triple).
Vec3 random_unit_vector(Rng& rng);

}  // namespace toolforge
