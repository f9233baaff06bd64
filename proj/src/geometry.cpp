#include "toolforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toolforge/errors.hpp"

namespace toolforge {

Pose Pose::from_array(std::span<const double, 7> v) {
  Pose p;
  p.translation = Vec3(v[0], v[1], v[2]);
  Quat q(v[3], v[4], v[5], v[6]);
  const double n = q.norm();
  if (!std::isfinite(n) || n < 1e-12) {
    throw ValidationError("pose quaternion must be finite and non-zero");
  }
  // keep already-unit input bit-exact so file round trips are lossless
  p.rotation = std::abs(n - 1.0) > 1e-12 ? q.normalized() : q;
  require_finite(p, "pose");
  return p;
}

std::array<double, 7> Pose::to_array() const {
  return {translation.x(), translation.y(), translation.z(), rotation.w(),
          rotation.x(),    rotation.y(),    rotation.z()};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool is_finite(const Pose& p) {
  return p.translation.allFinite() && p.rotation.coeffs().allFinite();
}

void require_finite(const Pose& p, const char* what) {
  if (!is_finite(p)) {
    throw ValidationError(std::string(what) + ": non-finite pose");
  }
}

Pose compose(const Pose& a, const Pose& b) {
  require_finite(a, "compose lhs");
  require_finite(b, "compose rhs");
  Pose out;
  out.translation = a.translation + a.rotation * b.translation;
  out.rotation = (a.rotation * b.rotation).normalized();
  return out;
}

Pose invert(const Pose& a) {
  require_finite(a, "invert");
  Pose out;
  out.rotation = a.rotation.conjugate().normalized();
  out.translation = -(out.rotation * a.translation);
  return out;
}

Quat quat_from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-15) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, axis / n));
}

Vec3 rotation_vector(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) {
    // small-angle limit of 2*atan2(s, w)/s
    return 2.0 * v / std::max(q.w(), 1e-300);
  }
  const double angle = 2.0 * std::atan2(s, q.w());
  return v * (angle / s);
}

Quat quat_from_rotation_vector(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-15) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, v / angle));
}

double rotation_angle(const Quat& a, const Quat& b) {
  // atan2 form keeps full precision near zero, unlike acos of the dot product
  const Quat r = a.normalized().conjugate() * b.normalized();
  return 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
}

KeypointScales::KeypointScales(double sx, double sy, double sz) : x(sx), y(sy), z(sz) {
  if (!(sx > 0.0 && sy > 0.0 && sz > 0.0) || !std::isfinite(sx) || !std::isfinite(sy) ||
      !std::isfinite(sz)) {
    throw ValidationError("keypoint scales must be finite and > 0");
  }
}

KeypointSet keypoint_offsets(const KeypointScales& s) {
  const double hx = s.x / 2.0, hy = s.y / 2.0, hz = s.z / 2.0;
  return {Vec3(hx, hy, hz), Vec3(hx, hy, -hz), Vec3(-hx, -hy, hz), Vec3(-hx, -hy, -hz)};
}

KeypointSet keypoints_world(const Pose& pose, const KeypointScales& s) {
  KeypointSet out = keypoint_offsets(s);
  const Mat3 r = pose.rotation_matrix();
  for (auto& k : out) k = pose.translation + r * k;
  return out;
}

double keypoint_distance(const Pose& a, const Pose& b, const KeypointScales& s) {
  const KeypointSet ka = keypoints_world(a, s);
  const KeypointSet kb = keypoints_world(b, s);
  double d = 0.0;
  for (std::size_t i = 0; i < ka.size(); ++i) d = std::max(d, (ka[i] - kb[i]).norm());
  return d;
}

Quat random_rotation(Rng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double u1 = rng.uniform();
  const double u2 = rng.uniform(0.0, two_pi);
  const double u3 = rng.uniform(0.0, two_pi);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  Quat q(a * std::sin(u2), a * std::cos(u2), b * std::sin(u3), b * std::cos(u3));
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Vec3 random_unit_vector(Rng& rng) {
  for (;;) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

}  // namespace toolforge
