#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "toolforge/geometry.hpp"

namespace toolforge {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

enum class JointType { Revolute, Fixed };

/// One node of the kinematic tree: a joint plus the link frame it drives.
/// pose(child) = pose(parent) * fixed_transform * Rot(axis, q).
struct Link {
  std::string name;
  std::string parent;  // "world" for roots
  Pose fixed_transform;
  JointType type = JointType::Fixed;
  Vec3 axis = Vec3::UnitZ();
  double lower = 0.0;
  double upper = 0.0;

  int parent_index = -1;  // into RobotModel::links(); -1 for world
  int q_index = -1;       // -1 for fixed joints
};

struct CollisionSphere {
  int link = -1;
  Vec3 center = Vec3::Zero();  // in link frame
  double radius = 0.0;
};

/// Immutable kinematic tree with named frames, joint limits and planner
/// collision spheres. Joint indices follow revolute joints in file order; the
/// first n_arm of them form the arm, the rest the hand.
class RobotModel {
 public:
  static RobotModel from_json(const nlohmann::json& j);
  static RobotModel load(const std::filesystem::path& path);
  /// Bundled 7-DoF arm + 22-DoF five-fingered hand.
  static RobotModel default_model();
  static std::filesystem::path data_path(const std::string& file);

  const std::string& name() const { return name_; }
  int dof() const { return static_cast<int>(joint_links_.size()); }
  int n_arm() const { return n_arm_; }
  int n_hand() const { return dof() - n_arm_; }

  const std::vector<Link>& links() const { return links_; }
  int link_index(const std::string& name) const;  // throws on unknown
  std::optional<int> find_link(const std::string& name) const;
  const std::vector<std::string>& joint_names() const { return joint_names_; }

  const VecX& lower() const { return lower_; }
  const VecX& upper() const { return upper_; }
  const VecX& home() const { return home_; }
  VecX clamp(const VecX& q) const;
  bool within_limits(const VecX& q, double tol = 0.0) const;

  int palm_link() const { return palm_; }
  int end_effector_link() const { return end_effector_; }
  const std::vector<int>& fingertip_links() const { return fingertips_; }
  bool has_hand_frames() const { return palm_ >= 0 && fingertips_.size() == 5; }

  const std::vector<CollisionSphere>& collision_spheres() const { return spheres_; }

  /// World pose of every link, indexed like links().
  std::vector<Pose> forward_kinematics(const VecX& q) const;
  Pose frame_pose(const VecX& q, int link) const;
  Pose frame_pose(const VecX& q, const std::string& frame) const {
    return frame_pose(q, link_index(frame));
  }

  /// Geometric world-frame Jacobian (rows: linear xyz, angular xyz) of a point
  /// fixed in `link` (given in link coordinates). Columns of joints not on the
  /// path to the link, and of fixed joints, are zero.
  Jacobian jacobian(const VecX& q, int link, const Vec3& point = Vec3::Zero()) const;
  Jacobian jacobian(const VecX& q, const std::string& frame) const {
    return jacobian(q, link_index(frame));
  }
  Jacobian jacobian_from_poses(const std::vector<Pose>& poses, int link,
                               const Vec3& point = Vec3::Zero()) const;

  /// True if joint index `joint` lies on the path from the root to `link`.
  bool joint_affects(int joint, int link) const;

  nlohmann::json to_json() const;

 private:
  void check_q(const VecX& q) const;

  std::string name_;
  std::vector<Link> links_;  // topological order
  std::vector<int> joint_links_;
  std::vector<std::string> joint_names_;
  int n_arm_ = 0;
  VecX lower_, upper_, home_;
  int palm_ = -1;
  int end_effector_ = -1;
  std::vector<int> fingertips_;
  std::vector<CollisionSphere> spheres_;
  double shrink_factor_ = 1.0;
  std::vector<std::string> shrink_joints_;
  nlohmann::json source_;
};

struct JointState {
  VecX q;
  VecX qd;
};

}  // namespace toolforge
