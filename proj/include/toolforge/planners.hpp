#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/robot.hpp"

namespace toolforge {

/// [translation error (m); axis-angle of R_target * R_current^T (rad)].
using PoseError = Vec6;
PoseError pose_error(const Pose& current, const Pose& target);

/// dq = J^T (J J^T + mu^2 I)^{-1} e. Works for any row count.
VecX dls_step(const MatX& J, const VecX& e, double mu);

struct IkOptions {
  double damping = 0.05;
  int max_iters = 300;
  double tol = 1e-6;              // on |e|
  bool position_only = false;
  std::vector<int> active_joints; // empty: every joint on the path to the frame
  int max_halvings = 10;
  /// Extra descents from seeded uniform configurations, tried while the
  /// previous ones have not converged; the lowest error wins.
  int restarts = 0;
  std::uint64_t restart_seed = 0;
};

struct IkResult {
  VecX q;
  double error_norm = 0.0;
  double position_error = 0.0;  // m
  double rotation_error = 0.0;  // rad
  int iterations = 0;
  bool converged = false;
};

/// Iterated DLS with joint-limit clipping and step halving; |e| never grows.
/// Joints pinned at a limit are dropped from a step that would push them out.
IkResult solve_ik(const RobotModel& model, int frame, const Pose& target, const VecX& q0,
                  const IkOptions& opts = {});

/// Fixed-grasp end-effector targets T_BE = T_BO * T_EO^{-1}.
std::vector<Pose> fixed_grasp_targets(const Pose& T_EO, const std::vector<Pose>& object_goals);

/// Free side is {x : normal . x >= offset}.
struct HalfSpace {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

/// Smallest (sphere surface to plane) clearance over all collision spheres
/// and obstacles; negative means penetration.
double collision_margin(const RobotModel& model, const VecX& q, const std::vector<HalfSpace>& obstacles);

struct TrajOptProblem {
  std::vector<Pose> targets;
  int frame = -1;                 // -1: model end effector
  std::vector<int> active_joints; // empty: arm joints
  double w_position = 1.0;
  double w_rotation = 0.3;
  double w_smooth = 0.1;
  double w_limit = 100.0;
  double w_collision = 100.0;
  double collision_margin = 0.01;  // hinge activates below this clearance
  std::vector<HalfSpace> obstacles;
  int max_iters = 100;
  double tol = 1e-9;  // relative cost decrease

  void validate() const;
};

struct TrajReport {
  std::vector<VecX> q;
  std::vector<double> position_errors;  // m
  std::vector<double> rotation_errors;  // rad
  std::vector<double> margins;          // per waypoint, m
  double min_collision_margin = 0.0;
  double max_position_error = 0.0;
  double max_rotation_error = 0.0;
  std::vector<double> cost_history;  // accepted iterates
  int iterations = 0;
  bool converged = false;

  nlohmann::json to_json() const;
};

/// Sequential IK from q0, each waypoint seeded with the previous solution.
/// Obstacles are ignored; this is the DLS baseline and the optimizer warm start.
TrajReport plan_dls(const TrajOptProblem& problem, const RobotModel& model, const VecX& q0,
                    const IkOptions& opts = {});

/// Levenberg-Marquardt over all waypoints jointly. Residuals: weighted pose
/// errors, inter-waypoint joint differences, and hinge penalties for joint
/// limits and sphere/half-space clearance. Output is clipped to joint limits.
TrajReport optimize_trajectory(const TrajOptProblem& problem, const RobotModel& model,
                               const std::vector<VecX>& warm_start);

/// Evaluates pose errors and clearances of a joint trajectory.
TrajReport evaluate_trajectory(const TrajOptProblem& problem, const RobotModel& model,
                               const std::vector<VecX>& q);

struct FingertipResult {
  VecX q_hand;
  std::array<double, 5> residuals{};  // per fingertip, m
  int iterations = 0;
  bool converged = false;
};

/// DLS over hand joints only so that the fingertips, with the palm held at
/// `palm_pose`, reach the world-frame targets.
FingertipResult fingertip_retarget(const RobotModel& model, const Pose& palm_pose,
                                   const std::array<Vec3, 5>& fingertip_targets, const VecX& q_hand0,
                                   double damping = 0.01, int max_iters = 300, double tol = 1e-6);

/// Fingertip world positions for a given palm pose and hand configuration.
std::array<Vec3, 5> fingertip_positions(const RobotModel& model, const Pose& palm_pose, const VecX& q_hand);

struct RetargetResult {
  IkResult arm;
  FingertipResult hand;
  VecX q;
};

/// Two-stage retargeting: arm DLS to place the palm, then finger DLS.
RetargetResult retarget(const RobotModel& model, const Pose& palm_target,
                        const std::array<Vec3, 5>& fingertip_targets, const VecX& q0);

}  // namespace toolforge
