#include "toolforge/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "toolforge/errors.hpp"
#include "toolforge/rng.hpp"

namespace toolforge {
namespace {

std::vector<int> path_joints(const RobotModel& model, int frame) {
  std::vector<int> out;
  for (int j = 0; j < model.dof(); ++j) {
    if (model.joint_affects(j, frame)) out.push_back(j);
  }
  return out;
}

MatX select_columns(const Jacobian& J, const std::vector<int>& cols, bool position_only) {
  const int rows = position_only ? 3 : 6;
  MatX out(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = J.col(cols[c]).head(rows);
  return out;
}

VecX task_error(const Pose& current, const Pose& target, bool position_only) {
  const PoseError e = pose_error(current, target);
  if (position_only) return e.head<3>();
  return e;
}

// Large errors are scaled down per iteration so the linearization stays valid.
VecX clamp_task_error(const VecX& e, bool position_only) {
  constexpr double kMaxTranslation = 0.1;  // m
  constexpr double kMaxRotation = 0.5;     // rad
  VecX out = e;
  const double t = e.head<3>().norm();
  if (t > kMaxTranslation) out.head<3>() *= kMaxTranslation / t;
  if (!position_only) {
    const double r = e.tail<3>().norm();
    if (r > kMaxRotation) out.tail<3>() *= kMaxRotation / r;
  }
  return out;
}

}  // namespace

PoseError pose_error(const Pose& current, const Pose& target) {
  PoseError e;
  e.head<3>() = target.translation - current.translation;
  e.tail<3>() = rotation_vector(target.rotation * current.rotation.conjugate());
  return e;
}

VecX dls_step(const MatX& J, const VecX& e, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("dls_step: damping must be > 0");
  if (J.rows() != e.size()) throw ValidationError("dls_step: J and e disagree in size");
  if (!J.allFinite() || !e.allFinite()) throw ValidationError("dls_step: non-finite input");
  MatX A = J * J.transpose();
  A.diagonal().array() += mu * mu;
  return J.transpose() * A.ldlt().solve(e);
}

namespace {

IkResult descend(const RobotModel& model, int frame, const Pose& target, const VecX& q0, const IkOptions& opts,
                 const std::vector<int>& joints) {
  IkResult r;
  r.q = model.clamp(q0);
  auto evaluate = [&](const VecX& q) {
    return task_error(model.frame_pose(q, frame), target, opts.position_only);
  };
  VecX e = evaluate(r.q);
  double err = e.norm();
  while (err >= opts.tol && r.iterations < opts.max_iters) {
    const MatX J_full = select_columns(model.jacobian(r.q, frame), joints, opts.position_only);
    // joints pinned at a limit that the step would push further are frozen
    // and the step is re-solved without them
    MatX J = J_full;
    const VecX e_step = clamp_task_error(e, opts.position_only);
    VecX dq = dls_step(J, e_step, opts.damping);
    for (std::size_t pass = 0; pass < joints.size(); ++pass) {
      bool dropped = false;
      for (std::size_t c = 0; c < joints.size(); ++c) {
        const int j = joints[c];
        const auto col = static_cast<Eigen::Index>(c);
        const bool at_lower = r.q[j] <= model.lower()[j] && dq[col] < 0.0;
        const bool at_upper = r.q[j] >= model.upper()[j] && dq[col] > 0.0;
        if ((at_lower || at_upper) && !J.col(col).isZero()) {
          J.col(col).setZero();
          dropped = true;
        }
      }
      if (!dropped) break;
      dq = dls_step(J, e_step, opts.damping);
    }
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
      VecX q_new = r.q;
      for (std::size_t c = 0; c < joints.size(); ++c) q_new[joints[c]] += step * dq[static_cast<Eigen::Index>(c)];
      q_new = model.clamp(q_new);
      const VecX e_new = evaluate(q_new);
      if (e_new.norm() < err) {
        r.q = q_new;
        e = e_new;
        err = e.norm();
        accepted = true;
        break;
      }
    }
    ++r.iterations;
    if (!accepted) break;  // stalled: no descent within the halving budget
  }
  const PoseError full = pose_error(model.frame_pose(r.q, frame), target);
  r.error_norm = err;
  r.position_error = full.head<3>().norm();
  r.rotation_error = full.tail<3>().norm();
  r.converged = err < opts.tol;
  return r;
}

}  // namespace

IkResult solve_ik(const RobotModel& model, int frame, const Pose& target, const VecX& q0,
                  const IkOptions& opts) {
  require_finite(target, "solve_ik target");
  if (opts.restarts < 0) throw ValidationError("solve_ik: restarts must be >= 0");
  const std::vector<int> joints = opts.active_joints.empty() ? path_joints(model, frame) : opts.active_joints;
  IkResult best = descend(model, frame, target, q0, opts, joints);
  int total_iters = best.iterations;
  for (int k = 0; k < opts.restarts && !best.converged; ++k) {
    Rng rng(derive_seed(opts.restart_seed, "ik_restart", static_cast<std::uint64_t>(k)));
    VecX q = model.clamp(q0);
    for (int j : joints) q[j] = rng.uniform(model.lower()[j], model.upper()[j]);
    IkResult r = descend(model, frame, target, q, opts, joints);
    total_iters += r.iterations;
    if (r.error_norm < best.error_norm) best = std::move(r);
  }
  best.iterations = total_iters;
  return best;
}

std::vector<Pose> fixed_grasp_targets(const Pose& T_EO, const std::vector<Pose>& object_goals) {
  const Pose T_OE = invert(T_EO);
  std::vector<Pose> out;
  out.reserve(object_goals.size());
  for (const Pose& g : object_goals) out.push_back(compose(g, T_OE));
  return out;
}

double collision_margin(const RobotModel& model, const VecX& q, const std::vector<HalfSpace>& obstacles) {
  const std::vector<Pose> poses = model.forward_kinematics(q);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : model.collision_spheres()) {
    const Vec3 c = poses[s.link].apply(s.center);
    for (const auto& h : obstacles) m = std::min(m, h.signed_distance(c) - s.radius);
  }
  return m;
}

void TrajOptProblem::validate() const {
  if (targets.empty()) throw ValidationError("trajopt: need at least one target");
  const double w[] = {w_position, w_rotation, w_smooth, w_limit, w_collision};
  for (double v : w) {
    if (!(v >= 0.0)) throw ValidationError("trajopt: weights must be >= 0");
  }
  for (const auto& h : obstacles) {
    if (std::abs(h.normal.norm() - 1.0) > 1e-9) throw ValidationError("trajopt: obstacle normals must be unit");
  }
  if (max_iters < 0) throw ValidationError("trajopt: max_iters must be >= 0");
}

nlohmann::json TrajReport::to_json() const {
  nlohmann::json waypoints = nlohmann::json::array();
  for (std::size_t i = 0; i < q.size(); ++i) {
    waypoints.push_back({{"q", std::vector<double>(q[i].data(), q[i].data() + q[i].size())},
                         {"position_error_m", position_errors[i]},
                         {"rotation_error_rad", rotation_errors[i]},
                         {"collision_margin_m", margins[i]}});
  }
  return {{"waypoints", waypoints},
          {"min_collision_margin_m", min_collision_margin},
          {"max_position_error_m", max_position_error},
          {"max_rotation_error_rad", max_rotation_error},
          {"iterations", iterations},
          {"converged", converged},
          {"cost_history", cost_history}};
}

TrajReport evaluate_trajectory(const TrajOptProblem& problem, const RobotModel& model,
                               const std::vector<VecX>& q) {
  const int frame = problem.frame < 0 ? model.end_effector_link() : problem.frame;
  TrajReport r;
  r.q = q;
  r.min_collision_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const PoseError e = pose_error(model.frame_pose(q[i], frame), problem.targets.at(i));
    r.position_errors.push_back(e.head<3>().norm());
    r.rotation_errors.push_back(e.tail<3>().norm());
    const double m = problem.obstacles.empty() ? std::numeric_limits<double>::infinity()
                                               : collision_margin(model, q[i], problem.obstacles);
    r.margins.push_back(m);
    r.min_collision_margin = std::min(r.min_collision_margin, m);
    r.max_position_error = std::max(r.max_position_error, r.position_errors.back());
    r.max_rotation_error = std::max(r.max_rotation_error, r.rotation_errors.back());
  }
  return r;
}

TrajReport plan_dls(const TrajOptProblem& problem, const RobotModel& model, const VecX& q0,
                    const IkOptions& opts) {
  problem.validate();
  const int frame = problem.frame < 0 ? model.end_effector_link() : problem.frame;
  IkOptions o = opts;
  if (o.active_joints.empty()) o.active_joints = problem.active_joints;
  if (o.active_joints.empty()) {
    for (int j = 0; j < model.n_arm(); ++j) o.active_joints.push_back(j);
  }
  std::vector<VecX> qs;
  VecX seed = q0;
  bool all_converged = true;
  int iters = 0;
  for (const Pose& target : problem.targets) {
    const IkResult ik = solve_ik(model, frame, target, seed, o);
    all_converged = all_converged && ik.converged;
    iters += ik.iterations;
    qs.push_back(ik.q);
    seed = ik.q;
  }
  TrajReport r = evaluate_trajectory(problem, model, qs);
  r.iterations = iters;
  r.converged = all_converged;
  return r;
}

namespace {

// Residual layout per waypoint i:
//   [pose (6) | limits (n) | collision (S*H) | smooth to i-1 (n, only i>0)]
struct TrajResidual {
  const TrajOptProblem& p;
  const RobotModel& model;
  int frame;
  std::vector<int> joints;
  VecX base_q;  // values of inactive joints

  int n() const { return static_cast<int>(joints.size()); }
  int n_coll() const {
    return static_cast<int>(model.collision_spheres().size() * p.obstacles.size());
  }
  int local_rows() const { return 6 + n() + n_coll(); }
  int rows() const {
    const int N = static_cast<int>(p.targets.size());
    return N * local_rows() + (N - 1) * n();
  }

  VecX full_q(const VecX& x_i) const {
    VecX q = base_q;
    for (int c = 0; c < n(); ++c) q[joints[c]] = x_i[c];
    return q;
  }

  // Residuals that depend only on waypoint i.
  VecX local(const VecX& x_i, int i) const {
    VecX r(local_rows());
    const VecX q = full_q(x_i);
    const std::vector<Pose> poses = model.forward_kinematics(q);
    const PoseError e = pose_error(poses[frame], p.targets[i]);
    r.head<3>() = p.w_position * e.head<3>();
    r.segment<3>(3) = p.w_rotation * e.tail<3>();
    for (int c = 0; c < n(); ++c) {
      const int j = joints[c];
      r[6 + c] = p.w_limit * (std::max(0.0, q[j] - model.upper()[j]) + std::max(0.0, model.lower()[j] - q[j]));
    }
    int k = 6 + n();
    for (const auto& s : model.collision_spheres()) {
      const Vec3 center = poses[s.link].apply(s.center);
      for (const auto& h : p.obstacles) {
        const double clearance = h.signed_distance(center) - s.radius;
        r[k++] = p.w_collision * std::max(0.0, p.collision_margin - clearance);
      }
    }
    return r;
  }

  VecX evaluate(const VecX& x) const {
    const int N = static_cast<int>(p.targets.size());
    VecX r(rows());
    for (int i = 0; i < N; ++i) r.segment(i * local_rows(), local_rows()) = local(x.segment(i * n(), n()), i);
    const int off = N * local_rows();
    for (int i = 1; i < N; ++i) {
      r.segment(off + (i - 1) * n(), n()) = p.w_smooth * (x.segment(i * n(), n()) - x.segment((i - 1) * n(), n()));
    }
    return r;
  }

  MatX jacobian(const VecX& x) const {
    const int N = static_cast<int>(p.targets.size());
    MatX J = MatX::Zero(rows(), N * n());
    constexpr double h = 1e-6;
    for (int i = 0; i < N; ++i) {
      VecX xi = x.segment(i * n(), n());
      for (int c = 0; c < n(); ++c) {
        VecX xp = xi, xm = xi;
        xp[c] += h;
        xm[c] -= h;
        J.block(i * local_rows(), i * n() + c, local_rows(), 1) = (local(xp, i) - local(xm, i)) / (2.0 * h);
      }
    }
    const int off = N * local_rows();
    for (int i = 1; i < N; ++i) {
      for (int c = 0; c < n(); ++c) {
        J(off + (i - 1) * n() + c, i * n() + c) = p.w_smooth;
        J(off + (i - 1) * n() + c, (i - 1) * n() + c) = -p.w_smooth;
      }
    }
    return J;
  }
};

}  // namespace

TrajReport optimize_trajectory(const TrajOptProblem& problem, const RobotModel& model,
                               const std::vector<VecX>& warm_start) {
  problem.validate();
  const int N = static_cast<int>(problem.targets.size());
  if (static_cast<int>(warm_start.size()) != N) {
    throw ValidationError("trajopt: warm start must have one configuration per target");
  }
  TrajResidual res{problem, model, problem.frame < 0 ? model.end_effector_link() : problem.frame,
                   problem.active_joints, warm_start.front()};
  if (res.joints.empty()) {
    for (int j = 0; j < model.n_arm(); ++j) res.joints.push_back(j);
  }
  const int n = res.n();
  VecX x(N * n);
  for (int i = 0; i < N; ++i) {
    for (int c = 0; c < n; ++c) x[i * n + c] = warm_start[i][res.joints[c]];
  }

  VecX r = res.evaluate(x);
  double cost = 0.5 * r.squaredNorm();
  std::vector<double> history{cost};
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;
  for (; iter < problem.max_iters; ++iter) {
    const MatX J = res.jacobian(x);
    const MatX JtJ = J.transpose() * J;
    const VecX g = J.transpose() * r;
    bool accepted = false;
    while (lambda < 1e12) {
      MatX A = JtJ;
      A.diagonal().array() += lambda * (1.0 + JtJ.diagonal().array());
      const VecX dx = -A.ldlt().solve(g);
      const VecX x_new = x + dx;
      const VecX r_new = res.evaluate(x_new);
      const double cost_new = 0.5 * r_new.squaredNorm();
      if (std::isfinite(cost_new) && cost_new < cost) {
        const double rel = (cost - cost_new) / std::max(cost, 1e-300);
        x = x_new;
        r = r_new;
        cost = cost_new;
        history.push_back(cost);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel < problem.tol || dx.norm() < 1e-12) converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      converged = true;  // no descent direction left at any damping
      break;
    }
    if (converged) {
      ++iter;
      break;
    }
  }

  std::vector<VecX> qs;
  for (int i = 0; i < N; ++i) qs.push_back(model.clamp(res.full_q(x.segment(i * n, n))));
  TrajReport report = evaluate_trajectory(problem, model, qs);
  report.cost_history = std::move(history);
  report.iterations = iter;
  report.converged = converged;
  return report;
}

std::array<Vec3, 5> fingertip_positions(const RobotModel& model, const Pose& palm_pose, const VecX& q_hand) {
  if (!model.has_hand_frames()) throw ValidationError("model has no palm/fingertip frames");
  if (q_hand.size() != model.n_hand()) throw ValidationError("hand joint vector has wrong length");
  VecX q = model.home();
  q.tail(model.n_hand()) = q_hand;
  const std::vector<Pose> poses = model.forward_kinematics(q);
  const Pose to_world = compose(palm_pose, invert(poses[model.palm_link()]));
  std::array<Vec3, 5> out;
  for (int k = 0; k < 5; ++k) out[k] = to_world.apply(poses[model.fingertip_links()[k]].translation);
  return out;
}

FingertipResult fingertip_retarget(const RobotModel& model, const Pose& palm_pose,
                                   const std::array<Vec3, 5>& targets, const VecX& q_hand0,
                                   double damping, int max_iters, double tol) {
  if (!model.has_hand_frames()) throw ValidationError("model has no palm/fingertip frames");
  const int n_arm = model.n_arm(), n_hand = model.n_hand();
  if (q_hand0.size() != n_hand) throw ValidationError("hand joint vector has wrong length");
  const VecX lo = model.lower().tail(n_hand), hi = model.upper().tail(n_hand);

  auto residual = [&](const VecX& qh) {
    const auto tips = fingertip_positions(model, palm_pose, qh);
    VecX e(15);
    for (int k = 0; k < 5; ++k) e.segment<3>(3 * k) = targets[k] - tips[k];
    return e;
  };

  FingertipResult out;
  out.q_hand = q_hand0.cwiseMax(lo).cwiseMin(hi);
  VecX e = residual(out.q_hand);
  double err = e.norm();
  while (err >= tol && out.iterations < max_iters) {
    VecX q = model.home();
    q.tail(n_hand) = out.q_hand;
    const std::vector<Pose> poses = model.forward_kinematics(q);
    const Mat3 R = (palm_pose.rotation * poses[model.palm_link()].rotation.conjugate()).toRotationMatrix();
    MatX J(15, n_hand);
    for (int k = 0; k < 5; ++k) {
      const Jacobian Jw = model.jacobian_from_poses(poses, model.fingertip_links()[k]);
      J.block(3 * k, 0, 3, n_hand) = R * Jw.block(0, n_arm, 3, n_hand);
    }
    const VecX dq = dls_step(J, e, damping);
    bool accepted = false;
    double step = 1.0;
    for (int h = 0; h <= 10; ++h, step *= 0.5) {
      const VecX q_new = (out.q_hand + step * dq).cwiseMax(lo).cwiseMin(hi);
      const VecX e_new = residual(q_new);
      if (e_new.norm() < err) {
        out.q_hand = q_new;
        e = e_new;
        err = e.norm();
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) break;
  }
  for (int k = 0; k < 5; ++k) out.residuals[k] = e.segment<3>(3 * k).norm();
  out.converged = err < tol;
  return out;
}

RetargetResult retarget(const RobotModel& model, const Pose& palm_target,
                        const std::array<Vec3, 5>& fingertip_targets, const VecX& q0) {
  RetargetResult out;
  IkOptions opts;
  for (int j = 0; j < model.n_arm(); ++j) opts.active_joints.push_back(j);
  out.arm = solve_ik(model, model.palm_link(), palm_target, q0, opts);
  const Pose palm = model.frame_pose(out.arm.q, model.palm_link());
  out.hand = fingertip_retarget(model, palm, fingertip_targets, out.arm.q.tail(model.n_hand()));
  out.q = out.arm.q;
  out.q.tail(model.n_hand()) = out.hand.q_hand;
  return out;
}

}  // namespace toolforge
