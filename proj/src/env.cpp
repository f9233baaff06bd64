#include "toolforge/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "toolforge/errors.hpp"
#include "toolforge/io.hpp"

namespace toolforge {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::vector<double> to_vector(const VecX& v) { return {v.data(), v.data() + v.size()}; }

void put(VecX& out, Eigen::Index& at, const VecX& v) {
  out.segment(at, v.size()) = v;
  at += v.size();
}
void put(VecX& out, Eigen::Index& at, const Vec3& v) {
  out.segment<3>(at) = v;
  at += 3;
}
void put(VecX& out, Eigen::Index& at, const Quat& q) {
  out.segment<4>(at) << q.w(), q.x(), q.y(), q.z();
  at += 4;
}
void put(VecX& out, Eigen::Index& at, double v) { out[at++] = v; }

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Running: return "running";
    case Termination::Fallen: return "fallen";
    case Termination::Dropped: return "dropped";
    case Termination::Wander: return "wander";
    case Termination::Force: return "force";
    case Termination::Timeout: return "timeout";
    case Termination::MaxSuccess: return "max_success";
  }
  return "unknown";
}

void EnvConfig::validate() const {
  if (episode_length <= 0) throw ValidationError("env.episode_length: must be > 0");
  if (sim_hz <= 0 || control_hz <= 0 || sim_hz % control_hz != 0) {
    throw ValidationError("env.sim_hz must be a positive multiple of env.control_hz");
  }
  const double nonneg[] = {object_xy_range,  table_height_range,        joint_init_noise,
                           object_rest_offset, next_goal_max_translation, next_goal_max_rotation_deg,
                           hand_wander_limit, table_force_limit,         table_stiffness,
                           palm_contact_radius, capture_radius,          gravity};
  for (double v : nonneg) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("env: magnitudes must be finite and >= 0");
  }
  if (!(goal_lo.array() <= goal_hi.array()).all()) throw ValidationError("env.goal workspace: lo > hi");
  if (max_consecutive_successes <= 0) throw ValidationError("env.max_consecutive_successes: must be > 0");
}

VecX ActorObservation::flatten() const {
  const Eigen::Index n = q.size() + qd.size() + prev_target.size() + 3 + 4 + 15 + 4 + 12 + 12 + 3;
  VecX out(n);
  Eigen::Index at = 0;
  put(out, at, q);
  put(out, at, qd);
  put(out, at, prev_target);
  put(out, at, palm_pos);
  put(out, at, palm_quat);
  for (const auto& t : fingertips_rel) put(out, at, t);
  put(out, at, object_quat);
  for (const auto& k : keypoints_rel) put(out, at, k);
  for (const auto& k : keypoint_errors) put(out, at, k);
  put(out, at, scales);
  return out;
}

VecX CriticState::flatten() const {
  const VecX base = clean.flatten();
  VecX out(base.size() + 18);
  Eigen::Index at = 0;
  put(out, at, base);
  put(out, at, palm_lin_vel);
  put(out, at, palm_ang_vel);
  put(out, at, object_lin_vel);
  put(out, at, object_ang_vel);
  put(out, at, reward);
  put(out, at, static_cast<double>(success_count));
  put(out, at, min_fingertip_dist);
  put(out, at, min_keypoint_dist);
  put(out, at, static_cast<double>(steps));
  put(out, at, grasped ? 1.0 : 0.0);
  return out;
}

json EpisodeState::to_json() const {
  return {{"seed", seed},
          {"q", to_vector(joints.q)},
          {"qd", to_vector(joints.qd)},
          {"object", toolforge::to_json(object)},
          {"object_lin_vel", toolforge::to_json(object_lin_vel)},
          {"object_ang_vel", toolforge::to_json(object_ang_vel)},
          {"attached", attached},
          {"grab", toolforge::to_json(grab)},
          {"supported", supported},
          {"palm", toolforge::to_json(palm)},
          {"goal", toolforge::to_json(goal)},
          {"goal_index", goal_index},
          {"reward",
           {{"d_star", reward.d_star},
            {"dbar_star_ft", reward.dbar_star_ft},
            {"grasped", reward.grasped},
            {"lifted_bonus_paid", reward.lifted_bonus_paid},
            {"success_count", reward.success_count}}},
          {"prev_target", to_vector(control.prev_target)},
          {"delays", {action_queue.delay(), proprio_queue.delay(), object_queue.delay()}},
          {"obs_scales", toolforge::to_json(obs_scales)},
          {"step", step},
          {"table_z", table_z},
          {"table_force", table_force},
          {"min_keypoint_dist", min_keypoint_dist},
          {"done", done},
          {"termination", to_string(termination)}};
}

Env::Env(RobotModel model, ToolSpec tool, EnvConfig env, ControlConfig control, RewardConfig reward,
         RandomizationConfig dr)
    : model_(std::move(model)),
      tool_(std::move(tool)),
      env_(env),
      control_(control, model_),
      reward_(reward),
      dr_(dr) {
  env_.validate();
  reward_.validate();
  dr_.validate();
  if (!model_.has_hand_frames()) throw ValidationError("env: robot model needs palm and 5 fingertip frames");
}

void Env::set_goal_sequence(std::vector<Pose> goals) {
  for (const auto& g : goals) require_finite(g, "goal sequence");
  goal_sequence_ = std::move(goals);
}

Box3 Env::goal_workspace(double table_z) const {
  const Vec3 center(0.0, 0.0, table_z);
  return {center + env_.goal_lo, center + env_.goal_hi};
}

Pose Env::sample_initial_goal(Rng& rng, double table_z) const {
  const Box3 box = goal_workspace(table_z);
  Pose g;
  for (int i = 0; i < 3; ++i) g.translation[i] = rng.uniform(box.lo[i], box.hi[i]);
  g.rotation = random_rotation(rng);
  return g;
}

Pose Env::sample_next_goal(const Pose& prev, Rng& rng) const {
  require_finite(prev, "previous goal");
  Pose g = prev;
  const Vec3 dir = random_unit_vector(rng);
  const double radius = env_.next_goal_max_translation * std::cbrt(rng.uniform());
  g.translation += radius * dir;
  const Vec3 axis = random_unit_vector(rng);
  const double angle = rng.uniform(0.0, 1.0) * env_.next_goal_max_rotation_deg * kDegToRad;
  if (angle != 0.0) g.rotation = (quat_from_axis_angle(axis, angle) * prev.rotation).normalized();
  if (env_.clamp_goals) g.translation = goal_workspace(state_.table_z).clamp(g.translation);
  return g;
}

void Env::update_palm() {
  link_poses_ = model_.forward_kinematics(state_.joints.q);
  state_.palm = link_poses_[model_.palm_link()];
}

Vec3 Env::grasp_center_world() const { return state_.object.apply(tool_.grasp_box.center); }

bool Env::can_attach() const {
  return (state_.palm.translation - grasp_center_world()).norm() <= env_.capture_radius;
}

double Env::goal_distance() const {
  return keypoint_distance(state_.object, state_.goal, reward_keypoint_scales());
}

double Env::mean_fingertip_distance() const {
  double sum = 0.0;
  for (int tip : model_.fingertip_links()) sum += (link_poses_[tip].translation - state_.object.translation).norm();
  return sum / 5.0;
}

StepResult Env::reset(std::uint64_t seed) {
  state_ = EpisodeState{};
  state_.seed = seed;

  Rng table_rng(derive_seed(seed, "table"));
  state_.table_z = env_.table_surface_z + table_rng.uniform(-env_.table_height_range, env_.table_height_range);
  state_.rest_z = state_.table_z + env_.object_rest_offset;

  Rng joint_rng(derive_seed(seed, "joints"));
  VecX q = model_.home();
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] += joint_rng.uniform(-env_.joint_init_noise, env_.joint_init_noise);
  state_.joints.q = model_.clamp(q);
  state_.joints.qd = VecX::Zero(model_.dof());
  control_.reset(state_.control, state_.joints.q);

  Rng object_rng(derive_seed(seed, "object"));
  state_.object.translation.x() = object_rng.uniform(-env_.object_xy_range, env_.object_xy_range);
  state_.object.translation.y() = object_rng.uniform(-env_.object_xy_range, env_.object_xy_range);
  state_.object.translation.z() = state_.rest_z;
  state_.object.rotation = random_rotation(object_rng);
  state_.supported = true;

  Rng dr_rng(derive_seed(seed, "dr_episode"));
  const Vec3 bbox = perturb_bbox(tool_.grasp_box.extents, dr_rng, dr_.bbox_perturb_fraction);
  state_.obs_scales = dr_.enabled ? bbox : tool_.grasp_box.extents;
  if (dr_.enabled) {
    state_.action_queue.reset(dr_.action_delay_max, dr_rng);
    state_.proprio_queue.reset(dr_.obs_delay_max, dr_rng);
    state_.object_queue.reset(dr_.object_pose_delay_max, dr_rng);
  }

  update_palm();
  if (!goal_sequence_.empty()) {
    state_.goal = goal_sequence_.front();
  } else {
    Rng goal_rng(derive_seed(seed, "goal", 0));
    state_.goal = sample_initial_goal(goal_rng, state_.table_z);
  }
  state_.goals_sampled = 1;

  const double d = goal_distance();
  reset_reward_state(state_.reward, mean_fingertip_distance(), d);
  state_.min_keypoint_dist = d;

  StepResult out;
  out.obs = build_actor_obs();
  out.critic = build_critic_state(0.0);
  out.info.goal_dist = d;
  out.info.d_star = state_.reward.d_star;
  return out;
}

void Env::integrate_object(double dt, const Wrench& wrench, bool apply_wrench) {
  if (state_.supported) return;
  Vec3 accel(0.0, 0.0, -env_.gravity);
  Vec3 ang_accel = Vec3::Zero();
  if (apply_wrench && tool_.mass > 0.0) {
    accel += wrench.force / tool_.mass;
    const Mat3 R = state_.object.rotation_matrix();
    const Mat3 I_world = R * tool_.inertia * R.transpose();
    ang_accel = I_world.ldlt().solve(wrench.torque);
  }
  // exact for piecewise-constant acceleration
  state_.object.translation += state_.object_lin_vel * dt + 0.5 * accel * dt * dt;
  state_.object_lin_vel += accel * dt;
  const Vec3 rot = state_.object_ang_vel * dt + 0.5 * ang_accel * dt * dt;
  state_.object.rotation = (quat_from_rotation_vector(rot) * state_.object.rotation).normalized();
  state_.object_ang_vel += ang_accel * dt;

  const Vec3& p = state_.object.translation;
  const bool over_table = std::abs(p.x()) <= env_.table_half_x && std::abs(p.y()) <= env_.table_half_y;
  if (over_table && p.z() <= state_.rest_z && state_.object_lin_vel.z() <= 0.0) {
    state_.object.translation.z() = state_.rest_z;
    state_.object_lin_vel.setZero();
    state_.object_ang_vel.setZero();
    state_.supported = true;
  }
}

void Env::advance_goal(const Vec3&) {
  if (!goal_sequence_.empty()) {
    const int next = state_.goal_index + 1;
    if (next < static_cast<int>(goal_sequence_.size())) {
      state_.goal_index = next;
      state_.goal = goal_sequence_[next];
    } else {
      state_.goals_exhausted = true;
    }
    return;
  }
  Rng goal_rng(derive_seed(state_.seed, "goal", static_cast<std::uint64_t>(state_.goals_sampled)));
  state_.goal = sample_next_goal(state_.goal, goal_rng);
  ++state_.goals_sampled;
  ++state_.goal_index;
}

StepResult Env::step(const VecX& action, GraspEvent event) {
  if (state_.done) throw std::logic_error("step() called after the episode ended; call reset()");
  if (action.size() != model_.dof()) throw ValidationError("action has wrong length");
  StepResult out;
  auto& events = out.info.events;
  ++state_.step;
  Rng dr_rng(derive_seed(state_.seed, "dr", static_cast<std::uint64_t>(state_.step)));

  const VecX applied = dr_.enabled ? state_.action_queue.push_pop(action) : action;
  const VecX q_prev = state_.joints.q;
  const Pose palm_prev = state_.palm;
  const Pose object_prev = state_.object;
  const VecX target = control_.process_action(applied, state_.control);

  if (event == GraspEvent::Attach && !state_.attached) {
    if (can_attach()) {
      state_.attached = true;
      state_.supported = false;
      state_.grab = compose(invert(state_.palm), state_.object);
      events.push_back("attach");
    } else {
      events.push_back("attach_rejected");
    }
  } else if (event == GraspEvent::Detach && state_.attached) {
    state_.attached = false;
    state_.supported = false;
    state_.object_lin_vel = state_.palm_lin_vel;
    state_.object_ang_vel = state_.palm_ang_vel;
    events.push_back("detach");
  }

  const Wrench wrench = sample_wrench(dr_rng, dr_.force_scale, dr_.torque_scale);
  const bool perturb = dr_rng.bernoulli(dr_.perturb_probability) && dr_.enabled && !state_.attached;
  if (perturb) events.push_back("perturb");

  const int n_sub = env_.substeps();
  const double dt = 1.0 / env_.sim_hz;
  double max_force = 0.0;
  for (int k = 1; k <= n_sub; ++k) {
    state_.joints.q = q_prev + (static_cast<double>(k) / n_sub) * (target - q_prev);
    update_palm();
    const double penetration =
        std::max(0.0, state_.table_z - (state_.palm.translation.z() - env_.palm_contact_radius));
    max_force = std::max(max_force, env_.table_stiffness * penetration);
    if (state_.attached) {
      state_.object = compose(state_.palm, state_.grab);
    } else {
      integrate_object(dt, wrench, perturb);
    }
  }
  state_.joints.q = target;
  const double hz = env_.control_hz;
  state_.joints.qd = (state_.joints.q - q_prev) * hz;
  state_.palm_lin_vel = (state_.palm.translation - palm_prev.translation) * hz;
  state_.palm_ang_vel = rotation_vector(state_.palm.rotation * palm_prev.rotation.conjugate()) * hz;
  if (state_.attached) {
    state_.object_lin_vel = (state_.object.translation - object_prev.translation) * hz;
    state_.object_ang_vel = rotation_vector(state_.object.rotation * object_prev.rotation.conjugate()) * hz;
  }
  state_.table_force = max_force;

  const double d = goal_distance();
  RewardInputs in;
  in.qd_arm = state_.joints.qd.head(model_.n_arm());
  in.qd_hand = state_.joints.qd.tail(model_.n_hand());
  in.mean_ft_dist = mean_fingertip_distance();
  in.object_z = state_.object.translation.z();
  in.goal_dist = d;
  RewardTerms terms = total_reward(in, state_.reward, reward_);
  state_.min_keypoint_dist = std::min(state_.min_keypoint_dist, d);
  if (terms.lifted_bonus) events.push_back("lifted");
  // a pose may satisfy several consecutive goals; each is paid once
  for (bool reached = terms.goal_reached; reached;) {
    events.push_back("success");
    advance_goal(state_.object.translation);
    if (state_.goals_exhausted) break;
    const double d_next = goal_distance();
    on_new_goal(state_.reward, d_next);
    const GoalReward chained = goal_reward(d_next, state_.reward, reward_);
    terms.goal += chained.total();
    terms.total += chained.total();
    reached = chained.goal_reached &&
              (!goal_sequence_.empty() || state_.reward.success_count < env_.max_consecutive_successes);
  }

  state_.termination = check_termination();
  state_.done = state_.termination != Termination::Running;
  if (state_.done) events.push_back("terminated:" + to_string(state_.termination));

  out.obs = build_actor_obs();
  out.critic = build_critic_state(terms.total);
  out.reward = terms.total;
  out.done = state_.done;
  out.info.terms = terms;
  out.info.goal_dist = d;
  out.info.d_star = state_.reward.d_star;
  out.info.termination = state_.termination;
  return out;
}

Termination Env::check_termination() const {
  const double z = state_.object.translation.z();
  if (z < state_.table_z) return Termination::Fallen;
  if (state_.reward.grasped && z < reward_.z_init) return Termination::Dropped;
  if ((state_.palm.translation - state_.object.translation).norm() > env_.hand_wander_limit) {
    return Termination::Wander;
  }
  if (state_.table_force > env_.table_force_limit) return Termination::Force;
  if (state_.step >= env_.episode_length) return Termination::Timeout;
  if (state_.goals_exhausted) return Termination::MaxSuccess;
  if (goal_sequence_.empty() && state_.reward.success_count >= env_.max_consecutive_successes) {
    return Termination::MaxSuccess;
  }
  return Termination::Running;
}

ActorObservation Env::build_clean_obs() const {
  ActorObservation o;
  o.q = state_.joints.q;
  o.qd = state_.joints.qd;
  o.prev_target = state_.control.prev_target;
  o.palm_pos = state_.palm.translation;
  o.palm_quat = state_.palm.rotation;
  const auto& tips = model_.fingertip_links();
  for (int k = 0; k < 5; ++k) o.fingertips_rel[k] = link_poses_[tips[k]].translation - o.palm_pos;
  o.object_quat = state_.object.rotation;
  o.scales = tool_.grasp_box.extents;
  const KeypointScales s(o.scales);
  const KeypointSet obj = keypoints_world(state_.object, s);
  const KeypointSet goal = keypoints_world(state_.goal, s);
  for (int i = 0; i < 4; ++i) {
    o.keypoints_rel[i] = obj[i] - o.palm_pos;
    o.keypoint_errors[i] = obj[i] - goal[i];
  }
  return o;
}

ActorObservation Env::build_actor_obs() {
  if (!dr_.enabled) return build_clean_obs();
  Rng rng(derive_seed(state_.seed, "obs", static_cast<std::uint64_t>(state_.step)));
  const int n = model_.dof();
  const auto& tips = model_.fingertip_links();

  VecX proprio(3 * n + 3 + 4 + 15);
  Eigen::Index at = 0;
  VecX qd = state_.joints.qd;
  for (Eigen::Index i = 0; i < qd.size(); ++i) qd[i] += rng.normal(0.0, dr_.joint_vel_noise);
  put(proprio, at, state_.joints.q);
  put(proprio, at, qd);
  put(proprio, at, state_.control.prev_target);
  put(proprio, at, state_.palm.translation);
  put(proprio, at, state_.palm.rotation);
  for (int k = 0; k < 5; ++k) put(proprio, at, Vec3(link_poses_[tips[k]].translation - state_.palm.translation));
  const VecX delayed = state_.proprio_queue.push_pop(proprio);

  const Pose noisy = perturb_pose(state_.object, dr_.object_pos_noise, dr_.object_rot_noise_deg * kDegToRad, rng);
  const Pose object = state_.object_queue.push_pop(noisy);

  ActorObservation o;
  at = 0;
  o.q = delayed.segment(at, n);
  at += n;
  o.qd = delayed.segment(at, n);
  at += n;
  o.prev_target = delayed.segment(at, n);
  at += n;
  o.palm_pos = delayed.segment<3>(at);
  at += 3;
  o.palm_quat = Quat(delayed[at], delayed[at + 1], delayed[at + 2], delayed[at + 3]);
  at += 4;
  for (int k = 0; k < 5; ++k, at += 3) o.fingertips_rel[k] = delayed.segment<3>(at);
  o.object_quat = object.rotation;
  o.scales = state_.obs_scales;
  const KeypointScales s(o.scales);
  const KeypointSet obj = keypoints_world(object, s);
  const KeypointSet goal = keypoints_world(state_.goal, s);
  for (int i = 0; i < 4; ++i) {
    o.keypoints_rel[i] = obj[i] - o.palm_pos;
    o.keypoint_errors[i] = obj[i] - goal[i];
  }
  return o;
}

CriticState Env::build_critic_state(double reward) const {
  CriticState c;
  c.clean = build_clean_obs();
  c.palm_lin_vel = state_.palm_lin_vel;
  c.palm_ang_vel = state_.palm_ang_vel;
  c.object_lin_vel = state_.object_lin_vel;
  c.object_ang_vel = state_.object_ang_vel;
  c.reward = reward;
  c.success_count = state_.reward.success_count;
  c.min_fingertip_dist = state_.reward.dbar_star_ft;
  c.min_keypoint_dist = state_.min_keypoint_dist;
  c.steps = state_.step;
  c.grasped = state_.reward.grasped;
  return c;
}

}  // namespace toolforge
