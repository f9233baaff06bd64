#include "toolforge/config.hpp"

#include <cmath>

#include "toolforge/errors.hpp"

namespace toolforge {
namespace {

template <class F>
void visit(EnvConfig& c, F&& f) {
  f("episode_length", c.episode_length);
  f("sim_hz", c.sim_hz);
  f("control_hz", c.control_hz);
  f("object_xy_range", c.object_xy_range);
  f("table_height_range", c.table_height_range);
  f("joint_init_noise", c.joint_init_noise);
  f("table_surface_z", c.table_surface_z);
  f("table_half_x", c.table_half_x);
  f("table_half_y", c.table_half_y);
  f("object_rest_offset", c.object_rest_offset);
  f("goal_lo", c.goal_lo);
  f("goal_hi", c.goal_hi);
  f("next_goal_max_translation", c.next_goal_max_translation);
  f("next_goal_max_rotation_deg", c.next_goal_max_rotation_deg);
  f("clamp_goals", c.clamp_goals);
  f("hand_wander_limit", c.hand_wander_limit);
  f("table_force_limit", c.table_force_limit);
  f("table_stiffness", c.table_stiffness);
  f("palm_contact_radius", c.palm_contact_radius);
  f("max_consecutive_successes", c.max_consecutive_successes);
  f("capture_radius", c.capture_radius);
  f("gravity", c.gravity);
}

template <class F>
void visit(ControlConfig& c, F&& f) {
  f("k_arm", c.k_arm);
  f("alpha_arm", c.alpha_arm);
  f("alpha_hand", c.alpha_hand);
}

template <class F>
void visit(RewardConfig& c, F&& f) {
  f("lambda_arm", c.lambda_arm);
  f("lambda_hand", c.lambda_hand);
  f("lambda_approach", c.lambda_approach);
  f("lambda_lift", c.lambda_lift);
  f("lifted_bonus", c.lifted_bonus);
  f("lambda_goal", c.lambda_goal);
  f("success_bonus", c.success_bonus);
  f("success_tolerance", c.success_tolerance);
  f("z_init", c.z_init);
  f("z_lifted", c.z_lifted);
}

template <class F>
void visit(RandomizationConfig& c, F&& f) {
  f("enabled", c.enabled);
  f("obs_delay_max", c.obs_delay_max);
  f("action_delay_max", c.action_delay_max);
  f("object_pose_delay_max", c.object_pose_delay_max);
  f("joint_vel_noise", c.joint_vel_noise);
  f("object_pos_noise", c.object_pos_noise);
  f("object_rot_noise_deg", c.object_rot_noise_deg);
  f("force_scale", c.force_scale);
  f("torque_scale", c.torque_scale);
  f("perturb_probability", c.perturb_probability);
  f("bbox_perturb_fraction", c.bbox_perturb_fraction);
}

template <class F>
void visit(PlannerConfig& c, F&& f) {
  f("ik_damping", c.ik_damping);
  f("ik_max_iters", c.ik_max_iters);
  f("ik_tol", c.ik_tol);
  f("w_position", c.w_position);
  f("w_rotation", c.w_rotation);
  f("w_smooth", c.w_smooth);
  f("w_limit", c.w_limit);
  f("w_collision", c.w_collision);
  f("collision_margin", c.collision_margin);
  f("max_iters", c.max_iters);
  f("tol", c.tol);
}

template <class F>
void visit(EvalConfig& c, F&& f) {
  f("eps", c.eps);
  f("step_budget", c.step_budget);
  f("downsample_hz", c.downsample_hz);
  f("liftoff_threshold", c.liftoff_threshold);
}

struct Writer {
  json& out;
  void operator()(const char* key, const Vec3& v) const { out[key] = to_json(v); }
  template <class T>
  void operator()(const char* key, const T& v) const { out[key] = v; }
};

struct Reader {
  const json& in;
  std::string ctx;

  const json* find(const char* key) const {
    auto it = in.find(key);
    return it == in.end() ? nullptr : &*it;
  }
  std::string where(const char* key) const { return ctx + "." + key; }

  void operator()(const char* key, bool& v) const {
    if (const json* j = find(key)) {
      if (!j->is_boolean()) throw ValidationError(where(key) + ": expected true or false");
      v = j->get<bool>();
    }
  }
  void operator()(const char* key, int& v) const {
    if (const json* j = find(key)) {
      if (!j->is_number_integer()) throw ValidationError(where(key) + ": expected an integer");
      v = j->get<int>();
    }
  }
  void operator()(const char* key, double& v) const {
    if (const json* j = find(key)) {
      if (!j->is_number()) throw ValidationError(where(key) + ": expected a number");
      v = j->get<double>();
      if (!std::isfinite(v)) throw ValidationError(where(key) + ": not finite");
    }
  }
  void operator()(const char* key, Vec3& v) const {
    if (const json* j = find(key)) v = vec3_from_json(*j, where(key));
  }
};

template <class C>
json section_to_json(const C& c) {
  json out = json::object();
  C copy = c;
  visit(copy, Writer{out});
  return out;
}

template <class C>
void section_from_json(const json& j, C& c, const std::string& ctx) {
  if (!j.is_object()) throw ValidationError(ctx + ": expected an object");
  json known = section_to_json(c);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw ValidationError(ctx + "." + it.key() + ": unknown key");
  }
  visit(c, Reader{j, ctx});
}

}  // namespace

IkOptions PlannerConfig::ik_options() const {
  IkOptions o;
  o.damping = ik_damping;
  o.max_iters = ik_max_iters;
  o.tol = ik_tol;
  return o;
}

void PlannerConfig::apply(TrajOptProblem& p) const {
  p.w_position = w_position;
  p.w_rotation = w_rotation;
  p.w_smooth = w_smooth;
  p.w_limit = w_limit;
  p.w_collision = w_collision;
  p.collision_margin = collision_margin;
  p.max_iters = max_iters;
  p.tol = tol;
}

void PlannerConfig::validate() const {
  if (!(ik_damping > 0.0)) throw ValidationError("planner.ik_damping: must be > 0");
  if (ik_max_iters <= 0 || max_iters <= 0) throw ValidationError("planner: iteration budgets must be > 0");
  for (double w : {ik_tol, w_position, w_rotation, w_smooth, w_limit, w_collision, collision_margin, tol}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("planner: weights must be finite and >= 0");
  }
}

void EvalConfig::validate() const {
  if (!(eps > 0.0)) throw ValidationError("eval.eps: must be > 0");
  if (step_budget < 0) throw ValidationError("eval.step_budget: must be >= 0");
  if (!(downsample_hz > 0.0)) throw ValidationError("eval.downsample_hz: must be > 0");
  if (!std::isfinite(liftoff_threshold)) throw ValidationError("eval.liftoff_threshold: not finite");
}

void ExperimentConfig::validate() const {
  env.validate();
  control.validate();
  reward.validate();
  dr.validate();
  planner.validate();
  eval.validate();
}

json config_to_json(const ExperimentConfig& c) {
  return {{"schema_version", kConfigSchemaVersion},
          {"seed", c.seed},
          {"env", section_to_json(c.env)},
          {"control", section_to_json(c.control)},
          {"reward", section_to_json(c.reward)},
          {"dr", section_to_json(c.dr)},
          {"planner", section_to_json(c.planner)},
          {"eval", section_to_json(c.eval)}};
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config: expected an object");
  ExperimentConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "schema_version") {
      if (!v.is_number_integer() || v.get<int>() != kConfigSchemaVersion) {
        throw ValidationError("config.schema_version: unsupported version");
      }
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ValidationError("config.seed: expected a non-negative integer");
      }
      c.seed = v.get<std::uint64_t>();
    } else if (key == "env") {
      section_from_json(v, c.env, "config.env");
    } else if (key == "control") {
      section_from_json(v, c.control, "config.control");
    } else if (key == "reward") {
      section_from_json(v, c.reward, "config.reward");
    } else if (key == "dr") {
      section_from_json(v, c.dr, "config.dr");
    } else if (key == "planner") {
      section_from_json(v, c.planner, "config.planner");
    } else if (key == "eval") {
      section_from_json(v, c.eval, "config.eval");
    } else {
      throw ValidationError("config." + key + ": unknown key");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(parse_json_file(path)); }

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  write_text_file_atomic(path, config_to_json(config).dump(2) + "\n");
}

}  // namespace toolforge
