#include "toolforge/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toolforge/errors.hpp"
#include "toolforge/parallel.hpp"
#include "toolforge/planners.hpp"

namespace toolforge {
namespace {

std::vector<double> to_vector(const VecX& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

PolicyOutput FrozenPolicy::act(const Env& env, const StepResult&) {
  return {VecX::Zero(env.model().dof()), GraspEvent::None};
}

void RandomPolicy::reset(const Env&, std::uint64_t seed) { rng_ = Rng(derive_seed(seed, "policy")); }

PolicyOutput RandomPolicy::act(const Env& env, const StepResult&) {
  VecX a(env.model().dof());
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng_.uniform(-1.0, 1.0);
  return {a, GraspEvent::None};
}

void OraclePolicy::reset(const Env& env, std::uint64_t) { approach_rotation_ = env.state().palm.rotation; }

VecX OraclePolicy::arm_action(const Env& env, const VecX& dq_arm) const {
  const ControlConfig& c = env.control_config();
  VecX a = dq_arm / (c.alpha_arm * c.k_arm);
  const double peak = a.cwiseAbs().maxCoeff();
  if (peak > 1.0) a /= peak;  // keep the direction rather than clipping per joint
  return a;
}

PolicyOutput OraclePolicy::act(const Env& env, const StepResult&) {
  const EpisodeState& s = env.state();
  const RobotModel& model = env.model();
  const int n_arm = model.n_arm();
  PolicyOutput out{VecX::Zero(model.dof()), GraspEvent::None};

  Pose target;
  if (!s.attached) {
    // keep the reset palm orientation so the arm stays in a well-conditioned posture
    target = Pose{env.grasp_center_world(), approach_rotation_};
    if ((target.translation - s.palm.translation).norm() <= config_.attach_radius && env.can_attach()) {
      out.event = GraspEvent::Attach;
      return out;
    }
  } else {
    target = compose(s.goal, invert(s.grab));
  }
  const VecX e = pose_error(s.palm, target);
  MatX J = model.jacobian(s.joints.q, model.palm_link()).leftCols(n_arm);
  VecX dq = dls_step(J, e, config_.damping);

  // drop joints pinned at a limit that the step would push further, then re-solve
  const VecX& q = s.control.prev_target;
  for (int pass = 0; pass < n_arm; ++pass) {
    bool changed = false;
    for (int i = 0; i < n_arm; ++i) {
      const bool at_lower = q[i] <= model.lower()[i] + 1e-9 && dq[i] < 0.0;
      const bool at_upper = q[i] >= model.upper()[i] - 1e-9 && dq[i] > 0.0;
      if ((at_lower || at_upper) && !J.col(i).isZero()) {
        J.col(i).setZero();
        changed = true;
      }
    }
    if (!changed) break;
    dq = dls_step(J, e, config_.damping);
  }
  out.action.head(n_arm) = arm_action(env, dq);
  return out;
}

std::unique_ptr<Policy> make_policy(const std::string& name) {
  if (name == "oracle") return std::make_unique<OraclePolicy>();
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (name == "frozen") return std::make_unique<FrozenPolicy>();
  throw ValidationError("unknown policy '" + name + "' (expected oracle, random or frozen)");
}

json episode_record(int step, const Env& env, const Pose& goal_used, const StepResult& r) {
  const EpisodeState& s = env.state();
  const RewardTerms& t = r.info.terms;
  return {{"step", step},
          {"q", to_vector(s.joints.q)},
          {"object_pose", to_json(s.object)},
          {"goal_pose", to_json(goal_used)},
          {"d", r.info.goal_dist},
          {"reward_terms",
           {{"smooth", t.smooth}, {"approach", t.approach}, {"lift", t.lift}, {"goal", t.goal}, {"total", t.total}}},
          {"events", r.info.events}};
}

json EpisodeSummary::to_json() const {
  json j = {{"seed", seed},
            {"steps", steps},
            {"total_reward", total_reward},
            {"success_events", success_events},
            {"lifted_events", lifted_events},
            {"termination", termination}};
  if (progress) j["progress"] = progress->to_json();
  return j;
}

EpisodeSummary run_episode(Env& env, Policy& policy, std::uint64_t seed, const EpisodeOptions& opts) {
  env.set_goal_sequence(opts.goals);
  StepResult r = env.reset(seed);
  policy.reset(env, seed);
  std::optional<ProgressTracker> tracker;
  if (!opts.goals.empty()) tracker.emplace(opts.goals, opts.eps);
  const int budget = opts.step_budget > 0 ? opts.step_budget : env.env_config().episode_length;
  if (opts.reward_csv) write_reward_csv_header(*opts.reward_csv);

  EpisodeSummary sum;
  sum.seed = seed;
  while (!r.done && env.state().step < budget) {
    const Pose goal_used = env.state().goal;
    const PolicyOutput a = policy.act(env, r);
    r = env.step(a.action, a.event);
    const int step = env.state().step;
    sum.total_reward += r.reward;
    sum.success_events += static_cast<int>(std::count(r.info.events.begin(), r.info.events.end(), "success"));
    sum.lifted_events += static_cast<int>(std::count(r.info.events.begin(), r.info.events.end(), "lifted"));
    if (tracker) tracker->observe(env.state().object, step - 1);
    if (opts.log) *opts.log << episode_record(step, env, goal_used, r).dump() << '\n';
    if (opts.reward_csv) write_reward_csv_row(*opts.reward_csv, step, r.info.terms, r.info.goal_dist, r.info.d_star);
  }
  sum.steps = env.state().step;
  sum.termination = r.done ? to_string(env.state().termination) : "budget_exhausted";
  if (tracker) sum.progress = tracker->report(sum.termination);
  return sum;
}

std::vector<EpisodeSummary> run_batch(int count, int jobs,
                                      const std::function<EpisodeSummary(int index)>& episode) {
  if (count < 0) throw ValidationError("batch: count must be >= 0");
  if (jobs <= 0) throw ValidationError("--jobs: must be >= 1");
  std::vector<EpisodeSummary> results(count);
  parallel_for(count, jobs, [&](int i) { results[i] = episode(i); });
  return results;
}

std::vector<Pose> easy_goal_chain(const Env& env, std::uint64_t seed, int extra, double lift, double max_step,
                                  double max_rot_deg) {
  if (extra < 0) throw ValidationError("easy_goal_chain: extra must be >= 0");
  Env probe = env;
  probe.set_goal_sequence({});
  probe.reset(seed);
  Pose g = probe.state().object;
  g.translation.z() += lift;
  std::vector<Pose> goals{g};
  Rng rng(derive_seed(seed, "easy_goals"));
  for (int k = 0; k < extra; ++k) {
    g.translation += rng.uniform(0.5, 1.0) * max_step * random_unit_vector(rng);
    const Vec3 axis = random_unit_vector(rng);
    const double angle = rng.uniform(0.5, 1.0) * max_rot_deg * std::numbers::pi / 180.0;
    g.rotation = (quat_from_axis_angle(axis, angle) * g.rotation).normalized();
    goals.push_back(g);
  }
  return goals;
}

}  // namespace toolforge
