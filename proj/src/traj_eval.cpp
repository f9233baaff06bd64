#include "toolforge/traj_eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "toolforge/errors.hpp"

namespace toolforge {
namespace {

std::string at_line(const std::string& origin, std::size_t line) {
  return origin + ":" + std::to_string(line);
}

Pose pose_from_line(const json& rec, const std::string& key, const std::string& ctx) {
  const json& p = require_field(rec, key, ctx);
  if (!p.is_array()) throw ValidationError(ctx + "." + key + ": expected [tx,ty,tz,qw,qx,qy,qz]");
  if (p.size() == 3) throw ValidationError(ctx + "." + key + ": quaternion field (qw,qx,qy,qz) missing");
  if (p.size() != 7) {
    throw ValidationError(ctx + "." + key + ": expected 7 numbers, got " + std::to_string(p.size()));
  }
  return pose_from_json(p, ctx + "." + key);
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) f(line, line_no);
    start = end + 1;
  }
}

}  // namespace

void GoalTrajectory::validate() const {
  if (frames.empty()) throw ValidationError("trajectory: needs at least one frame");
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ValidationError("trajectory.rate_hz: must be > 0");
  if (!std::isfinite(table_z)) throw ValidationError("trajectory.table_z: not finite");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    require_finite(frames[i].pose, "trajectory frame");
    if (!std::isfinite(frames[i].t)) throw ValidationError("trajectory: non-finite timestamp");
    if (i > 0 && !(frames[i].t > frames[i - 1].t)) {
      throw ValidationError("trajectory: timestamps not strictly increasing at frame " + std::to_string(i));
    }
  }
}

std::vector<Pose> GoalTrajectory::poses() const {
  std::vector<Pose> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.pose);
  return out;
}

GoalTrajectory downsample(const GoalTrajectory& traj, double out_hz) {
  if (!(out_hz > 0.0) || !std::isfinite(out_hz)) throw ValidationError("downsample: out_hz must be > 0");
  traj.validate();
  if (out_hz > traj.rate_hz * (1.0 + 1e-9)) {
    throw ValidationError("downsample: out_hz exceeds the source rate");
  }
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(traj.rate_hz / out_hz)));
  GoalTrajectory out;
  out.rate_hz = traj.rate_hz / static_cast<double>(stride);
  out.table_z = traj.table_z;
  for (std::size_t i = 0; i < traj.frames.size(); i += stride) out.frames.push_back(traj.frames[i]);
  return out;
}

GoalTrajectory truncate_liftoff(const GoalTrajectory& traj, double z_table, double z_thresh) {
  traj.validate();
  if (!std::isfinite(z_table) || !std::isfinite(z_thresh)) throw ValidationError("truncate_liftoff: non-finite input");
  const auto it = std::find_if(traj.frames.begin(), traj.frames.end(), [&](const GoalFrame& f) {
    return f.pose.translation.z() - z_table > z_thresh;
  });
  if (it == traj.frames.end()) {
    std::ostringstream ss;
    ss << "truncate_liftoff: object never rises more than " << z_thresh << " m above the table (z_table = "
       << z_table << ")";
    throw ValidationError(ss.str());
  }
  GoalTrajectory out = traj;
  out.frames.assign(it, traj.frames.end());
  return out;
}

GoalTrajectory parse_trajectory(std::string_view text, const std::string& origin) {
  GoalTrajectory traj;
  bool have_header = false;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    const std::string ctx = at_line(origin, n);
    const json rec = parse_json_text(line, ctx);
    if (!have_header) {
      traj.rate_hz = require_number(rec, "rate_hz", ctx);
      traj.table_z = require_number(rec, "table_z", ctx);
      if (!(traj.rate_hz > 0.0)) throw ValidationError(ctx + ".rate_hz: must be > 0");
      have_header = true;
      return;
    }
    GoalFrame f;
    f.t = require_number(rec, "t", ctx);
    f.pose = pose_from_line(rec, "pose", ctx);
    if (!traj.frames.empty() && !(f.t > traj.frames.back().t)) {
      throw ValidationError(ctx + ".t: timestamps must be strictly increasing");
    }
    traj.frames.push_back(f);
  });
  if (!have_header) throw ValidationError(origin + ": missing header record");
  if (traj.frames.empty()) throw ValidationError(origin + ": no trajectory frames");
  return traj;
}

GoalTrajectory load_trajectory(const std::filesystem::path& path) {
  return parse_trajectory(read_text_file(path), path.string());
}

std::string dump_trajectory(const GoalTrajectory& traj) {
  traj.validate();
  std::string out = json{{"rate_hz", traj.rate_hz}, {"table_z", traj.table_z}}.dump() + "\n";
  for (const auto& f : traj.frames) out += json{{"t", f.t}, {"pose", to_json(f.pose)}}.dump() + "\n";
  return out;
}

void save_trajectory(const GoalTrajectory& traj, const std::filesystem::path& path) {
  write_text_file_atomic(path, dump_trajectory(traj));
}

json ProgressReport::to_json() const {
  return {{"goals_total", goals_total},     {"goals_reached", goals_reached},
          {"progress", progress},           {"steps_to_reach", steps_to_reach},
          {"failure", failure},             {"steps_evaluated", steps_evaluated}};
}

void write_progress_csv_header(std::ostream& os) {
  os << "rollout,goals_total,goals_reached,progress,steps_evaluated,failure\n";
}

void write_progress_csv_row(std::ostream& os, const std::string& name, const ProgressReport& r) {
  os << name << ',' << r.goals_total << ',' << r.goals_reached << ',' << std::setprecision(10) << r.progress
     << ',' << r.steps_evaluated << ',' << r.failure << '\n';
}

ProgressTracker::ProgressTracker(std::vector<Pose> goals, double eps) : goals_(std::move(goals)), eps_(eps) {
  if (goals_.empty()) throw ValidationError("progress: empty goal list");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("progress: eps must be > 0");
  for (const auto& g : goals_) require_finite(g, "progress goal");
}

int ProgressTracker::observe(const Pose& object, int step) {
  last_step_ = std::max(last_step_, step);
  const KeypointScales scales = reward_keypoint_scales();
  int hit = 0;
  while (pointer_ < goals_.size() && keypoint_distance(object, goals_[pointer_], scales) < eps_) {
    steps_.push_back(step);
    ++pointer_;
    ++hit;
  }
  return hit;
}

const Pose& ProgressTracker::current_goal() const {
  return goals_[std::min(pointer_, goals_.size() - 1)];
}

ProgressReport ProgressTracker::report(const std::string& failure) const {
  ProgressReport r;
  r.goals_total = static_cast<int>(goals_.size());
  r.goals_reached = static_cast<int>(pointer_);
  r.progress = 100.0 * r.goals_reached / r.goals_total;
  r.steps_to_reach = steps_;
  r.failure = finished() ? "" : failure;
  r.steps_evaluated = last_step_ + 1;
  return r;
}

Rollout parse_rollout(std::string_view text, const std::string& origin) {
  Rollout r;
  for_each_line(text, [&](std::string_view line, std::size_t n) {
    const std::string ctx = at_line(origin, n);
    const json rec = parse_json_text(line, ctx);
    if (!rec.contains("object_pose")) {
      if (rec.contains("termination") && rec["termination"].is_string()) {
        r.termination = rec["termination"].get<std::string>();
        return;
      }
      throw ValidationError(ctx + ".object_pose: missing field");
    }
    r.object_poses.push_back(pose_from_line(rec, "object_pose", ctx));
    if (auto it = rec.find("events"); it != rec.end() && it->is_array()) {
      for (const auto& e : *it) {
        if (!e.is_string()) continue;
        const std::string s = e.get<std::string>();
        if (s.rfind("terminated:", 0) == 0) r.termination = s.substr(11);
      }
    }
  });
  return r;
}

Rollout load_rollout(const std::filesystem::path& path) { return parse_rollout(read_text_file(path), path.string()); }

ProgressReport evaluate_progress(const Rollout& rollout, const std::vector<Pose>& goals, double eps,
                                 int step_budget) {
  ProgressTracker tracker(goals, eps);
  if (step_budget < 0) throw ValidationError("progress: step budget must be >= 0");
  const int n = static_cast<int>(std::min<std::size_t>(rollout.object_poses.size(), step_budget));
  for (int t = 0; t < n && !tracker.finished(); ++t) tracker.observe(rollout.object_poses[t], t);
  std::string failure;
  if (n < static_cast<int>(rollout.object_poses.size())) {
    failure = "budget_exhausted";
  } else if (!rollout.termination.empty() && rollout.termination != "running") {
    failure = rollout.termination;
  } else {
    failure = "budget_exhausted";
  }
  ProgressReport r = tracker.report(failure);
  if (r.steps_evaluated == 0) r.steps_evaluated = n;
  return r;
}

}  // namespace toolforge
