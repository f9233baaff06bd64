#pragma once

#include <filesystem>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "toolforge/geometry.hpp"
#include "toolforge/io.hpp"

namespace toolforge {

struct GoalFrame {
  double t = 0.0;  // seconds
  Pose pose;
  bool operator==(const GoalFrame&) const = default;
};

/// Timestamped object goal poses plus the capture rate and table height.
struct GoalTrajectory {
  std::vector<GoalFrame> frames;
  double rate_hz = 30.0;
  double table_z = 0.0;

  /// Throws ValidationError unless timestamps are strictly increasing and
  /// there is at least one frame.
  void validate() const;
  std::size_t size() const { return frames.size(); }
  std::vector<Pose> poses() const;
};

/// Keeps every round(rate/out_hz)-th frame starting with the first.
GoalTrajectory downsample(const GoalTrajectory& traj, double out_hz);

/// Drops frames until the object first rises more than z_thresh above
/// z_table. Throws ValidationError if it never does.
GoalTrajectory truncate_liftoff(const GoalTrajectory& traj, double z_table, double z_thresh = 0.10);

/// JSONL: a header {"rate_hz", "table_z"} then one {"t", "pose": [7]} per line.
GoalTrajectory parse_trajectory(std::string_view text, const std::string& origin = "<trajectory>");
GoalTrajectory load_trajectory(const std::filesystem::path& path);
std::string dump_trajectory(const GoalTrajectory& traj);
void save_trajectory(const GoalTrajectory& traj, const std::filesystem::path& path);

struct ProgressReport {
  int goals_total = 0;
  int goals_reached = 0;
  double progress = 0.0;            // percent
  std::vector<int> steps_to_reach;  // rollout step at which each reached goal was hit
  std::string failure;              // empty when every goal was reached
  int steps_evaluated = 0;

  json to_json() const;
};

void write_progress_csv_header(std::ostream& os);
void write_progress_csv_row(std::ostream& os, const std::string& name, const ProgressReport& r);

/// Closed-loop goal pointer. Each observed object pose advances the pointer
/// past every consecutive goal it satisfies (d < eps under the reward
/// keypoint scales), so only spatial accuracy matters, not timing.
class ProgressTracker {
 public:
  ProgressTracker(std::vector<Pose> goals, double eps = 0.02);

  /// Returns how many goals this pose newly reached.
  int observe(const Pose& object, int step);
  bool finished() const { return pointer_ == goals_.size(); }
  std::size_t pointer() const { return pointer_; }
  const Pose& current_goal() const;
  ProgressReport report(const std::string& failure) const;

 private:
  std::vector<Pose> goals_;
  double eps_;
  std::size_t pointer_ = 0;
  std::vector<int> steps_;
  int last_step_ = -1;
};

/// Object poses of one executed episode and, if it ended early, why.
struct Rollout {
  std::vector<Pose> object_poses;
  std::string termination;  // empty or "timeout"/"running" when it did not fail
};

/// Reads an episode log (JSONL with "object_pose" per line; an "events"
/// entry "terminated:<reason>" marks the failure reason).
Rollout parse_rollout(std::string_view text, const std::string& origin = "<rollout>");
Rollout load_rollout(const std::filesystem::path& path);

ProgressReport evaluate_progress(const Rollout& rollout, const std::vector<Pose>& goals, double eps = 0.02,
                                 int step_budget = std::numeric_limits<int>::max());

}  // namespace toolforge
