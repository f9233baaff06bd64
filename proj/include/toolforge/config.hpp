#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "toolforge/control.hpp"
#include "toolforge/env.hpp"
#include "toolforge/io.hpp"
#include "toolforge/planners.hpp"
#include "toolforge/randomization.hpp"
#include "toolforge/reward.hpp"

namespace toolforge {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kTrajectorySchemaVersion = 1;
inline constexpr int kToolSchemaVersion = 1;
inline constexpr int kRobotSchemaVersion = 1;

struct PlannerConfig {
  double ik_damping = 0.05;
  int ik_max_iters = 300;
  double ik_tol = 1e-6;
  double w_position = 1.0;
  double w_rotation = 0.3;
  double w_smooth = 0.1;
  double w_limit = 100.0;
  double w_collision = 100.0;
  double collision_margin = 0.01;
  int max_iters = 100;
  double tol = 1e-9;

  IkOptions ik_options() const;
  /// Copies the weights into `problem`.
  void apply(TrajOptProblem& problem) const;
  void validate() const;
  bool operator==(const PlannerConfig&) const = default;
};

struct EvalConfig {
  double eps = 0.02;          // m
  int step_budget = 0;        // 0: episode length
  double downsample_hz = 3.0;
  double liftoff_threshold = 0.10;  // m above the table

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  EnvConfig env;
  ControlConfig control;
  RewardConfig reward;
  RandomizationConfig dr;
  PlannerConfig planner;
  EvalConfig eval;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Every key is written, so the dump documents the full schema.
json config_to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys and mistyped values raise
/// ValidationError naming the offending key.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace toolforge
