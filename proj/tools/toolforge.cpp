#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toolforge/asset.hpp"
#include "toolforge/config.hpp"
#include "toolforge/errors.hpp"
#include "toolforge/io.hpp"
#include "toolforge/parallel.hpp"
#include "toolforge/planners.hpp"
#include "toolforge/policies.hpp"
#include "toolforge/traj_eval.hpp"

namespace fs = std::filesystem;
using namespace toolforge;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::string version_string() {
  std::ostringstream ss;
  ss << "toolforge " << kVersion << " (config schema " << kConfigSchemaVersion << ", trajectory schema "
     << kTrajectorySchemaVersion << ", tool schema " << kToolSchemaVersion << ", robot schema "
     << kRobotSchemaVersion << ")";
  return ss.str();
}

std::string numbered(const std::string& stem, int i, const std::string& ext) {
  std::ostringstream ss;
  ss << stem << '_' << std::setw(4) << std::setfill('0') << i << ext;
  return ss.str();
}

struct Common {
  std::string config_path;
  std::string robot_path;
  int jobs = 1;

  ExperimentConfig config() const { return config_path.empty() ? ExperimentConfig{} : load_config(config_path); }
  RobotModel robot() const {
    return robot_path.empty() ? RobotModel::default_model() : RobotModel::load(robot_path);
  }
};

void add_common(CLI::App* cmd, Common& c, bool with_robot, bool with_jobs) {
  cmd->add_option("--config", c.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  if (with_robot) cmd->add_option("--robot", c.robot_path, "Robot model (JSON)")->check(CLI::ExistingFile);
  if (with_jobs) cmd->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

// gen ------------------------------------------------------------------------

struct GenArgs {
  Common common;
  std::optional<std::uint64_t> seed;
  int count = 1;
  std::string out;
  int mesh_segments = 16;
};

void cmd_gen(const GenArgs& a) {
  const ExperimentConfig cfg = a.common.config();
  const std::uint64_t seed = a.seed.value_or(cfg.seed);
  if (a.count <= 0) throw ValidationError("--count: must be > 0");
  json index = json::array();
  std::vector<std::string> names(a.count);
  parallel_for(a.count, a.common.jobs, [&](int i) {
    const ToolSpec tool = sample_tool(derive_seed(seed, "gen", static_cast<std::uint64_t>(i)));
    names[i] = numbered("tool", i, ".json");
    export_tool(tool, fs::path(a.out) / names[i], a.mesh_segments);
  });
  for (int i = 0; i < a.count; ++i) index.push_back({{"file", names[i]}, {"index", i}});
  write_text_file_atomic(fs::path(a.out) / "index.json",
                         json{{"seed", seed}, {"count", a.count}, {"tools", index}}.dump(2) + "\n");
  std::cout << "wrote " << a.count << " tools to " << a.out << "\n";
}

// preprocess ------------------------------------------------------------------

struct PreprocessArgs {
  Common common;
  std::string in, out;
  std::optional<double> hz, z_thresh, table_z;
};

void cmd_preprocess(const PreprocessArgs& a) {
  const ExperimentConfig cfg = a.common.config();
  const GoalTrajectory raw = load_trajectory(a.in);
  const GoalTrajectory down = downsample(raw, a.hz.value_or(cfg.eval.downsample_hz));
  const GoalTrajectory cut =
      truncate_liftoff(down, a.table_z.value_or(raw.table_z), a.z_thresh.value_or(cfg.eval.liftoff_threshold));
  save_trajectory(cut, a.out);
  std::cout << "frames: " << raw.size() << " -> " << down.size() << " (downsampled) -> " << cut.size()
            << " (from lift-off)\n";
}

// rollout ----------------------------------------------------------------------

struct RolloutArgs {
  Common common;
  std::string policy = "oracle";
  int episodes = 1;
  std::optional<std::uint64_t> seed;
  std::string log;
  std::string tool_path;
  std::string goals_path;
  bool easy_goals = false;
  bool no_dr = false;
};

void cmd_rollout(const RolloutArgs& a) {
  ExperimentConfig cfg = a.common.config();
  if (a.no_dr) cfg.dr.enabled = false;
  const std::uint64_t seed = a.seed.value_or(cfg.seed);
  const RobotModel model = a.common.robot();
  if (a.episodes <= 0) throw ValidationError("--episodes: must be > 0");
  if (a.easy_goals && !a.goals_path.empty()) throw ValidationError("--easy-goals and --goals are exclusive");
  std::optional<ToolSpec> fixed_tool;
  if (!a.tool_path.empty()) fixed_tool = import_tool(a.tool_path);
  std::vector<Pose> file_goals;
  if (!a.goals_path.empty()) file_goals = load_trajectory(a.goals_path).poses();
  make_policy(a.policy);  // validate the name before starting workers

  const auto summaries = run_batch(a.episodes, a.common.jobs, [&](int i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const ToolSpec tool = fixed_tool ? *fixed_tool : sample_tool(derive_seed(seed, "tool", idx));
    Env env(model, tool, cfg.env, cfg.control, cfg.reward, cfg.dr);
    const std::uint64_t episode_seed = derive_seed(seed, "episode", idx);
    EpisodeOptions opts;
    opts.eps = cfg.eval.eps;
    opts.step_budget = cfg.eval.step_budget;
    opts.goals = a.easy_goals ? easy_goal_chain(env, episode_seed) : file_goals;
    std::ostringstream log, csv;
    opts.log = &log;
    opts.reward_csv = &csv;
    auto policy = make_policy(a.policy);
    EpisodeSummary s = run_episode(env, *policy, episode_seed, opts);
    write_text_file_atomic(fs::path(a.log) / numbered("episode", i, ".jsonl"), log.str());
    write_text_file_atomic(fs::path(a.log) / numbered("reward", i, ".csv"), csv.str());
    return s;
  });

  json list = json::array();
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    json s = summaries[i].to_json();
    s["episode"] = i;
    list.push_back(s);
  }
  write_text_file_atomic(fs::path(a.log) / "summary.json",
                         json{{"policy", a.policy}, {"seed", seed}, {"episodes", list}}.dump(2) + "\n");
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    std::cout << "episode " << i << ": steps=" << s.steps << " reward=" << s.total_reward
              << " successes=" << s.success_events << " termination=" << s.termination;
    if (s.progress) std::cout << " progress=" << s.progress->progress << "%";
    std::cout << "\n";
  }
}

// plan ------------------------------------------------------------------------

struct PlanArgs {
  Common common;
  std::string mode = "trajopt";
  std::string goals, grab, report;
};

void cmd_plan(const PlanArgs& a) {
  const ExperimentConfig cfg = a.common.config();
  const RobotModel model = a.common.robot();
  const GoalTrajectory goals = load_trajectory(a.goals);
  const json grab = parse_json_file(a.grab);
  const Pose T_EO = pose_from_json(require_field(grab, "T_EO", "grab"), "grab.T_EO");

  TrajOptProblem problem;
  problem.targets = fixed_grasp_targets(T_EO, goals.poses());
  problem.obstacles = {HalfSpace{Vec3::UnitZ(), goals.table_z}};
  cfg.planner.apply(problem);
  problem.validate();

  TrajReport report = plan_dls(problem, model, model.home(), cfg.planner.ik_options());
  if (a.mode == "trajopt") {
    report = optimize_trajectory(problem, model, report.q);
  } else if (a.mode != "dls") {
    throw ValidationError("--mode: expected dls or trajopt");
  }
  json out = report.to_json();
  out["mode"] = a.mode;
  out["table_z"] = goals.table_z;
  write_text_file_atomic(a.report, out.dump(2) + "\n");
  std::cout << "mode=" << a.mode << " waypoints=" << report.q.size()
            << " min_collision_margin=" << report.min_collision_margin
            << " max_position_error=" << report.max_position_error
            << " max_rotation_error=" << report.max_rotation_error << "\n";
}

// eval ------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string goals;
  std::vector<std::string> rollouts;
  std::optional<double> eps;
  std::optional<int> budget;
  std::string report, csv;
};

void cmd_eval(const EvalArgs& a) {
  const ExperimentConfig cfg = a.common.config();
  const std::vector<Pose> goals = load_trajectory(a.goals).poses();
  const double eps = a.eps.value_or(cfg.eval.eps);
  const int budget_cfg = a.budget.value_or(cfg.eval.step_budget);
  const int budget = budget_cfg > 0 ? budget_cfg : std::numeric_limits<int>::max();

  std::vector<ProgressReport> reports(a.rollouts.size());
  parallel_for(static_cast<int>(a.rollouts.size()), a.common.jobs,
               [&](int i) { reports[i] = evaluate_progress(load_rollout(a.rollouts[i]), goals, eps, budget); });

  json list = json::array();
  double mean = 0.0;
  std::ostringstream csv;
  write_progress_csv_header(csv);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string name = fs::path(a.rollouts[i]).filename().string();
    json r = reports[i].to_json();
    r["rollout"] = name;
    list.push_back(r);
    mean += reports[i].progress / static_cast<double>(reports.size());
    write_progress_csv_row(csv, name, reports[i]);
    std::cout << name << ": " << reports[i].goals_reached << "/" << reports[i].goals_total << " goals, progress "
              << reports[i].progress << "%" << (reports[i].failure.empty() ? "" : ", failure " + reports[i].failure)
              << "\n";
  }
  write_text_file_atomic(a.report, json{{"eps", eps}, {"mean_progress", mean}, {"rollouts", list}}.dump(2) + "\n");
  if (!a.csv.empty()) write_text_file_atomic(a.csv, csv.str());
}

// report ----------------------------------------------------------------------

struct ReportArgs {
  std::string summary, out;
};

void cmd_report(const ReportArgs& a) {
  const json s = parse_json_file(a.summary);
  const json& episodes = require_field(s, "episodes", "summary");
  if (!episodes.is_array()) throw ValidationError("summary.episodes: expected an array");
  std::ostringstream csv;
  csv << "episode,seed,steps,total_reward,success_events,lifted_events,termination,progress\n";
  csv << std::setprecision(10);
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const json& e = episodes[i];
    const std::string ctx = "summary.episodes[" + std::to_string(i) + "]";
    csv << i << ',' << require_field(e, "seed", ctx).get<std::uint64_t>() << ','
        << require_field(e, "steps", ctx).get<int>() << ',' << require_number(e, "total_reward", ctx) << ','
        << require_field(e, "success_events", ctx).get<int>() << ','
        << require_field(e, "lifted_events", ctx).get<int>() << ','
        << require_field(e, "termination", ctx).get<std::string>() << ',';
    if (e.contains("progress")) csv << require_number(e["progress"], "progress", ctx + ".progress");
    csv << '\n';
  }
  write_text_file_atomic(a.out, csv.str());
  std::cout << "wrote " << episodes.size() << " rows to " << a.out << "\n";
}

// config ----------------------------------------------------------------------

struct ConfigArgs {
  Common common;
  std::string out;
};

void cmd_config(const ConfigArgs& a) {
  const std::string text = config_to_json(a.common.config()).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text_file_atomic(a.out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Procedural tools, goal-reaching environment, fixed-grasp planners and Task Progress evaluation"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate procedural handle-head tools");
  add_common(c_gen, gen.common, false, true);
  c_gen->add_option("--seed", gen.seed, "Master seed (default: config seed)");
  c_gen->add_option("--count", gen.count, "Number of tools");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--mesh-segments", gen.mesh_segments, "Capsule tessellation segments (0: no mesh)");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Downsample a goal trajectory and trim it to lift-off");
  add_common(c_pre, pre.common, false, false);
  c_pre->add_option("--in", pre.in, "Input trajectory (JSONL)")->required()->check(CLI::ExistingFile);
  c_pre->add_option("--out", pre.out, "Output trajectory (JSONL)")->required();
  c_pre->add_option("--hz", pre.hz, "Output rate (default: config eval.downsample_hz)");
  c_pre->add_option("--z-thresh", pre.z_thresh, "Lift-off height above the table, m");
  c_pre->add_option("--table-z", pre.table_z, "Table height override, m");

  RolloutArgs roll;
  auto* c_roll = app.add_subcommand("rollout", "Run scripted-policy episodes and log them");
  add_common(c_roll, roll.common, true, true);
  c_roll->add_option("--policy", roll.policy, "oracle, random or frozen")
      ->check(CLI::IsMember({"oracle", "random", "frozen"}));
  c_roll->add_option("--episodes", roll.episodes, "Number of episodes");
  c_roll->add_option("--seed", roll.seed, "Master seed (default: config seed)");
  c_roll->add_option("--log", roll.log, "Log directory")->required();
  c_roll->add_option("--tool", roll.tool_path, "Tool JSON (default: one sampled per episode)")
      ->check(CLI::ExistingFile);
  c_roll->add_option("--goals", roll.goals_path, "Goal sequence (JSONL) for closed-loop evaluation")
      ->check(CLI::ExistingFile);
  c_roll->add_flag("--easy-goals", roll.easy_goals, "Use a short, easily trackable goal chain per episode");
  c_roll->add_flag("--no-dr", roll.no_dr, "Disable domain randomization");

  PlanArgs plan;
  auto* c_plan = app.add_subcommand("plan", "Fixed-grasp arm plan for an object goal sequence");
  add_common(c_plan, plan.common, true, false);
  c_plan->add_option("--mode", plan.mode, "dls or trajopt")->check(CLI::IsMember({"dls", "trajopt"}));
  c_plan->add_option("--goals", plan.goals, "Object goals (JSONL)")->required()->check(CLI::ExistingFile);
  c_plan->add_option("--grab", plan.grab, "Grab transform JSON {\"T_EO\": [7]}")->required()->check(CLI::ExistingFile);
  c_plan->add_option("--report", plan.report, "Report JSON")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Closed-loop Task Progress of recorded rollouts");
  add_common(c_eval, ev.common, false, true);
  c_eval->add_option("--goals", ev.goals, "Goal sequence (JSONL)")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--rollout", ev.rollouts, "Episode log(s) (JSONL)")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--eps", ev.eps, "Success tolerance, m (default: config eval.eps)");
  c_eval->add_option("--budget", ev.budget, "Step budget (0: whole rollout)");
  c_eval->add_option("--report", ev.report, "Report JSON")->required();
  c_eval->add_option("--csv", ev.csv, "Optional CSV summary, one row per rollout");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Per-episode CSV from a rollout summary");
  c_rep->add_option("--summary", rep.summary, "summary.json from rollout")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--out", rep.out, "Output CSV")->required();

  ConfigArgs conf;
  auto* c_conf = app.add_subcommand("config", "Print the effective experiment config");
  add_common(c_conf, conf.common, false, false);
  c_conf->add_option("--out", conf.out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (c_gen->parsed()) cmd_gen(gen);
    if (c_pre->parsed()) cmd_preprocess(pre);
    if (c_roll->parsed()) cmd_rollout(roll);
    if (c_plan->parsed()) cmd_plan(plan);
    if (c_eval->parsed()) cmd_eval(ev);
    if (c_rep->parsed()) cmd_report(rep);
    if (c_conf->parsed()) cmd_config(conf);
  } catch (const toolforge::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const toolforge::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
