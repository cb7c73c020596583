// croprow: command-line entry point for planning, benchmarking, DQN
// training, replay and waypoint export.
//
// Exit codes: 0 success, 1 usage or input error, 2 planning failure.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "croprow/bench.hpp"
#include "croprow/dqn.hpp"
#include "croprow/env.hpp"
#include "croprow/planners.hpp"
#include "croprow/route.hpp"
#include "json.hpp"

namespace {

using namespace croprow;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPlanningFailure = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid number '" + text + "' in " + what);
  }
}

int parse_int(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v != static_cast<int>(v)) throw UsageError("expected an integer in " + what + ", got " + text);
  return static_cast<int>(v);
}

RobotState parse_start(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw UsageError("--start expects x,y,o (e.g. 1.5,2,0)");
  RobotState s;
  s.corridor = corridor_index_from_x(parse_number(parts[0], "--start"));
  s.y = parse_int(parts[1], "--start");
  s.orientation = orientation_from_int(parse_int(parts[2], "--start"));
  return s;
}

GoalSpec parse_goal(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw UsageError("--goal expects row,y (e.g. 2,4)");
  return {parse_int(parts[0], "--goal"), parse_int(parts[1], "--goal")};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

nlohmann::json actions_json(const std::vector<Action>& actions) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : actions) j.push_back({to_int(a.orientation), a.move});
  return j;
}

std::string render(const FieldSpec& field, const RobotState& robot, const GoalSpec& goal) {
  std::string out;
  const int width = 2 * field.num_rows - 1;
  for (int y = field.corridor_len; y >= -1; --y) {
    std::string line(static_cast<std::size_t>(width), field.is_headland(y) ? '=' : '.');
    if (!field.is_headland(y)) {
      for (int r = 0; r < field.num_rows; ++r) line[2 * r] = '#';
      if (y == goal.y) line[2 * goal.row] = '*';
    }
    if (y == robot.y) {
      line[2 * robot.corridor + 1] = robot.orientation == Orientation::Up ? '^' : 'v';
    }
    char label[16];
    std::snprintf(label, sizeof(label), "%3d ", y);
    out += label + line + "\n";
  }
  return out;
}

struct Globals {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string format = "csv";
};

// ---------------------------------------------------------------- plan

struct PlanOptions {
  std::string planner = "heuristic";
  int rows = 10;
  int len = 10;
  std::string start;
  std::string goal;
  std::string model;
  std::string out;
};

int cmd_plan(const PlanOptions& o, const Globals& g) {
  const PlannerId id = planner_id_from_string(o.planner);
  PlanRequest req{FieldSpec::make(o.rows, o.len), parse_start(o.start), parse_goal(o.goal)};
  req.validate();

  PlanResult result;
  switch (id) {
    case PlannerId::Heuristic: result = plan_heuristic(req); break;
    case PlannerId::GraphAStar: result = plan_astar(req); break;
    case PlannerId::DQN: {
      if (o.model.empty()) throw UsageError("--planner dqn requires --model");
      const auto ckpt = dqn::load_checkpoint(o.model);
      result = dqn::plan_dqn(ckpt.net, req);
      break;
    }
  }
  const auto sim = simulate(req.field, req.start, req.goal, result.raw_actions);

  const nlohmann::json plan_json = {
      {"planner", to_string(id)},
      {"field", {{"num_rows", req.field.num_rows}, {"corridor_len", req.field.corridor_len}}},
      {"start", {{"x", req.start.corridor_x()}, {"y", req.start.y},
                 {"orientation", to_int(req.start.orientation)}}},
      {"goal", {{"row", req.goal.row}, {"y", req.goal.y}}},
      {"macro_actions", actions_json(result.macro_actions)},
      {"raw_actions", actions_json(result.raw_actions)},
      {"path_length", sim.total_distance},
      {"planning_time_ns", result.planning_time.count()},
      {"success", sim.success}};

  if (g.format == "json") {
    std::cout << plan_json.dump(2) << "\n";
  } else {
    std::cout << "planner: " << to_string(id) << "\n"
              << "macro_actions: " << format_actions(result.macro_actions) << "\n"
              << "path_length: " << sim.total_distance << "\n"
              << "planning_time_ms: " << result.planning_time.count() / 1e6 << "\n"
              << "success: " << (sim.success ? "true" : "false") << "\n";
  }
  if (!o.out.empty()) write_text(o.out, plan_json.dump(2) + "\n");
  if (!sim.success) {
    std::cerr << "planning failed: " << sim.message << "\n";
    return kExitPlanningFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
  std::string planners = "heuristic,astar";
  int n = 10000;
  int rows = 65;
  int len = 10;
  std::string model;
  std::string scaling;
  int per_size = 1000;
  int repetitions = 5;
  int warmup = 1;
  int workers = 1;
};

int cmd_bench(const BenchOptions& o, const Globals& g) {
  std::shared_ptr<const dqn::QNetwork> net;
  std::vector<bench::NamedPlanner> planners;
  for (const auto& name : split(o.planners, ',')) {
    switch (planner_id_from_string(name)) {
      case PlannerId::Heuristic: planners.push_back(bench::heuristic_planner()); break;
      case PlannerId::GraphAStar: planners.push_back(bench::astar_planner()); break;
      case PlannerId::DQN:
        if (o.model.empty()) throw UsageError("planner dqn requires --model");
        if (!net) net = std::make_shared<dqn::QNetwork>(dqn::load_checkpoint(o.model).net);
        planners.push_back(bench::dqn_planner(net));
        break;
    }
  }
  if (planners.empty()) throw UsageError("--planners must name at least one planner");
  const bench::BenchmarkOptions options{o.repetitions, o.warmup, o.workers};

  if (!o.scaling.empty()) {
    std::vector<int> sizes;
    for (const auto& s : split(o.scaling, ',')) sizes.push_back(parse_int(s, "--scaling"));
    std::string csv;
    for (const auto& p : planners) {
      const auto rows = bench::scaling_sweep(p, sizes, g.seed, o.per_size, o.len, options);
      std::cout << bench::scaling_table(p.id, rows);
      const auto part = bench::scaling_csv(p.id, rows);
      csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
    }
    const fs::path file = fs::path(g.output_dir) / "scaling.csv";
    write_text(file, csv);
    std::cerr << "wrote " << file.string() << "\n";
    return kExitOk;
  }

  const auto instances = bench::generate_instances(g.seed, o.n, FieldSpec::make(o.rows, o.len));
  std::cerr << "benchmarking " << planners.size() << " planner(s) on " << instances.size()
            << " instances\n";
  const auto records = bench::run_benchmark(planners, instances, options);
  const auto stats = bench::summarize(records);
  const auto files = bench::emit_report(stats, records, g.output_dir);
  if (g.format == "json") {
    std::cout << bench::summary_json(stats).dump(2) << "\n";
  } else {
    std::cout << bench::comparison_table(stats);
  }
  std::cerr << "wrote " << files.records_csv << ", " << files.summary_json << ", "
            << files.table_txt << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string stages = "5";
  int steps = 60000;
  std::string out = "model.ckpt";
  std::string log;
  double learning_rate = 1e-4;
  double gamma = 0.99;
  int batch = 64;
  int train_frequency = 4;
  int target_sync = 1000;
  int learning_starts = 1000;
  int buffer = 100'000;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.5;
  double max_grad_norm = 10.0;
  std::string hidden = "1024,1024,1024";
  int eval = 0;
};

int cmd_train(const TrainOptions& o, const Globals& g) {
  dqn::TrainConfig cfg;
  cfg.seed = g.seed;
  cfg.rollout_steps = o.steps;
  cfg.learning_rate = o.learning_rate;
  cfg.gamma = o.gamma;
  cfg.batch_size = o.batch;
  cfg.train_frequency = o.train_frequency;
  cfg.target_sync_interval = o.target_sync;
  cfg.learning_starts = o.learning_starts;
  cfg.buffer_capacity = o.buffer;
  cfg.epsilon_end = o.epsilon_end;
  cfg.epsilon_decay_fraction = o.epsilon_fraction;
  cfg.max_grad_norm = o.max_grad_norm;
  cfg.hidden_sizes.clear();
  for (const auto& h : split(o.hidden, ',')) cfg.hidden_sizes.push_back(parse_int(h, "--hidden"));
  cfg.validate();
  const auto rows = dqn::parse_stage_rows(o.stages);

  std::cerr << "training " << rows.size() << " stage(s), " << o.steps << " steps each\n";
  const auto result = dqn::run_curriculum(cfg, rows, o.steps,
                                          [](const dqn::CurriculumStage& s, std::int64_t step) {
                                            std::cerr << "  stage " << s.num_rows << " rows: step "
                                                      << step << "/" << s.steps << "\n";
                                          });

  dqn::Checkpoint ckpt{result.net, cfg, rows, rows.back(), g.seed};
  fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  dqn::save_checkpoint(out.string(), ckpt);

  std::string log = "stage_rows,episode,return,success,length\n";
  for (const auto& stage : result.stages) {
    for (const auto& e : stage.log) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%d,%d\n", e.stage_rows, e.episode,
                    e.episode_return, e.success ? 1 : 0, e.length);
      log += buf;
    }
  }
  const std::string log_path = o.log.empty() ? o.out + ".log.csv" : o.log;
  write_text(log_path, log);
  std::cout << "checkpoint: " << out.string() << "\n" << "training_log: " << log_path << "\n";

  if (o.eval > 0) {
    const auto instances = bench::generate_instances(g.seed + 1'000'003, o.eval,
                                                     FieldSpec::make(rows.back(), dqn::kTrainingSections));
    std::vector<PlanRequest> reqs;
    for (const auto& i : instances) reqs.push_back(i.request());
    const auto eval = dqn::evaluate_policy(result.net, reqs);
    std::cout << "greedy_success_rate: " << eval.success_rate << " over " << eval.episodes
              << " held-out episodes\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  int rows = 10;
  int len = 10;
  std::string start;
  std::string goal;
  std::string actions = "[]";
  bool quiet = false;
};

int cmd_simulate(const SimulateOptions& o) {
  const FieldSpec field = FieldSpec::make(o.rows, o.len);
  const RobotState start = parse_start(o.start);
  const GoalSpec goal = parse_goal(o.goal);
  const auto actions = parse_actions(o.actions);
  const auto result = simulate(field, start, goal, actions);

  if (!o.quiet) {
    std::cout << "step 0 (start)\n" << render(field, start, goal);
    CropRowEnv env(field, start, goal);
    for (std::size_t i = 0; i < actions.size() && !env.done(); ++i) {
      if (result.failed_step && i >= *result.failed_step) break;
      if (env.steps() >= field.max_steps) break;
      env.step(actions[i]);
      std::cout << "step " << i + 1 << " " << format_actions({actions[i]}) << "\n"
                << render(field, env.state(), goal);
    }
  }
  if (result.success) {
    std::cout << "verdict: success distance=" << result.total_distance
              << " reward=" << result.total_reward << " steps=" << result.steps << "\n";
    return kExitOk;
  }
  std::cout << "verdict: failure";
  if (result.failed_step) std::cout << " at step " << *result.failed_step;
  std::cout << " (" << (result.failure ? to_string(*result.failure) : "unknown") << "): "
            << result.message << " distance=" << result.total_distance << "\n";
  return kExitPlanningFailure;
}

// ---------------------------------------------------------------- export

struct ExportOptions {
  std::string plan_json;
  std::string geometry;
  std::string format = "both";
  std::string start;
  std::string goal;
  int rows = 0;
  std::string out = "waypoints";
};

int cmd_export(const ExportOptions& o, const Globals& g) {
  const route::FieldGeometry geometry = route::load_geometry(o.geometry);
  const auto doc = nlohmann::json::parse(read_text(o.plan_json));

  std::vector<Action> macros;
  RobotState start;
  route::RouteContext ctx;
  if (doc.is_array()) {
    macros = parse_actions(doc.dump());
    if (o.start.empty() || o.rows == 0) {
      throw UsageError("a bare action list needs --start and --rows");
    }
    start = parse_start(o.start);
    ctx.num_rows = o.rows;
    if (!o.goal.empty()) ctx.goal = parse_goal(o.goal);
  } else {
    macros = parse_actions(doc.at("macro_actions").dump());
    const auto& field = doc.at("field");
    if (field.at("corridor_len").get<int>() != route::kSections) {
      throw UsageError("waypoint export needs a plan on the 10-section corridor abstraction");
    }
    ctx.num_rows = field.at("num_rows").get<int>();
    const auto& s = doc.at("start");
    start = {corridor_index_from_x(s.at("x").get<double>()), s.at("y").get<int>(),
             orientation_from_int(s.at("orientation").get<int>())};
    ctx.goal = GoalSpec{doc.at("goal").at("row").get<int>(), doc.at("goal").at("y").get<int>()};
  }

  const auto path = route::compile(macros, start, geometry, ctx);
  const fs::path base = fs::path(g.output_dir) / o.out;
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  if (o.format == "csv" || o.format == "both") {
    route::write_csv(path, geometry, base.string() + ".csv");
    std::cout << "wrote " << base.string() << ".csv\n";
  }
  if (o.format == "geojson" || o.format == "both") {
    route::write_geojson(path, geometry, base.string() + ".geojson");
    std::cout << "wrote " << base.string() << ".geojson\n";
  }
  std::cout << "points: " << path.points.size() << " length_m: " << path.polyline_length() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crop-row sampling-point planners, benchmark harness and waypoint export"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals globals;
  app.add_option("--seed", globals.seed, "Random seed")->capture_default_str();
  app.add_option("--output-dir", globals.output_dir, "Directory for generated files")
      ->capture_default_str();
  app.add_option("--format", globals.format, "Machine-readable stdout format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  PlanOptions plan;
  auto* plan_cmd = app.add_subcommand("plan", "Plan one instance and print the macro actions");
  plan_cmd->add_option("--planner", plan.planner)
      ->check(CLI::IsMember({"heuristic", "astar", "dqn"}))
      ->capture_default_str();
  plan_cmd->add_option("--rows", plan.rows, "Number of crop rows")->capture_default_str();
  plan_cmd->add_option("--len", plan.len, "Corridor length in units")->capture_default_str();
  plan_cmd->add_option("--start", plan.start, "Start x,y,o (x half-integer, o 0=up 1=down)")
      ->required();
  plan_cmd->add_option("--goal", plan.goal, "Goal row,y")->required();
  plan_cmd->add_option("--model", plan.model, "DQN checkpoint");
  plan_cmd->add_option("--out", plan.out, "Also write the plan as JSON to this file");

  BenchOptions bench_opts;
  auto* bench_cmd = app.add_subcommand("bench", "Run the seeded planner benchmark");
  bench_cmd->add_option("--planners", bench_opts.planners, "Comma-separated planners")
      ->capture_default_str();
  bench_cmd->add_option("--n", bench_opts.n, "Instance count")->capture_default_str();
  bench_cmd->add_option("--rows", bench_opts.rows)->capture_default_str();
  bench_cmd->add_option("--len", bench_opts.len)->capture_default_str();
  bench_cmd->add_option("--model", bench_opts.model, "DQN checkpoint");
  bench_cmd->add_option("--scaling", bench_opts.scaling, "Comma-separated row counts for a sweep");
  bench_cmd->add_option("--per-size", bench_opts.per_size, "Instances per scaling size")
      ->capture_default_str();
  bench_cmd->add_option("--reps", bench_opts.repetitions, "Timed repetitions per call")
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bench_opts.warmup)->capture_default_str();
  bench_cmd->add_option("--workers", bench_opts.workers)->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train the DQN with a curriculum");
  train_cmd->add_option("--stages", train.stages, "\"5..65:5\", \"5,10\" or \"5\"")
      ->capture_default_str();
  train_cmd->add_option("--steps", train.steps, "Environment steps per stage")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->capture_default_str();
  train_cmd->add_option("--log", train.log, "Training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--lr", train.learning_rate)->capture_default_str();
  train_cmd->add_option("--gamma", train.gamma)->capture_default_str();
  train_cmd->add_option("--batch", train.batch)->capture_default_str();
  train_cmd->add_option("--train-freq", train.train_frequency)->capture_default_str();
  train_cmd->add_option("--target-sync", train.target_sync)->capture_default_str();
  train_cmd->add_option("--learning-starts", train.learning_starts)->capture_default_str();
  train_cmd->add_option("--buffer", train.buffer, "Replay capacity")->capture_default_str();
  train_cmd->add_option("--eps-end", train.epsilon_end)->capture_default_str();
  train_cmd->add_option("--eps-fraction", train.epsilon_fraction,
                        "Fraction of stage steps over which epsilon decays")
      ->capture_default_str();
  train_cmd->add_option("--max-grad-norm", train.max_grad_norm)->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden, "Hidden layer widths")->capture_default_str();
  train_cmd->add_option("--eval", train.eval, "Held-out greedy evaluation episodes")
      ->capture_default_str();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Replay an action list and render it");
  sim_cmd->add_option("--rows", sim.rows)->capture_default_str();
  sim_cmd->add_option("--len", sim.len)->capture_default_str();
  sim_cmd->add_option("--start", sim.start)->required();
  sim_cmd->add_option("--goal", sim.goal)->required();
  sim_cmd->add_option("--actions", sim.actions, "JSON list [[o,m],...]")->capture_default_str();
  sim_cmd->add_flag("--quiet", sim.quiet, "Only print the verdict");

  ExportOptions exp;
  auto* export_cmd = app.add_subcommand("export", "Compile a plan into metric waypoints");
  export_cmd->add_option("--plan-json", exp.plan_json, "Plan JSON (from plan --out) or [[o,m],...]")
      ->required();
  export_cmd->add_option("--geometry", exp.geometry, "Geometry key=value file")->required();
  export_cmd->add_option("--format", exp.format)
      ->check(CLI::IsMember({"csv", "geojson", "both"}))
      ->capture_default_str();
  export_cmd->add_option("--start", exp.start, "Start x,y,o for a bare action list");
  export_cmd->add_option("--goal", exp.goal, "Goal row,y for a bare action list");
  export_cmd->add_option("--rows", exp.rows, "Row count for a bare action list");
  export_cmd->add_option("--out", exp.out, "Output file stem")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string active = app.get_subcommands().front()->get_name() + ".";
  std::istringstream resolved(app.config_to_str(true, false));
  std::cerr << "# resolved configuration\n";
  for (std::string line; std::getline(resolved, line);) {
    const auto key = line.substr(0, line.find('='));
    if (key.find('.') == std::string::npos || key.rfind(active, 0) == 0) std::cerr << line << '\n';
  }

  try {
    if (*plan_cmd) return cmd_plan(plan, globals);
    if (*bench_cmd) return cmd_bench(bench_opts, globals);
    if (*train_cmd) return cmd_train(train, globals);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*export_cmd) return cmd_export(exp, globals);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const route::RouteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
