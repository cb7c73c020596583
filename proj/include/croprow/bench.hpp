// Seeded benchmark protocol: instance generation, timing harness, summary
// statistics and report files.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "croprow/dqn.hpp"
#include "croprow/env.hpp"
#include "croprow/planners.hpp"
#include "json.hpp"

namespace croprow::bench {

struct Instance {
  int id = 0;
  FieldSpec field;
  RobotState start;
  GoalSpec goal;

  PlanRequest request() const { return {field, start, goal}; }
};

/// Start uniform over corridors x interior y x orientation, goal uniform
/// over rows x interior y; draws whose start already satisfies the goal are
/// rejected and redrawn.
std::vector<Instance> generate_instances(std::uint64_t seed, int n, const FieldSpec& field);

struct NamedPlanner {
  PlannerId id;
  std::function<PlanResult(const PlanRequest&)> plan;
};

NamedPlanner heuristic_planner();
NamedPlanner astar_planner();
NamedPlanner dqn_planner(std::shared_ptr<const dqn::QNetwork> net);

struct BenchmarkRecord {
  int instance_id = 0;
  PlannerId planner = PlannerId::Heuristic;
  bool success = false;
  std::int64_t planning_time_ns = 1;
  double path_length_units = 0.0;
  int num_macro_actions = 0;
  std::optional<FailureReason> failure_reason;
};

struct BenchmarkOptions {
  int repetitions = 5;  // timed calls per (planner, instance); the median is kept
  int warmup = 1;       // untimed calls before timing
  int workers = 1;
};

/// Times every planner on every instance and verifies each plan by
/// simulation. Records are ordered by (instance_id, planner).
std::vector<BenchmarkRecord> run_benchmark(const std::vector<NamedPlanner>& planners,
                                           const std::vector<Instance>& instances,
                                           const BenchmarkOptions& options = {});

struct Distribution {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // smallest value >= q1 - 1.5 IQR
  double whisker_high = 0.0;  // largest value <= q3 + 1.5 IQR
  std::size_t outliers = 0;
  double min = 0.0;
  double max = 0.0;
};

/// Quantile with linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double p);
Distribution describe(std::vector<double> values);

struct PlannerSummary {
  PlannerId planner = PlannerId::Heuristic;
  std::size_t records = 0;
  double success_rate = 0.0;
  Distribution planning_time_ns;
  Distribution path_length;  // successful records only
};

struct SummaryStats {
  std::vector<PlannerSummary> planners;

  const PlannerSummary* find(PlannerId id) const;
};

SummaryStats summarize(const std::vector<BenchmarkRecord>& records);

struct ScalingRow {
  int num_rows = 0;
  std::size_t instances = 0;
  double mean_time_ns = 0.0;
  double median_time_ns = 0.0;
};

std::vector<ScalingRow> scaling_sweep(const NamedPlanner& planner, const std::vector<int>& sizes,
                                      std::uint64_t seed, int per_size = 1000,
                                      int corridor_len = 10, const BenchmarkOptions& options = {});

double spearman(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr const char* kRecordsCsvHeader =
    "instance_id,planner,success,planning_time_ns,path_length_units,num_macro_actions,failure_reason";

std::string records_csv(const std::vector<BenchmarkRecord>& records);
std::vector<BenchmarkRecord> parse_records_csv(const std::string& text);
nlohmann::json summary_json(const SummaryStats& stats);
std::string comparison_table(const SummaryStats& stats);
std::string scaling_table(PlannerId planner, const std::vector<ScalingRow>& rows);
std::string scaling_csv(PlannerId planner, const std::vector<ScalingRow>& rows);

struct ReportFiles {
  std::string records_csv;
  std::string summary_json;
  std::string table_txt;
};

/// Writes records.csv, summary.json and report.txt into `directory`.
ReportFiles emit_report(const SummaryStats& stats, const std::vector<BenchmarkRecord>& records,
                        const std::string& directory);

}  // namespace croprow::bench
