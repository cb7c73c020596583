#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "croprow/bench.hpp"

namespace croprow::bench {
namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

nlohmann::json distribution_json(const Distribution& d) {
  return {{"n", d.n},           {"mean", d.mean},
          {"median", d.median}, {"q1", d.q1},
          {"q3", d.q3},         {"whisker_low", d.whisker_low},
          {"whisker_high", d.whisker_high}, {"outliers", d.outliers},
          {"min", d.min},       {"max", d.max}};
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct Reference {
  PlannerId planner;
  const char* label;
  const char* time;
  const char* success;
};

constexpr Reference kReference[] = {
    {PlannerId::DQN, "DQN model", "2.78 ms", "96.33%"},
    {PlannerId::Heuristic, "Heuristic Search", "0.28 ms", "100%"},
    {PlannerId::GraphAStar, "Graph Search (A*)", "1.40 ms", "99.13%"},
};

}  // namespace

std::string records_csv(const std::vector<BenchmarkRecord>& records) {
  std::string out = std::string(kRecordsCsvHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.instance_id) + "," + to_string(r.planner) + "," +
           (r.success ? "true" : "false") + "," + std::to_string(r.planning_time_ns) + "," +
           num(r.path_length_units) + "," + std::to_string(r.num_macro_actions) + "," +
           (r.failure_reason ? to_string(*r.failure_reason) : "") + "\n";
  }
  return out;
}

std::vector<BenchmarkRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRecordsCsvHeader) {
    throw DomainError("unexpected benchmark CSV header");
  }
  std::vector<BenchmarkRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 7) throw DomainError("malformed benchmark CSV row: " + line);
    BenchmarkRecord r;
    r.instance_id = std::stoi(cells[0]);
    r.planner = planner_id_from_string(cells[1]);
    r.success = cells[2] == "true";
    r.planning_time_ns = std::stoll(cells[3]);
    r.path_length_units = std::stod(cells[4]);
    r.num_macro_actions = std::stoi(cells[5]);
    if (!cells[6].empty()) r.failure_reason = failure_reason_from_string(cells[6]);
    records.push_back(r);
  }
  return records;
}

nlohmann::json summary_json(const SummaryStats& stats) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& p : stats.planners) {
    j[to_string(p.planner)] = {
        {"records", p.records},
        {"success_rate", p.success_rate},
        {"mean_time_ns", p.planning_time_ns.mean},
        {"median_time_ns", p.planning_time_ns.median},
        {"q1", p.planning_time_ns.q1},
        {"q3", p.planning_time_ns.q3},
        {"outliers", p.planning_time_ns.outliers},
        {"mean_path_length", p.path_length.mean},
        {"planning_time_ns", distribution_json(p.planning_time_ns)},
        {"path_length", distribution_json(p.path_length)},
    };
  }
  return j;
}

std::string comparison_table(const SummaryStats& stats) {
  std::ostringstream out;
  out << "Planner     Records  Success   Mean time   Median time  Mean path  Time outliers\n";
  out << "----------  -------  --------  ----------  -----------  ---------  -------------\n";
  for (const auto& p : stats.planners) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s  %7zu  %7.2f%%  %7.4f ms  %8.4f ms  %9.3f  %13zu\n",
                  to_string(p.planner).c_str(), p.records, 100.0 * p.success_rate,
                  p.planning_time_ns.mean / 1e6, p.planning_time_ns.median / 1e6,
                  p.path_length.mean, p.planning_time_ns.outliers);
    out << line;
  }
  out << "\nReference values (external hardware; informational, not asserted):\n";
  for (const auto& ref : kReference) {
    out << "  " << ref.label << ": avg planning time " << ref.time << ", success rate "
        << ref.success << "\n";
  }
  return out.str();
}

std::string scaling_table(PlannerId planner, const std::vector<ScalingRow>& rows) {
  std::ostringstream out;
  out << "Scaling (" << to_string(planner) << ")\n";
  out << "  rows  instances   mean time    median time\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "  %4d  %9zu  %9.4f ms  %9.4f ms\n", r.num_rows, r.instances,
                  r.mean_time_ns / 1e6, r.median_time_ns / 1e6);
    out << line;
  }
  return out.str();
}

std::string scaling_csv(PlannerId planner, const std::vector<ScalingRow>& rows) {
  std::string out = "planner,num_rows,instances,mean_time_ns,median_time_ns\n";
  for (const auto& r : rows) {
    out += to_string(planner) + "," + std::to_string(r.num_rows) + "," +
           std::to_string(r.instances) + "," + fixed(r.mean_time_ns, 1) + "," +
           fixed(r.median_time_ns, 1) + "\n";
  }
  return out;
}

ReportFiles emit_report(const SummaryStats& stats, const std::vector<BenchmarkRecord>& records,
                        const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + directory + ": " + ec.message());
  const fs::path dir(directory);
  ReportFiles files{(dir / "records.csv").string(), (dir / "summary.json").string(),
                    (dir / "report.txt").string()};
  write_text(files.records_csv, records_csv(records));
  write_text(files.summary_json, summary_json(stats).dump(2) + "\n");
  write_text(files.table_txt, comparison_table(stats));
  return files;
}

}  // namespace croprow::bench
