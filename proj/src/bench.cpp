#include "croprow/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace croprow::bench {

std::vector<Instance> generate_instances(std::uint64_t seed, int n, const FieldSpec& field) {
  if (n < 1) throw DomainError("instance count must be >= 1");
  field.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> corridor(0, field.num_corridors() - 1);
  std::uniform_int_distribution<int> y(0, field.corridor_len - 1);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<int> row(0, field.num_rows - 1);

  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    Instance inst;
    inst.id = static_cast<int>(out.size());
    inst.field = field;
    inst.start = {corridor(rng), y(rng), orientation_from_int(bit(rng))};
    inst.goal = {row(rng), y(rng)};
    if (is_goal(inst.start, field, inst.goal)) continue;
    out.push_back(inst);
  }
  return out;
}

NamedPlanner heuristic_planner() { return {PlannerId::Heuristic, plan_heuristic}; }

NamedPlanner astar_planner() { return {PlannerId::GraphAStar, plan_astar}; }

NamedPlanner dqn_planner(std::shared_ptr<const dqn::QNetwork> net) {
  return {PlannerId::DQN,
          [net = std::move(net)](const PlanRequest& req) { return dqn::plan_dqn(*net, req); }};
}

namespace {

BenchmarkRecord measure(const NamedPlanner& planner, const Instance& inst,
                        const BenchmarkOptions& options) {
  using Clock = std::chrono::steady_clock;
  BenchmarkRecord rec;
  rec.instance_id = inst.id;
  rec.planner = planner.id;
  const PlanRequest req = inst.request();

  std::optional<PlanResult> plan;
  std::vector<std::int64_t> times;
  try {
    for (int i = 0; i < options.warmup; ++i) plan = planner.plan(req);
    for (int i = 0; i < std::max(1, options.repetitions); ++i) {
      const auto t0 = Clock::now();
      plan = planner.plan(req);
      const auto t1 = Clock::now();
      times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
  } catch (const std::exception&) {
    rec.success = false;
    rec.failure_reason = FailureReason::PlannerException;
    rec.planning_time_ns = times.empty() ? 1 : std::max<std::int64_t>(1, times.back());
    return rec;
  }

  std::sort(times.begin(), times.end());
  const std::size_t m = times.size();
  const std::int64_t median = m % 2 ? times[m / 2] : (times[m / 2 - 1] + times[m / 2]) / 2;
  rec.planning_time_ns = std::max<std::int64_t>(1, median);
  rec.num_macro_actions = static_cast<int>(plan->macro_actions.size());

  // Success is decided by replaying the actions, never by the planner's claim.
  const auto sim = simulate(inst.field, inst.start, inst.goal, plan->raw_actions);
  rec.success = sim.success;
  rec.path_length_units = sim.total_distance;
  if (!sim.success) rec.failure_reason = sim.failure.value_or(FailureReason::ActionsExhausted);
  return rec;
}

}  // namespace

std::vector<BenchmarkRecord> run_benchmark(const std::vector<NamedPlanner>& planners,
                                           const std::vector<Instance>& instances,
                                           const BenchmarkOptions& options) {
  if (planners.empty()) throw DomainError("run_benchmark needs at least one planner");
  const std::size_t total = instances.size();
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(total)));

  std::vector<std::vector<BenchmarkRecord>> partial(static_cast<std::size_t>(workers));
  auto run_range = [&](int w) {
    for (std::size_t i = static_cast<std::size_t>(w); i < total; i += static_cast<std::size_t>(workers)) {
      for (const auto& p : planners) partial[w].push_back(measure(p, instances[i], options));
    }
  };
  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run_range, w);
  }

  std::vector<BenchmarkRecord> records;
  records.reserve(total * planners.size());
  for (auto& part : partial) records.insert(records.end(), part.begin(), part.end());
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.instance_id != b.instance_id ? a.instance_id < b.instance_id : a.planner < b.planner;
  });
  return records;
}

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Distribution describe(std::vector<double> values) {
  Distribution d;
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  d.n = values.size();
  d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(d.n);
  d.median = quantile(values, 0.5);
  d.q1 = quantile(values, 0.25);
  d.q3 = quantile(values, 0.75);
  d.min = values.front();
  d.max = values.back();
  const double iqr = d.q3 - d.q1;
  const double low_fence = d.q1 - 1.5 * iqr;
  const double high_fence = d.q3 + 1.5 * iqr;
  d.whisker_low = d.max;
  d.whisker_high = d.min;
  for (double v : values) {
    if (v < low_fence || v > high_fence) {
      ++d.outliers;
    } else {
      d.whisker_low = std::min(d.whisker_low, v);
      d.whisker_high = std::max(d.whisker_high, v);
    }
  }
  return d;
}

const PlannerSummary* SummaryStats::find(PlannerId id) const {
  for (const auto& p : planners) {
    if (p.planner == id) return &p;
  }
  return nullptr;
}

SummaryStats summarize(const std::vector<BenchmarkRecord>& records) {
  SummaryStats stats;
  for (PlannerId id : {PlannerId::Heuristic, PlannerId::GraphAStar, PlannerId::DQN}) {
    std::vector<double> times;
    std::vector<double> lengths;
    std::size_t successes = 0;
    for (const auto& r : records) {
      if (r.planner != id) continue;
      times.push_back(static_cast<double>(r.planning_time_ns));
      if (r.success) {
        ++successes;
        lengths.push_back(r.path_length_units);
      }
    }
    if (times.empty()) continue;
    PlannerSummary s;
    s.planner = id;
    s.records = times.size();
    s.success_rate = static_cast<double>(successes) / static_cast<double>(times.size());
    s.planning_time_ns = describe(std::move(times));
    s.path_length = describe(std::move(lengths));
    stats.planners.push_back(s);
  }
  return stats;
}

std::vector<ScalingRow> scaling_sweep(const NamedPlanner& planner, const std::vector<int>& sizes,
                                      std::uint64_t seed, int per_size, int corridor_len,
                                      const BenchmarkOptions& options) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw DomainError("scaling sizes must be ascending");
  }
  std::vector<ScalingRow> rows;
  for (int r : sizes) {
    const auto instances = generate_instances(seed, per_size, FieldSpec::make(r, corridor_len));
    const auto records = run_benchmark({planner}, instances, options);
    std::vector<double> times;
    for (const auto& rec : records) times.push_back(static_cast<double>(rec.planning_time_ns));
    const auto d = describe(times);
    rows.push_back({r, records.size(), d.mean, d.median});
  }
  return rows;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman needs paired samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace croprow::bench
