#include "croprow/dqn.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <sstream>

#include "croprow/route.hpp"

namespace croprow::dqn {

Action ActionSpace::action(int index) const {
  if (index < 0 || index >= size()) {
    throw DomainError("action index " + std::to_string(index) + " outside [0, " +
                      std::to_string(size()) + ")");
  }
  return {orientation_from_int(index / (max_rows + 1)), index % (max_rows + 1)};
}

ActionMask ActionSpace::mask(const RobotState& state, const FieldSpec& field) const {
  if (field.num_rows > max_rows) {
    throw DomainError("field has " + std::to_string(field.num_rows) +
                      " rows, action space supports " + std::to_string(max_rows));
  }
  ActionMask m(size(), 0);
  const bool on_headland = field.is_headland(state.y);
  for (int o = 0; o < 2; ++o) {
    const int base = o * (max_rows + 1);
    m[base + Action::kForward] = 1;
    m[base + Action::kBackward] = 1;
    if (!on_headland) continue;
    for (int corridor = 0; corridor < field.num_corridors(); ++corridor) {
      if (corridor != state.corridor) m[base + corridor + 2] = 1;
    }
  }
  return m;
}

QNetwork QNetwork::create(int max_rows, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{5};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(ActionSpace{max_rows}.size());
  return QNetwork{nn::Mlp<float>(sizes, rng), max_rows};
}

std::vector<float> QNetwork::q_values(const Observation& obs) const {
  nn::Mlp<float>::Matrix x(5, 1);
  for (int i = 0; i < 5; ++i) x(i, 0) = obs[i];
  const auto q = mlp.forward(x);
  return {q.data(), q.data() + q.size()};
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("replay buffer capacity must be positive");
  storage_.reserve(std::min<std::size_t>(capacity, 1 << 20));
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= storage_.size()) throw std::out_of_range("replay buffer index out of range");
  if (storage_.size() < capacity_) return storage_[i];
  return storage_[(next_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (storage_.empty()) throw DomainError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> dist(0, storage_.size() - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = dist(rng);
  return idx;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw DomainError("invalid train config: " + what); };
  if (rollout_steps <= 0) fail("rollout_steps must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (learning_rate <= 0.0) fail("learning_rate must be positive");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (buffer_capacity <= 0) fail("buffer_capacity must be positive");
  if (target_sync_interval <= 0) fail("target_sync_interval must be positive");
  if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0) {
    fail("epsilon bounds must lie in [0, 1]");
  }
  if (epsilon_decay_fraction <= 0.0 || epsilon_decay_fraction > 1.0) {
    fail("epsilon_decay_fraction must lie in (0, 1]");
  }
  if (learning_starts < 0) fail("learning_starts must be non-negative");
  if (train_frequency <= 0) fail("train_frequency must be positive");
  if (hidden_sizes.empty()) fail("at least one hidden layer is required");
}

double TrainConfig::epsilon_at(std::int64_t step, std::int64_t total_steps) const {
  const double decay_steps = std::max(1.0, epsilon_decay_fraction * static_cast<double>(total_steps));
  const double progress = std::min(1.0, static_cast<double>(step) / decay_steps);
  return epsilon_start + (epsilon_end - epsilon_start) * progress;
}

std::vector<int> parse_stage_rows(const std::string& text) {
  std::vector<int> rows;
  auto to_int_checked = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      throw DomainError("invalid stage specification '" + text + "'");
    }
    if (used != s.size()) throw DomainError("invalid stage specification '" + text + "'");
    return v;
  };
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const auto colon = text.find(':', range);
    const int first = to_int_checked(text.substr(0, range));
    const int last = to_int_checked(text.substr(range + 2, colon == std::string::npos
                                                               ? std::string::npos
                                                               : colon - range - 2));
    const int stride = colon == std::string::npos ? 1 : to_int_checked(text.substr(colon + 1));
    if (stride <= 0 || last < first) throw DomainError("invalid stage range '" + text + "'");
    for (int r = first; r <= last; r += stride) rows.push_back(r);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) rows.push_back(to_int_checked(item));
  }
  if (rows.empty()) throw DomainError("empty stage specification");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 2) throw DomainError("stage row counts must be >= 2");
    if (i > 0 && rows[i] <= rows[i - 1]) throw DomainError("stage row counts must increase");
  }
  return rows;
}

std::vector<int> default_curriculum_rows() { return parse_stage_rows("5..65:5"); }

int greedy_action(std::span<const float> q_values, const ActionMask& mask) {
  int best = -1;
  float best_q = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < q_values.size() && i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (best < 0 || q_values[i] > best_q) {
      best = static_cast<int>(i);
      best_q = q_values[i];
    }
  }
  if (best < 0) throw DomainError("action mask has no valid action");
  return best;
}

int select_action(std::span<const float> q_values, double epsilon, const ActionMask& mask,
                  Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw DomainError("epsilon must lie in [0, 1]");
  std::vector<int> valid;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) valid.push_back(static_cast<int>(i));
  }
  if (valid.empty()) throw DomainError("action mask has no valid action");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
    return valid[pick(rng)];
  }
  return greedy_action(q_values, mask);
}

int select_action(const QNetwork& net, const Observation& obs, double epsilon,
                  const ActionMask& mask, Rng& rng) {
  if (epsilon >= 1.0) {
    // Skip the forward pass; the result is uniform over valid actions anyway.
    const std::vector<float> unused(mask.size(), 0.0f);
    return select_action(unused, epsilon, mask, rng);
  }
  const auto q = net.q_values(obs);
  return select_action(q, epsilon, mask, rng);
}

namespace {

nn::Mlp<float>::Matrix stack(std::span<const Transition* const> batch, bool next) {
  nn::Mlp<float>::Matrix x(5, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& o = next ? batch[j]->next_obs : batch[j]->obs;
    for (int i = 0; i < 5; ++i) x(i, static_cast<Eigen::Index>(j)) = o[i];
  }
  return x;
}

}  // namespace

std::vector<float> td_target(std::span<const Transition* const> batch, const QNetwork& target_net,
                             double gamma) {
  if (batch.empty()) throw DomainError("td_target needs a non-empty batch");
  const auto q_next = target_net.mlp.forward(stack(batch, true));
  std::vector<float> targets(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Transition& t = *batch[j];
    if (t.done) {
      targets[j] = t.reward;
      continue;
    }
    float best = -std::numeric_limits<float>::infinity();
    for (Eigen::Index a = 0; a < q_next.rows(); ++a) {
      if (static_cast<std::size_t>(a) < t.next_mask.size() && t.next_mask[a]) {
        best = std::max(best, q_next(a, static_cast<Eigen::Index>(j)));
      }
    }
    if (best == -std::numeric_limits<float>::infinity()) best = 0.0f;
    targets[j] = static_cast<float>(t.reward + gamma * best);
  }
  return targets;
}

Trainer::Trainer(QNetwork net, TrainConfig config)
    : net_(std::move(net)),
      target_(net_),
      config_(std::move(config)),
      optimizer_(net_.mlp, nn::Adam<float>::Options{config_.learning_rate}),
      buffer_(static_cast<std::size_t>(config_.buffer_capacity)),
      rng_(config_.seed) {
  config_.validate();
}

std::optional<double> Trainer::train_step() {
  const auto batch_size = static_cast<std::size_t>(config_.batch_size);
  if (buffer_.size() < batch_size) return std::nullopt;

  const auto idx = buffer_.sample(batch_size, rng_);
  std::vector<const Transition*> batch;
  batch.reserve(batch_size);
  for (auto i : idx) batch.push_back(&buffer_.slot(i));

  const auto targets = td_target(batch, target_, config_.gamma);
  nn::Mlp<float>::Tape tape;
  const auto q = net_.mlp.forward(stack(batch, false), tape);

  nn::Mlp<float>::Matrix grad = nn::Mlp<float>::Matrix::Zero(q.rows(), q.cols());
  double loss = 0.0;
  const double n = static_cast<double>(batch_size);
  for (std::size_t j = 0; j < batch_size; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const double err = static_cast<double>(q(batch[j]->action, col)) - targets[j];
    loss += err * err / n;
    grad(batch[j]->action, col) = static_cast<float>(2.0 * err / n);
  }
  auto grads = net_.mlp.backward(tape, grad);
  nn::clip_global_norm<float>(grads, config_.max_grad_norm);
  optimizer_.step(net_.mlp, grads);
  return loss;
}

std::pair<RobotState, GoalSpec> sample_episode(const FieldSpec& field, Rng& rng) {
  std::uniform_int_distribution<int> corridor(0, field.num_corridors() - 1);
  std::uniform_int_distribution<int> y_any(-1, field.corridor_len);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<int> row(0, field.num_rows - 1);
  std::uniform_int_distribution<int> goal_y(0, field.corridor_len - 1);
  while (true) {
    RobotState start{corridor(rng), y_any(rng), orientation_from_int(bit(rng))};
    GoalSpec goal{row(rng), goal_y(rng)};
    if (!is_goal(start, field, goal)) return {start, goal};
  }
}

namespace {

std::uint64_t stage_seed(std::uint64_t seed, int rows) {
  // splitmix64 finaliser over (seed, rows)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(rows + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

StageResult train_stage(const CurriculumStage& stage, const TrainConfig& config,
                        const std::optional<QNetwork>& init, int max_rows,
                        const ProgressCallback& progress) {
  config.validate();
  if (stage.num_rows > max_rows) throw DomainError("stage exceeds the network's max_rows");
  if (stage.steps <= 0) throw DomainError("stage steps must be positive");

  TrainConfig stage_config = config;
  stage_config.seed = stage_seed(config.seed, stage.num_rows);
  Rng init_rng(stage_config.seed ^ 0xA5A5A5A5ULL);
  QNetwork net = init ? *init : QNetwork::create(max_rows, config.hidden_sizes, init_rng);
  if (net.max_rows != max_rows) throw DomainError("initial network has a different action space");

  Trainer trainer(std::move(net), stage_config);
  Rng& rng = trainer.rng();
  const ActionSpace space{max_rows};
  const FieldSpec field = FieldSpec::make(stage.num_rows, stage.corridor_len);

  StageResult result;
  auto [start, goal] = sample_episode(field, rng);
  CropRowEnv env(field, start, goal);
  double episode_return = 0.0;
  int episode = 0;

  for (std::int64_t t = 0; t < stage.steps; ++t) {
    const double eps = stage_config.epsilon_at(t, stage.steps);
    const Observation obs = env.observation();
    const ActionMask mask = space.mask(env.state(), field);
    const int a = select_action(trainer.online(), obs, eps, mask, rng);
    const auto tr = env.step(space.action(a));
    episode_return += tr.outcome.reward;

    trainer.buffer().push(Transition{obs, a, static_cast<float>(tr.outcome.reward),
                                     env.observation(), tr.outcome.done,
                                     space.mask(env.state(), field)});

    if (tr.outcome.done || tr.truncated) {
      result.log.push_back({stage.num_rows, episode++, episode_return, tr.outcome.done, env.steps()});
      episode_return = 0.0;
      std::tie(start, goal) = sample_episode(field, rng);
      env = CropRowEnv(field, start, goal);
    }

    const std::int64_t done_steps = t + 1;
    if (done_steps >= stage_config.learning_starts && done_steps % stage_config.train_frequency == 0) {
      if (auto loss = trainer.train_step()) result.losses.push_back(*loss);
    }
    if (done_steps % stage_config.target_sync_interval == 0) trainer.sync_target();
    if (progress && done_steps % 5000 == 0) progress(stage, done_steps);
  }

  result.net = trainer.online();
  return result;
}

CurriculumResult run_curriculum(const TrainConfig& config, const std::vector<int>& stage_rows,
                                int steps_per_stage, const ProgressCallback& progress) {
  if (stage_rows.empty()) throw DomainError("curriculum needs at least one stage");
  const int max_rows = *std::max_element(stage_rows.begin(), stage_rows.end());
  CurriculumResult result;
  result.stage_rows = stage_rows;
  std::optional<QNetwork> current;
  for (int rows : stage_rows) {
    CurriculumStage stage{rows, kTrainingSections, steps_per_stage};
    auto stage_result = train_stage(stage, config, current, max_rows, progress);
    current = stage_result.net;
    result.stages.push_back(std::move(stage_result));
  }
  result.net = *current;
  return result;
}

namespace {

struct Rollout {
  std::vector<Action> actions;
  bool success = false;
  double distance = 0.0;
  double episode_return = 0.0;
};

Rollout greedy_rollout(const QNetwork& net, const FieldSpec& field, const RobotState& start,
                       const GoalSpec& goal) {
  const ActionSpace space = net.space();
  CropRowEnv env(field, start, goal);
  Rollout r;
  while (!env.done() && !env.truncated()) {
    const auto q = net.q_values(env.observation());
    const Action a = space.action(greedy_action(q, space.mask(env.state(), field)));
    const auto tr = env.step(a);
    r.actions.push_back(a);
    r.distance += tr.outcome.distance_delta;
    r.episode_return += tr.outcome.reward;
  }
  r.success = env.done();
  return r;
}

int to_sections(int y, int corridor_len) {
  if (corridor_len == kTrainingSections) return y;
  if (y < 0) return -1;
  if (y >= corridor_len) return kTrainingSections;
  return route::snap_to_sections(y + 0.5, corridor_len);
}

}  // namespace

EvalResult evaluate_policy(const QNetwork& net, std::span<const PlanRequest> requests) {
  EvalResult result;
  double successes = 0.0;
  double returns = 0.0;
  for (const auto& req : requests) {
    const auto r = greedy_rollout(net, req.field, req.start, req.goal);
    successes += r.success ? 1.0 : 0.0;
    returns += r.episode_return;
  }
  result.episodes = requests.size();
  if (!requests.empty()) {
    result.success_rate = successes / static_cast<double>(requests.size());
    result.mean_return = returns / static_cast<double>(requests.size());
  }
  return result;
}

PlanResult plan_dqn(const QNetwork& net, const PlanRequest& request) {
  const auto t0 = std::chrono::steady_clock::now();
  request.validate();
  if (request.field.num_rows > net.max_rows) {
    throw DomainError("field has " + std::to_string(request.field.num_rows) +
                      " rows but the model was trained for at most " + std::to_string(net.max_rows));
  }
  FieldSpec field = request.field;
  RobotState start = request.start;
  GoalSpec goal = request.goal;
  if (field.corridor_len != kTrainingSections) {
    start.y = to_sections(start.y, field.corridor_len);
    goal.y = to_sections(goal.y, field.corridor_len);
    field = FieldSpec::make(field.num_rows, kTrainingSections);
  }

  const auto rollout = greedy_rollout(net, field, start, goal);
  PlanResult result;
  result.planner_id = PlannerId::DQN;
  result.raw_actions = rollout.actions;
  result.macro_actions = dedup(rollout.actions);
  result.path_length = rollout.distance;
  result.success = rollout.success;
  result.expansions = rollout.actions.size();
  result.planning_time = std::chrono::steady_clock::now() - t0;
  return result;
}

}  // namespace croprow::dqn
