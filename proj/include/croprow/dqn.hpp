// Deep Q-learning for the crop-row world: Q-network, replay buffer, Bellman
// targets, epsilon-greedy rollouts, curriculum training and a policy-backed
// planner.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "croprow/env.hpp"
#include "croprow/mlp.hpp"
#include "croprow/planners.hpp"

namespace croprow::dqn {

using Observation = std::array<float, 5>;
using ActionMask = std::vector<std::uint8_t>;
using Rng = std::mt19937_64;

/// Flat action indexing shared by every curriculum stage. The space is sized
/// for the largest field; index = orientation * (max_rows + 1) + move.
struct ActionSpace {
  int max_rows = 0;

  int size() const { return 2 * (max_rows + 1); }
  int index(const Action& a) const { return to_int(a.orientation) * (max_rows + 1) + a.move; }
  Action action(int index) const;

  /// Vertical moves are always valid. Switches are valid only on a headland,
  /// only to corridors that exist in `field` and never to the current one.
  ActionMask mask(const RobotState& state, const FieldSpec& field) const;
};

struct QNetwork {
  nn::Mlp<float> mlp;
  int max_rows = 0;

  static QNetwork create(int max_rows, const std::vector<int>& hidden, Rng& rng);

  ActionSpace space() const { return {max_rows}; }
  std::vector<float> q_values(const Observation& obs) const;

  friend bool operator==(const QNetwork&, const QNetwork&) = default;
};

struct Transition {
  Observation obs{};
  int action = 0;
  float reward = 0.0f;
  Observation next_obs{};
  bool done = false;  // terminal (goal reached); time-limit truncation is not terminal
  ActionMask next_mask;
};

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }

  /// i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  /// Uniform sampling with replacement over stored transitions.
  std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const;
  const Transition& slot(std::size_t s) const { return storage_[s]; }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t next_ = 0;
  std::uint64_t pushed_ = 0;
};

struct TrainConfig {
  int rollout_steps = 100'000;  // default per-stage step count
  double gamma = 0.99;
  double learning_rate = 1e-4;
  int batch_size = 64;
  int buffer_capacity = 100'000;
  int target_sync_interval = 1'000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;
  int learning_starts = 1'000;
  int train_frequency = 4;
  double max_grad_norm = 10.0;
  std::vector<int> hidden_sizes{1024, 1024, 1024};
  std::uint64_t seed = 1;

  void validate() const;
  double epsilon_at(std::int64_t step, std::int64_t total_steps) const;
};

struct CurriculumStage {
  int num_rows = 5;
  int corridor_len = 10;
  int steps = 100'000;
};

/// Parses "5..65:5" (range with stride), "5,10,20" or "5" into row counts.
std::vector<int> parse_stage_rows(const std::string& text);

/// Row counts 5, 10, ..., 65.
std::vector<int> default_curriculum_rows();

int select_action(std::span<const float> q_values, double epsilon, const ActionMask& mask, Rng& rng);
int select_action(const QNetwork& net, const Observation& obs, double epsilon,
                  const ActionMask& mask, Rng& rng);

/// Masked argmax, lowest index on ties.
int greedy_action(std::span<const float> q_values, const ActionMask& mask);

/// r for terminal transitions, r + gamma * max over valid next actions of the
/// target network otherwise.
std::vector<float> td_target(std::span<const Transition* const> batch, const QNetwork& target_net,
                             double gamma);

class Trainer {
 public:
  Trainer(QNetwork net, TrainConfig config);

  QNetwork& online() { return net_; }
  const QNetwork& online() const { return net_; }
  const QNetwork& target() const { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  const TrainConfig& config() const { return config_; }
  Rng& rng() { return rng_; }

  /// One gradient step on mean squared TD error. Returns the pre-step loss,
  /// or nothing when the buffer holds fewer than batch_size transitions.
  std::optional<double> train_step();
  void sync_target() { target_ = net_; }

 private:
  QNetwork net_;
  QNetwork target_;
  TrainConfig config_;
  nn::Adam<float> optimizer_;
  ReplayBuffer buffer_;
  Rng rng_;
};

struct EpisodeLog {
  int stage_rows = 0;
  int episode = 0;
  double episode_return = 0.0;
  bool success = false;
  int length = 0;
};

struct StageResult {
  QNetwork net;
  std::vector<EpisodeLog> log;
  std::vector<double> losses;
};

using ProgressCallback = std::function<void(const CurriculumStage&, std::int64_t step)>;

/// Uniform start over all valid states and uniform goal, redrawn while the
/// start already satisfies the goal.
std::pair<RobotState, GoalSpec> sample_episode(const FieldSpec& field, Rng& rng);

StageResult train_stage(const CurriculumStage& stage, const TrainConfig& config,
                        const std::optional<QNetwork>& init, int max_rows,
                        const ProgressCallback& progress = {});

struct CurriculumResult {
  QNetwork net;
  std::vector<StageResult> stages;
  std::vector<int> stage_rows;
};

/// Chains train_stage over `stage_rows`, warm-starting each stage from the
/// previous one. The network is sized for the largest stage.
CurriculumResult run_curriculum(const TrainConfig& config, const std::vector<int>& stage_rows,
                                int steps_per_stage, const ProgressCallback& progress = {});

struct EvalResult {
  double success_rate = 0.0;
  double mean_return = 0.0;
  std::size_t episodes = 0;
};

EvalResult evaluate_policy(const QNetwork& net, std::span<const PlanRequest> requests);

/// Greedy rollout in the 10-section abstraction of the request's field.
PlanResult plan_dqn(const QNetwork& net, const PlanRequest& request);

inline constexpr int kTrainingSections = 10;

struct Checkpoint {
  QNetwork net;
  TrainConfig config;
  std::vector<int> stage_rows;
  int completed_stage_rows = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace croprow::dqn
