#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "croprow/dqn.hpp"
#include "croprow/mlp.hpp"

using namespace croprow;
using namespace croprow::dqn;

namespace {

QNetwork constant_net(int max_rows, float value) {
  Rng rng(1);
  QNetwork net = QNetwork::create(max_rows, {8}, rng);
  auto& last = net.mlp.layers().back();
  last.weight.setZero();
  last.bias.setConstant(value);
  return net;
}

Transition transition(float reward, bool done, int max_rows) {
  Transition t;
  t.obs = {0.1f, 0.2f, 0.0f, 0.3f, 0.4f};
  t.next_obs = {0.1f, 0.3f, 0.0f, 0.3f, 0.4f};
  t.action = 0;
  t.reward = reward;
  t.done = done;
  t.next_mask.assign(ActionSpace{max_rows}.size(), 1);
  return t;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.hidden_sizes = {32, 32};
  cfg.batch_size = 16;
  cfg.buffer_capacity = 2000;
  cfg.learning_starts = 100;
  cfg.target_sync_interval = 200;
  cfg.learning_rate = 1e-3;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST(ActionSpace, IndexRoundTrip) {
  const ActionSpace space{65};
  EXPECT_EQ(space.size(), 132);
  for (int i = 0; i < space.size(); ++i) EXPECT_EQ(space.index(space.action(i)), i);
  EXPECT_EQ(space.index({Orientation::Down, 7}), 66 + 7);
  EXPECT_THROW(space.action(132), DomainError);
}

TEST(ActionSpace, Mask) {
  const ActionSpace space{10};
  const auto field = FieldSpec::make(5, 10);
  const auto interior = space.mask({1, 3, Orientation::Up}, field);
  EXPECT_EQ(std::count(interior.begin(), interior.end(), 1), 4);
  const auto headland = space.mask({1, 10, Orientation::Up}, field);
  // 4 vertical moves plus 3 other corridors in each orientation.
  EXPECT_EQ(std::count(headland.begin(), headland.end(), 1), 4 + 2 * 3);
  EXPECT_EQ(headland[space.index(Action::switch_to(Orientation::Up, 1))], 0);
  EXPECT_EQ(headland[space.index(Action::switch_to(Orientation::Up, 4))], 0);
  EXPECT_THROW(ActionSpace{4}.mask({0, 0, Orientation::Up}, field), DomainError);
}

TEST(SelectAction, GreedyExamples) {
  Rng rng(0);
  const std::vector<float> q{1.0f, 3.0f, 2.0f};
  EXPECT_EQ(select_action(q, 0.0, ActionMask{1, 1, 1}, rng), 1);
  const std::vector<float> q2{1.0f, 9.0f, 2.0f};
  EXPECT_EQ(select_action(q2, 0.0, ActionMask{1, 0, 1}, rng), 2);
  EXPECT_EQ(greedy_action(std::vector<float>{2.0f, 2.0f}, ActionMask{1, 1}), 0);
  EXPECT_THROW(select_action(q, 0.0, ActionMask{0, 0, 0}, rng), DomainError);
}

TEST(SelectAction, UniformAtFullExploration) {
  Rng rng(2024);
  const std::vector<float> q{5.0f, 0.0f, 1.0f, 2.0f, 3.0f};
  const ActionMask mask{1, 0, 1, 1, 1};
  std::map<int, int> counts;
  const int draws = 10'000;
  for (int i = 0; i < draws; ++i) ++counts[select_action(q, 1.0, mask, rng)];
  EXPECT_EQ(counts.count(1), 0u);
  double chi2 = 0.0;
  const double expected = draws / 4.0;
  for (int a : {0, 2, 3, 4}) chi2 += std::pow(counts[a] - expected, 2) / expected;
  EXPECT_LT(chi2, 16.27);  // chi-square, 3 dof, p = 0.001
}

TEST(TdTarget, Examples) {
  const QNetwork zero = constant_net(4, 0.0f);
  const QNetwork ten = constant_net(4, 10.0f);
  const auto terminal = transition(20.0f, true, 4);
  const auto step = transition(-0.2f, false, 4);
  const Transition* a[] = {&terminal};
  const Transition* b[] = {&step};
  EXPECT_FLOAT_EQ(td_target(a, ten, 0.99)[0], 20.0f);
  EXPECT_NEAR(td_target(b, ten, 0.99)[0], 9.7f, 1e-5);
  EXPECT_FLOAT_EQ(td_target(b, zero, 0.99)[0], -0.2f);
}

TEST(TdTarget, MaxOverValidNextActionsOnly) {
  QNetwork net = constant_net(4, 0.0f);
  net.mlp.layers().back().bias(3) = 50.0f;
  auto t = transition(0.0f, false, 4);
  const Transition* batch[] = {&t};
  EXPECT_NEAR(td_target(batch, net, 0.5)[0], 25.0f, 1e-5);
  t.next_mask[3] = 0;
  EXPECT_NEAR(td_target(batch, net, 0.5)[0], 0.0f, 1e-5);
}

TEST(Mlp, GradientCheck) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int out = std::uniform_int_distribution<int>(2, 12)(rng);
    nn::Mlp<double> net({5, 4, 4, out}, rng);
    for (auto& layer : net.layers()) layer.bias.setRandom();
    const int batch = 3;
    nn::Mlp<double>::Matrix x = nn::Mlp<double>::Matrix::Random(5, batch);
    nn::Mlp<double>::Matrix y = nn::Mlp<double>::Matrix::Random(out, batch);
    auto loss = [&](const nn::Mlp<double>& m) {
      return 0.5 * (m.forward(x) - y).squaredNorm();
    };
    nn::Mlp<double>::Tape tape;
    const auto pred = net.forward(x, tape);
    const auto grads = net.backward(tape, pred - y);
    std::vector<double> analytic;
    for (const auto& g : grads) {
      analytic.insert(analytic.end(), g.weight.data(), g.weight.data() + g.weight.size());
      analytic.insert(analytic.end(), g.bias.data(), g.bias.data() + g.bias.size());
    }
    auto params = net.flatten();
    ASSERT_EQ(params.size(), analytic.size());
    std::vector<double> numeric(params.size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto plus = params;
      auto minus = params;
      plus[i] += h;
      minus[i] -= h;
      nn::Mlp<double> a = net;
      nn::Mlp<double> b = net;
      a.assign(plus);
      b.assign(minus);
      numeric[i] = (loss(a) - loss(b)) / (2 * h);
    }
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      diff += std::pow(analytic[i] - numeric[i], 2);
      norm += std::pow(analytic[i], 2) + std::pow(numeric[i], 2);
    }
    EXPECT_LE(std::sqrt(diff) / std::max(1e-12, std::sqrt(norm)), 1e-4) << "trial " << trial;
  }
}

TEST(Mlp, FlattenAssignRoundTrip) {
  std::mt19937_64 rng(1);
  nn::Mlp<float> net({5, 7, 3}, rng);
  EXPECT_EQ(net.parameter_count(), 5u * 7 + 7 + 7 * 3 + 3);
  nn::Mlp<float> copy({5, 7, 3}, rng);
  EXPECT_FALSE(copy == net);
  copy.assign(net.flatten());
  EXPECT_TRUE(copy == net);
}

TEST(Mlp, ClipGlobalNorm) {
  std::mt19937_64 rng(1);
  nn::Mlp<double> net({2, 2}, rng);
  std::vector<nn::Mlp<double>::Layer> g = net.layers();
  g[0].weight << 3, 0, 0, 0;
  g[0].bias << 4, 0;
  EXPECT_DOUBLE_EQ(nn::clip_global_norm<double>(g, 1.0), 5.0);
  EXPECT_NEAR(g[0].weight(0, 0), 0.6, 1e-6);
  EXPECT_NEAR(g[0].bias(0), 0.8, 1e-6);
  const double bias_before = g[0].bias(0);
  EXPECT_NEAR(nn::clip_global_norm<double>(g, 10.0), 1.0, 1e-6);
  EXPECT_EQ(g[0].bias(0), bias_before);
}

TEST(ReplayBuffer, EvictionStress) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    const int pushes = std::uniform_int_distribution<int>(0, 300)(rng);
    ReplayBuffer buf(cap);
    for (int i = 0; i < pushes; ++i) {
      Transition t;
      t.action = i;
      buf.push(t);
      ASSERT_EQ(buf.size(), std::min<std::size_t>(cap, static_cast<std::size_t>(i + 1)));
      ASSERT_EQ(buf.at(buf.size() - 1).action, i);
      ASSERT_EQ(buf.at(0).action, i + 1 - static_cast<int>(buf.size()));
    }
    EXPECT_EQ(buf.total_pushed(), static_cast<std::uint64_t>(pushes));
    for (std::size_t i = 0; i < buf.size(); ++i) {
      EXPECT_EQ(buf.at(i).action, pushes - static_cast<int>(buf.size()) + static_cast<int>(i));
    }
    if (buf.size() > 0) {
      for (auto s : buf.sample(100, rng)) EXPECT_LT(s, buf.size());
    }
  }
  EXPECT_THROW(ReplayBuffer(0), DomainError);
}

TEST(Trainer, InsufficientBufferIsNoOp) {
  Rng rng(3);
  auto cfg = small_config();
  Trainer trainer(QNetwork::create(4, cfg.hidden_sizes, rng), cfg);
  const QNetwork before = trainer.online();
  for (int i = 0; i < cfg.batch_size - 1; ++i) trainer.buffer().push(transition(1.0f, true, 4));
  EXPECT_FALSE(trainer.train_step().has_value());
  EXPECT_TRUE(trainer.online() == before);
}

TEST(Trainer, TargetSyncInvariants) {
  Rng rng(4);
  auto cfg = small_config();
  Trainer trainer(QNetwork::create(4, cfg.hidden_sizes, rng), cfg);
  EXPECT_TRUE(trainer.target() == trainer.online());
  std::mt19937_64 stress(5);
  for (int i = 0; i < 200; ++i) {
    auto t = transition(static_cast<float>(i % 7) - 3.0f, i % 3 == 0, 4);
    t.action = i % ActionSpace{4}.size();
    trainer.buffer().push(t);
  }
  for (int round = 0; round < 20; ++round) {
    const QNetwork target_before = trainer.target();
    const int updates = std::uniform_int_distribution<int>(1, 5)(stress);
    for (int i = 0; i < updates; ++i) ASSERT_TRUE(trainer.train_step().has_value());
    EXPECT_TRUE(trainer.target() == target_before);
    EXPECT_FALSE(trainer.online() == trainer.target());
    trainer.sync_target();
    EXPECT_TRUE(trainer.target() == trainer.online());
  }
}

TEST(Trainer, LossNonIncreasingOnRepeatedTransition) {
  Rng rng(6);
  auto cfg = small_config();
  cfg.learning_rate = 1e-4;
  Trainer trainer(QNetwork::create(4, cfg.hidden_sizes, rng), cfg);
  for (int i = 0; i < cfg.batch_size; ++i) trainer.buffer().push(transition(5.0f, true, 4));
  double previous = *trainer.train_step();
  for (int i = 0; i < 100; ++i) {
    const double loss = *trainer.train_step();
    EXPECT_LE(loss, previous + 1e-9) << "iteration " << i;
    previous = loss;
  }
}

TEST(TrainConfig, EpsilonSchedule) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.epsilon_at(0, 1000), 1.0);
  EXPECT_NEAR(cfg.epsilon_at(250, 1000), 0.525, 1e-12);
  EXPECT_NEAR(cfg.epsilon_at(500, 1000), 0.05, 1e-12);
  EXPECT_NEAR(cfg.epsilon_at(999, 1000), 0.05, 1e-12);
}

TEST(TrainConfig, Defaults) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.gamma, 0.99);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-4);
  EXPECT_EQ(cfg.batch_size, 64);
  EXPECT_EQ(cfg.buffer_capacity, 100'000);
  EXPECT_EQ(cfg.target_sync_interval, 1000);
  EXPECT_EQ(cfg.rollout_steps, 100'000);
  EXPECT_EQ(cfg.hidden_sizes, (std::vector<int>{1024, 1024, 1024}));
  cfg.gamma = 1.5;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Curriculum, StageParsing) {
  const auto all = parse_stage_rows("5..65:5");
  EXPECT_EQ(all.size(), 13u);
  EXPECT_EQ(all.front(), 5);
  EXPECT_EQ(all.back(), 65);
  EXPECT_EQ(all, default_curriculum_rows());
  EXPECT_EQ(parse_stage_rows("5"), std::vector<int>{5});
  EXPECT_EQ(parse_stage_rows("5,10"), (std::vector<int>{5, 10}));
  EXPECT_THROW(parse_stage_rows("x"), DomainError);
  EXPECT_THROW(parse_stage_rows("10,5"), DomainError);
}

TEST(Curriculum, SampleEpisodeValid) {
  Rng rng(12);
  const auto field = FieldSpec::make(5, 10);
  for (int i = 0; i < 1000; ++i) {
    const auto [start, goal] = sample_episode(field, rng);
    EXPECT_NO_THROW(validate_state(start, field));
    EXPECT_NO_THROW(validate_goal(goal, field));
    EXPECT_FALSE(is_goal(start, field, goal));
  }
}

TEST(Curriculum, DeterministicUnderSeed) {
  const auto cfg = small_config();
  const CurriculumStage stage{3, 10, 1500};
  const auto a = train_stage(stage, cfg, std::nullopt, 4);
  const auto b = train_stage(stage, cfg, std::nullopt, 4);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].episode_return, b.log[i].episode_return);
    EXPECT_EQ(a.log[i].success, b.log[i].success);
    EXPECT_EQ(a.log[i].length, b.log[i].length);
  }
  EXPECT_TRUE(a.net == b.net);
  EXPECT_EQ(a.losses, b.losses);
}

TEST(Curriculum, WarmStartChainsStages) {
  const auto cfg = small_config();
  const auto chained = run_curriculum(cfg, {2, 4}, 600);
  ASSERT_EQ(chained.stages.size(), 2u);
  EXPECT_EQ(chained.net.max_rows, 4);
  const auto second = train_stage({4, 10, 600}, cfg, chained.stages[0].net, 4);
  EXPECT_TRUE(second.net == chained.stages[1].net);
  EXPECT_TRUE(chained.net == chained.stages[1].net);
}

TEST(Episode, MinimalSuccessfulEpisodeReward) {
  // One forward step into the goal from the approach corridor nearest the start.
  CropRowEnv env(FieldSpec::make(5, 10), {2, 3, Orientation::Up}, {2, 4});
  const auto t = env.step({Orientation::Up, 0});
  EXPECT_TRUE(t.outcome.done);
  EXPECT_DOUBLE_EQ(t.outcome.reward, 24.8);
}

TEST(PlanDqn, StartAtGoalAndSizeGuard) {
  Rng rng(1);
  const QNetwork net = QNetwork::create(5, {16}, rng);
  const auto at_goal = plan_dqn(net, {FieldSpec::make(5, 10), {2, 4, Orientation::Up}, {2, 4}});
  EXPECT_TRUE(at_goal.success);
  EXPECT_TRUE(at_goal.raw_actions.empty());
  EXPECT_THROW(plan_dqn(net, {FieldSpec::make(6, 10), {0, 0, Orientation::Up}, {1, 1}}),
               DomainError);
}

TEST(PlanDqn, RolloutRespectsBudget) {
  Rng rng(2);
  const QNetwork net = QNetwork::create(5, {16}, rng);
  const auto field = FieldSpec::make(5, 10);
  const auto plan = plan_dqn(net, {field, {0, 0, Orientation::Up}, {4, 9}});
  EXPECT_LE(plan.raw_actions.size(), static_cast<std::size_t>(field.max_steps));
  const auto sim = simulate(field, {0, 0, Orientation::Up}, {4, 9}, plan.raw_actions);
  EXPECT_EQ(sim.success, plan.success);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  Rng rng(3);
  Checkpoint ckpt{QNetwork::create(5, {8, 8}, rng), small_config(), {5}, 5, 99};
  const auto path = (std::filesystem::temp_directory_path() / "croprow_ckpt_test.bin").string();
  save_checkpoint(path, ckpt);
  const auto loaded = load_checkpoint(path);
  EXPECT_TRUE(loaded.net == ckpt.net);
  EXPECT_EQ(loaded.stage_rows, ckpt.stage_rows);
  EXPECT_EQ(loaded.seed, 99u);
  EXPECT_EQ(loaded.config.hidden_sizes, ckpt.config.hidden_sizes);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-12, std::ios::end);
    const char junk = 0x5a;
    f.write(&junk, 1);
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::ofstream(path, std::ios::trunc) << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
}
