#include <gtest/gtest.h>

#include <random>

#include "croprow/env.hpp"

using namespace croprow;

namespace {

constexpr auto Up = Orientation::Up;
constexpr auto Down = Orientation::Down;

RobotState at(double x, int y, Orientation o) { return {corridor_index_from_x(x), y, o}; }

}  // namespace

TEST(Field, DefaultBudgetCoversWideFields) {
  EXPECT_EQ(FieldSpec::default_max_steps(5, 10), 120);
  EXPECT_EQ(FieldSpec::default_max_steps(200, 10), 224);
  EXPECT_THROW(FieldSpec::make(1, 10), DomainError);
  EXPECT_THROW(FieldSpec::make(4, 0), DomainError);
}

TEST(Field, CorridorCoordinates) {
  EXPECT_EQ(corridor_index_from_x(0.5), 0);
  EXPECT_EQ(corridor_index_from_x(2.5), 2);
  EXPECT_THROW(corridor_index_from_x(1.0), DomainError);
  EXPECT_DOUBLE_EQ(at(1.5, 0, Up).corridor_x(), 1.5);
}

TEST(GoalConfigs, BothApproachCorridors) {
  const auto configs = goal_configs(FieldSpec::make(4, 5), {2, 4});
  ASSERT_EQ(configs.size(), 2u);
  EXPECT_EQ(configs[0], (GoalConfig{2, 4, Up}));
  EXPECT_EQ(configs[1], (GoalConfig{1, 4, Down}));
}

TEST(GoalConfigs, EdgeRowsHaveOneApproach) {
  const auto field = FieldSpec::make(4, 5);
  const auto first = goal_configs(field, {0, 0});
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0], (GoalConfig{0, 0, Up}));
  const auto last = goal_configs(field, {3, 2});
  ASSERT_EQ(last.size(), 1u);
  EXPECT_EQ(last[0], (GoalConfig{2, 2, Down}));
}

TEST(GoalConfigs, InvalidGoalThrows) {
  const auto field = FieldSpec::make(4, 5);
  EXPECT_THROW(goal_configs(field, {4, 0}), DomainError);
  EXPECT_THROW(goal_configs(field, {0, 5}), DomainError);
  EXPECT_THROW(goal_configs(field, {-1, 0}), DomainError);
}

TEST(IsGoal, Examples) {
  const auto field = FieldSpec::make(4, 5);
  EXPECT_TRUE(is_goal(at(2.5, 4, Up), field, {2, 4}));
  EXPECT_FALSE(is_goal(at(1.5, 4, Up), field, {2, 4}));
  EXPECT_FALSE(is_goal(at(2.5, 3, Up), field, {2, 4}));
  EXPECT_TRUE(is_goal(at(1.5, 4, Down), field, {2, 4}));
}

TEST(Step, ForwardStep) {
  const auto out = step(at(1.5, 2, Up), {Up, 0}, FieldSpec::make(4, 5), {0, 0});
  EXPECT_EQ(out.next_state, at(1.5, 3, Up));
  EXPECT_DOUBLE_EQ(out.reward, -0.2);
  EXPECT_FALSE(out.done);
}

TEST(Step, HeadlandSwitchChargesPerRow) {
  const auto out = step(at(1.5, 5, Up), {Up, 4}, FieldSpec::make(4, 5), {0, 0});
  EXPECT_EQ(out.next_state, at(2.5, 5, Up));
  EXPECT_DOUBLE_EQ(out.reward, -0.2);
  EXPECT_DOUBLE_EQ(out.distance_delta, 1.0);

  const auto far = step(at(0.5, -1, Up), {Down, 4}, FieldSpec::make(4, 5), {0, 0});
  EXPECT_DOUBLE_EQ(far.reward_parts.switch_penalty, -0.4);
  EXPECT_EQ(far.next_state.orientation, Down);
}

TEST(Step, InCorridorTurn) {
  const auto out = step(at(1.5, 2, Up), {Down, 0}, FieldSpec::make(4, 5), {0, 0});
  EXPECT_EQ(out.next_state, at(1.5, 1, Down));
  EXPECT_DOUBLE_EQ(out.reward, -1.7);
  EXPECT_DOUBLE_EQ(out.reward_parts.turn_penalty, -1.5);
}

TEST(Step, GoalWithCloserCorridorBonus) {
  const auto out = step(at(2.5, 3, Up), {Up, 0}, FieldSpec::make(4, 5), {2, 4});
  EXPECT_TRUE(out.done);
  EXPECT_DOUBLE_EQ(out.reward, 24.8);
}

TEST(Step, FartherCorridorGetsNoBonus) {
  const auto field = FieldSpec::make(6, 5);
  // Goal row 2: approaches are corridor 2 (up) and corridor 1 (down).
  StepContext ctx;
  ctx.initial_corridor = 4;
  const auto out = step(at(1.5, 3, Down), {Down, 1}, field, {2, 4}, ctx);
  EXPECT_TRUE(out.done);
  EXPECT_DOUBLE_EQ(out.reward_parts.closer_corridor_bonus, 0.0);
  EXPECT_DOUBLE_EQ(out.reward, -0.2 + 20.0);
}

TEST(Step, ClampAtFieldEdgeStillCharged) {
  const auto field = FieldSpec::make(4, 5);
  const auto top = step(at(0.5, 5, Up), {Up, 0}, field, {3, 0});
  EXPECT_EQ(top.next_state.y, 5);
  EXPECT_DOUBLE_EQ(top.reward, -0.2);
  EXPECT_DOUBLE_EQ(top.distance_delta, 0.0);
  const auto bottom = step(at(0.5, -1, Up), {Up, 1}, field, {3, 0});
  EXPECT_EQ(bottom.next_state.y, -1);
}

TEST(Step, Oscillation) {
  const auto field = FieldSpec::make(4, 5);
  StepContext ctx;
  ctx.prev_displacement = 1;
  const auto back = step(at(1.5, 3, Up), {Up, 1}, field, {3, 0}, ctx);
  EXPECT_DOUBLE_EQ(back.reward_parts.oscillation_penalty, -1.5);
  const auto same = step(at(1.5, 3, Up), {Up, 0}, field, {3, 0}, ctx);
  EXPECT_DOUBLE_EQ(same.reward_parts.oscillation_penalty, 0.0);
  // Reversing on a headland is a legitimate turn-around.
  const auto headland = step(at(1.5, 5, Up), {Up, 1}, field, {3, 0}, ctx);
  EXPECT_DOUBLE_EQ(headland.reward_parts.oscillation_penalty, 0.0);
}

TEST(Step, Errors) {
  const auto field = FieldSpec::make(4, 5);
  EXPECT_THROW(step(at(1.5, 2, Up), {Up, 4}, field, {0, 0}), IllegalAction);
  EXPECT_THROW(step(at(1.5, 2, Up), {Up, 5}, field, {0, 0}), DomainError);
  EXPECT_THROW(step(at(1.5, 2, Up), {Up, -1}, field, {0, 0}), DomainError);
  EXPECT_THROW(step({5, 2, Up}, {Up, 0}, field, {0, 0}), DomainError);
  EXPECT_THROW(step(at(1.5, 6, Up), {Up, 0}, field, {0, 0}), DomainError);
}

TEST(Observe, Normalisation) {
  const auto field = FieldSpec::make(10, 10);
  const auto obs = observe(at(0.5, 0, Up), {0, 0}, field);
  EXPECT_FLOAT_EQ(obs[0], 0.05f);
  EXPECT_FLOAT_EQ(obs[1], 1.0f / 11.0f);
  EXPECT_FLOAT_EQ(obs[2], 0.0f);
  EXPECT_FLOAT_EQ(obs[3], 0.0f);
  EXPECT_FLOAT_EQ(obs[4], 0.0f);
  EXPECT_FLOAT_EQ(observe(at(3.5, 4, Down), {0, 0}, field)[2], 1.0f);
  const auto g = observe(at(0.5, 0, Up), {9, 9}, field);
  EXPECT_FLOAT_EQ(g[3], 0.9f);
  EXPECT_FLOAT_EQ(g[4], 0.9f);
}

TEST(Oracle, Examples) {
  const auto field = FieldSpec::make(4, 5);
  const auto a = oracle_shortest(field, at(1.5, 2, Up), {2, 4});
  EXPECT_TRUE(a.exists);
  EXPECT_DOUBLE_EQ(a.distance, 4.0);
  EXPECT_DOUBLE_EQ(oracle_shortest(field, at(0.5, 0, Up), {3, 0}).distance, 4.0);
  const auto zero = oracle_shortest(field, at(2.5, 4, Up), {2, 4});
  EXPECT_DOUBLE_EQ(zero.distance, 0.0);
  EXPECT_TRUE(zero.actions.empty());
}

TEST(Oracle, FrozenReferenceDistances) {
  // {R, L, corridor, y, orientation, goal row, goal y, distance} from an
  // independent uniform-cost search.
  const int cases[][8] = {
      {4, 12, 2, 7, 1, 2, 7, 10}, {4, 2, 2, 0, 1, 0, 0, 4},    {12, 12, 10, 9, 0, 10, 0, 9},
      {11, 8, 5, 8, 1, 10, 5, 7}, {11, 7, 7, 0, 1, 10, 3, 7},  {7, 1, 4, 1, 0, 5, 0, 1},
      {9, 4, 5, 0, 0, 4, 1, 4},   {3, 7, 1, 6, 0, 1, 1, 5},    {3, 3, 1, 1, 0, 1, 1, 0},
      {11, 10, 0, 0, 1, 1, 5, 5}, {3, 9, 0, 5, 0, 0, 6, 1},    {10, 2, 2, 1, 0, 5, 1, 4},
      {9, 2, 2, 2, 1, 3, 1, 1},   {12, 1, 7, 0, 0, 6, 0, 3},   {2, 11, 0, 10, 1, 0, 7, 5},
      {8, 7, 4, 7, 1, 3, 6, 2},   {2, 4, 0, 1, 1, 0, 0, 3},    {8, 1, 6, -1, 0, 0, 0, 7},
      {10, 3, 6, 1, 0, 7, 0, 3},  {12, 12, 3, 0, 0, 11, 4, 13}, {4, 12, 2, 9, 1, 0, 9, 8},
      {2, 3, 0, 1, 0, 0, 1, 0},   {10, 4, 6, -1, 0, 0, 0, 7},  {12, 3, 2, 0, 1, 6, 1, 6},
  };
  for (const auto& c : cases) {
    const auto field = FieldSpec::make(c[0], c[1]);
    const RobotState start{c[2], c[3], orientation_from_int(c[4])};
    const auto r = oracle_shortest(field, start, {c[5], c[6]});
    EXPECT_DOUBLE_EQ(r.distance, c[7]) << "R=" << c[0] << " L=" << c[1];
  }
}

TEST(Oracle, ReconstructedPathReplays) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const int R = std::uniform_int_distribution<int>(2, 9)(rng);
    const int L = std::uniform_int_distribution<int>(1, 9)(rng);
    const auto field = FieldSpec::make(R, L);
    const RobotState start{std::uniform_int_distribution<int>(0, R - 2)(rng),
                           std::uniform_int_distribution<int>(-1, L)(rng),
                           orientation_from_int(std::uniform_int_distribution<int>(0, 1)(rng))};
    const GoalSpec goal{std::uniform_int_distribution<int>(0, R - 1)(rng),
                        std::uniform_int_distribution<int>(0, L - 1)(rng)};
    const auto oracle = oracle_shortest(field, start, goal);
    const auto sim = simulate(field, start, goal, oracle.actions);
    ASSERT_TRUE(sim.success) << sim.message;
    EXPECT_DOUBLE_EQ(sim.total_distance, oracle.distance);
  }
}

// Mirroring swaps east and west approaches, so the orientation flips too.
TEST(Oracle, MirrorSymmetry) {
  for (int R = 3; R <= 6; ++R) {
    for (int L = 1; L <= 4; ++L) {
      const auto field = FieldSpec::make(R, L);
      for (int k = 0; k <= R - 2; ++k) {
        for (int y = -1; y <= L; ++y) {
          for (int o = 0; o < 2; ++o) {
            for (int g = 1; g <= R - 2; ++g) {
              for (int gy = 0; gy < L; ++gy) {
                const RobotState s{k, y, orientation_from_int(o)};
                const RobotState m{R - 2 - k, y, orientation_from_int(1 - o)};
                EXPECT_DOUBLE_EQ(oracle_shortest(field, s, {g, gy}).distance,
                                 oracle_shortest(field, m, {R - 1 - g, gy}).distance);
              }
            }
          }
        }
      }
    }
  }
}

TEST(Simulate, EmptyActionList) {
  const auto field = FieldSpec::make(4, 5);
  const auto at_goal = simulate(field, at(2.5, 4, Up), {2, 4}, {});
  EXPECT_TRUE(at_goal.success);
  EXPECT_DOUBLE_EQ(at_goal.total_distance, 0.0);
  const auto away = simulate(field, at(0.5, 0, Up), {2, 4}, {});
  EXPECT_FALSE(away.success);
  EXPECT_EQ(away.failure, FailureReason::ActionsExhausted);
}

TEST(Simulate, IllegalActionReportsStep) {
  const auto field = FieldSpec::make(4, 5);
  const auto r = simulate(field, at(0.5, 0, Up), {3, 4}, {{Up, 0}, {Up, 0}, {Up, 3}});
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.failure, FailureReason::IllegalAction);
  ASSERT_TRUE(r.failed_step.has_value());
  EXPECT_EQ(*r.failed_step, 2u);
}

TEST(Simulate, BudgetExhaustion) {
  FieldSpec field{4, 5, 18};
  EXPECT_THROW((FieldSpec{4, 5, 17}.validate()), DomainError);
  // Backing into the bottom edge clamps, so the robot never moves.
  const std::vector<Action> actions(30, Action{Up, 1});
  const auto r = simulate(field, at(0.5, -1, Up), {0, 4}, actions);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.failure, FailureReason::BudgetExhausted);
  EXPECT_EQ(r.steps, 18);
  EXPECT_DOUBLE_EQ(r.total_reward, 18 * -0.2);
}

TEST(Env, TruncatesAtBudget) {
  CropRowEnv env(FieldSpec{4, 5, 18}, at(0.5, -1, Up), {3, 0});
  for (int i = 0; i < 17; ++i) EXPECT_FALSE(env.step({Up, 1}).truncated);
  const auto t = env.step({Up, 1});
  EXPECT_TRUE(t.truncated);
  EXPECT_FALSE(t.outcome.done);
}

TEST(Properties, RewardAccountingAndClosure) {
  std::mt19937_64 rng(11);
  int steps = 0;
  while (steps < 100'000) {
    const int R = std::uniform_int_distribution<int>(2, 12)(rng);
    const int L = std::uniform_int_distribution<int>(1, 12)(rng);
    const auto field = FieldSpec::make(R, L);
    RobotState s{std::uniform_int_distribution<int>(0, R - 2)(rng),
                 std::uniform_int_distribution<int>(-1, L)(rng), Up};
    const GoalSpec goal{std::uniform_int_distribution<int>(0, R - 1)(rng),
                        std::uniform_int_distribution<int>(0, L - 1)(rng)};
    StepContext ctx;
    ctx.initial_corridor = s.corridor;
    for (int t = 0; t < 50 && steps < 100'000; ++t, ++steps) {
      Action a{orientation_from_int(std::uniform_int_distribution<int>(0, 1)(rng)),
               std::uniform_int_distribution<int>(0, 1)(rng)};
      if (field.is_headland(s.y) && std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
        a.move = 2 + std::uniform_int_distribution<int>(0, R - 2)(rng);
      }
      const auto out = step(s, a, field, goal, ctx);
      const auto again = step(s, a, field, goal, ctx);
      ASSERT_EQ(out.reward, out.reward_parts.total());
      ASSERT_EQ(out.next_state, again.next_state);
      ASSERT_EQ(out.reward, again.reward);
      ASSERT_NO_THROW(validate_state(out.next_state, field));
      if (out.done) break;
      ctx.prev_displacement = out.vertical_displacement != 0
                                  ? std::optional<int>(out.vertical_displacement)
                                  : ctx.prev_displacement;
      s = out.next_state;
    }
  }
}

// In-corridor turns are legal but penalised and the oracle excludes them, so
// the lower bound applies to turn-free trajectories.
TEST(Properties, SimulatedDistanceNeverBeatsOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto field = FieldSpec::make(5, 4);
    RobotState s{std::uniform_int_distribution<int>(0, 3)(rng),
                 std::uniform_int_distribution<int>(-1, 4)(rng), Up};
    const GoalSpec goal{std::uniform_int_distribution<int>(0, 4)(rng),
                        std::uniform_int_distribution<int>(0, 3)(rng)};
    std::vector<Action> actions;
    RobotState cur = s;
    for (int t = 0; t < 40; ++t) {
      Action a{cur.orientation, std::uniform_int_distribution<int>(0, 1)(rng)};
      if (field.is_headland(cur.y)) {
        a.orientation = orientation_from_int(std::uniform_int_distribution<int>(0, 1)(rng));
      }
      if (field.is_headland(cur.y) && std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
        a.move = 2 + std::uniform_int_distribution<int>(0, 3)(rng);
      }
      actions.push_back(a);
      cur = step(cur, a, field, goal).next_state;
    }
    const auto sim = simulate(field, s, goal, actions);
    if (sim.success) {
      EXPECT_GE(sim.total_distance, oracle_shortest(field, s, goal).distance);
    }
  }
}

TEST(ActionEncoder, MergesLateralMoves) {
  ActionEncoder enc(at(0.5, 0, Up));
  enc.vertical(-1);
  enc.lateral(1);
  enc.lateral(1);
  enc.vertical(1);
  const auto actions = enc.finish();
  ASSERT_EQ(actions.size(), 3u);
  EXPECT_EQ(actions[0], (Action{Up, 1}));
  EXPECT_EQ(actions[1], (Action{Up, 4}));
  EXPECT_EQ(actions[2], (Action{Up, 0}));
}

TEST(FailureReason, RoundTrip) {
  for (auto r : {FailureReason::IllegalAction, FailureReason::DomainError,
                 FailureReason::BudgetExhausted, FailureReason::ActionsExhausted,
                 FailureReason::PlannerException}) {
    EXPECT_EQ(failure_reason_from_string(to_string(r)), r);
  }
  EXPECT_FALSE(failure_reason_from_string("nope").has_value());
}
