#include <gtest/gtest.h>

#include <sstream>

#include "cbm/case_config.hpp"
#include "cbm/environment.hpp"
#include "cbm/errors.hpp"

using namespace cbm;

namespace {

MaintenanceModel case2() { return builtin_case(2).model(); }

Policy constant(Action a) {
  return [a](const DecisionContext&) { return a; };
}

}  // namespace

TEST(Reward, BranchTable) {
  const CostParams c{600.0, 3500.0, 2000.0, 8.0};
  EXPECT_EQ(reward(Action::NoAction, 3.0, c), 0.0);
  EXPECT_EQ(reward(Action::Repair, 5.0, c), -600.0);
  EXPECT_EQ(reward(Action::Replace, 5.0, c), -3500.0);
  EXPECT_EQ(reward(Action::Replace, 9.0, c), -5500.0);
  EXPECT_EQ(reward(Action::Replace, 8.0, c), -5500.0);
}

TEST(Repair, DrawsInsideWindowAndBecomesNewFloor) {
  RngStream rng(3, 3);
  for (int i = 0; i < 100000; ++i) {
    const auto s = apply_repair({6.0, 0.0}, rng);
    ASSERT_GE(s.x, 0.0);
    ASSERT_LE(s.x, 6.0);
    ASSERT_EQ(s.x, s.x_m);
  }
}

TEST(Repair, DegenerateWindowKeepsState) {
  RngStream rng(1, 1);
  EXPECT_EQ(apply_repair({4.0, 4.0}, rng), (SystemState{4.0, 4.0}));
}

TEST(Repair, SpreadVariantsDiffer) {
  // From {6, 4}: sum/6 gives sigma 10/6, width/6 gives sigma 1/3.
  RngStream a(5, 5), b(5, 5);
  double var_sum = 0.0, var_width = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double xs = apply_repair({6.0, 4.0}, a, RepairSpread::SumOverSix).x - 5.0;
    const double xw = apply_repair({6.0, 4.0}, b, RepairSpread::WidthOverSix).x - 5.0;
    var_sum += xs * xs;
    var_width += xw * xw;
  }
  EXPECT_GT(var_sum / n, 2.0 * var_width / n);
}

TEST(Repair, RejectsBrokenInvariant) {
  RngStream rng(1, 1);
  EXPECT_THROW(apply_repair({2.0, 3.0}, rng), ParameterError);
}

TEST(Step, NoActionOnlyDegrades) {
  const auto m = case2();
  RngStream d(1, 1), r(1, 2);
  const auto out = step({0.0, 0.0}, Action::NoAction, m, d, r);
  EXPECT_EQ(out.event, MaintenanceEvent::None);
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_GE(out.next_state.x, 0.0);
  EXPECT_EQ(out.next_state.x_m, 0.0);
}

TEST(Step, FailedSystemIsReplacedWhateverIsRequested) {
  const auto m = case2();
  for (Action a : {Action::NoAction, Action::Repair, Action::Replace}) {
    RngStream d(1, 1), r(1, 2);
    const auto out = step({9.1, 2.0}, a, m, d, r);
    EXPECT_EQ(out.requested, a);
    EXPECT_EQ(out.executed, Action::Replace);
    EXPECT_EQ(out.reward, -5500.0);
    EXPECT_EQ(out.event, MaintenanceEvent::CorrectiveReplacement);
    EXPECT_EQ(out.post_maintenance, (SystemState{0.0, 0.0}));
    EXPECT_EQ(out.next_state.x_m, 0.0);
  }
}

TEST(Step, PreventiveReplacementResetsBeforeDegrading) {
  const auto m = case2();
  RngStream d(7, 1), r(7, 2), d2(7, 1);
  const auto out = step({5.0, 1.0}, Action::Replace, m, d, r);
  EXPECT_EQ(out.reward, -3500.0);
  EXPECT_EQ(out.event, MaintenanceEvent::PreventiveReplacement);
  EXPECT_EQ(out.next_state.x, sample_increment(m.process, d2));
  EXPECT_EQ(out.next_state.x_m, 0.0);
}

TEST(Step, SharedDegradationStreamGivesCommonIncrements) {
  const auto m = case2();
  RngStream d1(4, 1), r1(4, 2), d2(4, 1), r2(4, 2);
  const auto a = step({3.0, 0.0}, Action::NoAction, m, d1, r1);
  const auto b = step({3.0, 0.0}, Action::Repair, m, d2, r2);
  EXPECT_DOUBLE_EQ(a.next_state.x - a.post_maintenance.x, b.next_state.x - b.post_maintenance.x);
}

TEST(Episode, ConstantNoActionOnlyFailsAndContinues) {
  const auto m = case2();
  const auto trace = run_episode(constant(Action::NoAction), 500, m, RngStream(1, 1), RngStream(1, 2));
  ASSERT_EQ(trace.size(), 500u);
  int failures = 0;
  for (const auto& o : trace) {
    ASSERT_TRUE(o.event == MaintenanceEvent::None || o.event == MaintenanceEvent::CorrectiveReplacement);
    if (o.event == MaintenanceEvent::CorrectiveReplacement) {
      ++failures;
      ASSERT_GE(o.pre_state.x, 8.0);
    } else {
      ASSERT_LT(o.pre_state.x, 8.0);
    }
  }
  EXPECT_GT(failures, 5);
}

TEST(Episode, ConstantReplaceCostsReplacementEveryStep) {
  const auto trace = run_episode(constant(Action::Replace), 500, case2(), RngStream(1, 1), RngStream(1, 2));
  double total = 0.0;
  for (const auto& o : trace) {
    ASSERT_EQ(o.event, MaintenanceEvent::PreventiveReplacement);
    total += o.reward;
  }
  EXPECT_EQ(total, -500.0 * 3500.0);
}

TEST(Episode, RepairFloorsAreNondecreasingWithinCycles) {
  // Repair whenever x > 2: many repairs per cycle, some cycles end in failure.
  const auto policy = [](const DecisionContext& c) { return c.state.x > 2.0 ? Action::Repair : Action::NoAction; };
  const auto trace = run_episode(policy, 20000, case2(), RngStream(2, 1), RngStream(2, 2));
  double floor = 0.0;
  int repairs = 0;
  for (const auto& o : trace) {
    if (o.executed == Action::Replace) {
      floor = 0.0;
      continue;
    }
    ASSERT_GE(o.pre_state.x_m, floor);
    if (o.event == MaintenanceEvent::Repair) {
      ++repairs;
      ASSERT_GE(o.post_maintenance.x_m, o.pre_state.x_m);
      ASSERT_LE(o.post_maintenance.x, o.pre_state.x);
      floor = o.post_maintenance.x_m;
    }
  }
  EXPECT_GT(repairs, 1000);
}

TEST(Env, CountersFollowMaintenance) {
  MaintenanceEnv env(case2(), RngStream(1, 1), RngStream(1, 2));
  env.reset();
  EXPECT_EQ(env.context().steps_since_repair, 0);
  env.advance(Action::NoAction);
  env.advance(Action::NoAction);
  EXPECT_EQ(env.context().steps_since_repair, 2);
  EXPECT_EQ(env.context().steps_since_replacement, 2);
  env.advance(Action::Repair);
  EXPECT_EQ(env.context().steps_since_repair, 1);
  EXPECT_EQ(env.context().steps_since_replacement, 3);
  env.advance(Action::Replace);
  EXPECT_EQ(env.context().steps_since_repair, 1);
  EXPECT_EQ(env.context().steps_since_replacement, 1);
  EXPECT_EQ(env.context().step, 4);
}

TEST(Trace, CsvColumnsAndDeterminism) {
  const auto m = case2();
  auto render = [&] {
    std::ostringstream ss;
    write_trace_csv(ss, run_episode(constant(Action::NoAction), 250, m, RngStream(9, 1), RngStream(9, 2)));
    return ss.str();
  };
  const std::string a = render();
  EXPECT_EQ(a.substr(0, a.find('\n')), "step,x_pre,x_m_pre,requested_action,executed_action,reward,event,x_post");
  EXPECT_EQ(a, render());
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 251);
}
