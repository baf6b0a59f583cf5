#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cbm/case_config.hpp"
#include "cbm/errors.hpp"
#include "cbm/evaluation.hpp"

using namespace cbm;

namespace {

Policy constant(Action a) {
  return [a](const DecisionContext&) { return a; };
}

StepOutcome outcome(MaintenanceEvent e, double reward) {
  StepOutcome o;
  o.event = e;
  o.reward = reward;
  return o;
}

}  // namespace

TEST(CollectRun, AlwaysReplaceGivesUnitCycles) {
  const auto model = builtin_case(2).model();
  const auto trace = run_episode(constant(Action::Replace), 10, model, RngStream(1, 1), RngStream(1, 2));
  const auto s = collect_run(trace);
  EXPECT_EQ(s.n_preventive_replacements, 10);
  EXPECT_EQ(s.n_repairs, 0);
  EXPECT_EQ(s.n_corrective_replacements, 0);
  EXPECT_DOUBLE_EQ(s.total_cost, 35000.0);
  EXPECT_EQ(s.cycle_durations, std::vector<int>(10, 1));
  EXPECT_DOUBLE_EQ(s.mean_cycle(), 1.0);
}

TEST(CollectRun, CountsEventsAndDropsOpenCycle) {
  std::vector<StepOutcome> trace = {
      outcome(MaintenanceEvent::None, 0.0),
      outcome(MaintenanceEvent::Repair, -600.0),
      outcome(MaintenanceEvent::None, 0.0),
      outcome(MaintenanceEvent::PreventiveReplacement, -3500.0),
      outcome(MaintenanceEvent::None, 0.0),
      outcome(MaintenanceEvent::CorrectiveReplacement, -5500.0),
      outcome(MaintenanceEvent::Repair, -600.0),
  };
  const auto s = collect_run(trace);
  EXPECT_EQ(s.n_repairs, 2);
  EXPECT_EQ(s.n_preventive_replacements, 1);
  EXPECT_EQ(s.n_corrective_replacements, 1);
  EXPECT_EQ(s.cycle_durations, (std::vector<int>{4, 2}));
  EXPECT_DOUBLE_EQ(s.total_cost, 10200.0);
  EXPECT_EQ(s.horizon, 7);
  EXPECT_DOUBLE_EQ(s.total_cost, cost_from_counts(2, 1, 1, CostParams{}));
}

TEST(ConfidenceInterval, NormalTheoryArithmetic) {
  const auto ci = confidence_interval(44.12, 1.87, 200);
  EXPECT_NEAR(ci.lower, 43.86, 0.005);
  EXPECT_NEAR(ci.upper, 44.38, 0.005);
  EXPECT_NEAR(ci.half_width(), 1.959963984540054 * 1.87 / std::sqrt(200.0), 1e-12);

  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto s = confidence_interval(xs);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-14);
  EXPECT_EQ(s.n, 4u);
  EXPECT_THROW(confidence_interval(std::vector<double>{1.0}), ParameterError);
  EXPECT_THROW(confidence_interval(1.0, 1.0, 10, 1.0), ParameterError);
}

TEST(CostRate, PluginFormula) {
  const CostParams costs;
  // C_P * 44.12 + C_R * 18.54 + (C_R + C_down) * 0.31 over S = 51.70.
  EXPECT_NEAR(cost_rate_plugin(44.12, 18.54, 0.31, 51.70, costs), 1800.1, 0.05);
  CostParams case1 = costs;
  case1.c_p = 300.0;
  EXPECT_NEAR(cost_rate_plugin(46.19, 17.99, 0.28, 53.33, case1), 1469.4, 0.05);
  EXPECT_NEAR(cost_rate_plugin(29.23, 12.72, 0.0, 76.26, {600.0, 3500.0, 2000.0, 12.0}), 813.8, 0.05);
}

TEST(Availability, ProductOfCorrectiveCountAndDowntimeCost) {
  EXPECT_DOUBLE_EQ(availability_metric(1.10, {600.0, 3500.0, 500.0, 8.0}), 550.0);
  EXPECT_DOUBLE_EQ(availability_metric(0.0, CostParams{}), 0.0);
  EXPECT_DOUBLE_EQ(availability_metric(0.80, CostParams{}), 1600.0);
}

TEST(KolmogorovSmirnov, StatisticAgainstUniform) {
  const std::vector<double> xs{0.1, 0.4, 0.7};
  // Steps of the ECDF against F(x) = x: max deviation is at 0.7 (2/3 vs 0.7 and 1 vs 0.7).
  EXPECT_NEAR(ks_statistic(xs, [](double x) { return x; }), 0.3, 1e-15);
  EXPECT_NEAR(ks_critical_value(100, 0.05), 0.1358, 1e-12);
  EXPECT_THROW(ks_critical_value(100, 0.02), ParameterError);
}

TEST(KolmogorovSmirnov, NormalityAcceptsNormalRejectsExponential) {
  RngStream rng(9, 9);
  std::vector<double> normal, expo;
  for (int i = 0; i < 500; ++i) {
    normal.push_back(10.0 + 2.0 * sample_std_normal(rng));
    expo.push_back(-std::log(rng.uniform()));
  }
  EXPECT_TRUE(ks_normality(normal).normal);
  EXPECT_FALSE(ks_normality(expo).normal);
  EXPECT_THROW(ks_normality(std::vector<double>(50, 3.0)), ParameterError);
  EXPECT_THROW(ks_normality(std::vector<double>(5, 3.0)), ParameterError);
}

TEST(MonteCarlo, ResultIndependentOfThreadCount) {
  const auto model = builtin_case(2).model();
  const Policy policy = [](const DecisionContext& c) {
    return c.state.x > 5.0 ? Action::Replace : c.state.x > 3.0 ? Action::Repair : Action::NoAction;
  };
  const auto one = monte_carlo(policy, model, 16, 300, 5, 1);
  const auto four = monte_carlo(policy, model, 16, 300, 5, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].total_cost, four[i].total_cost);
    EXPECT_EQ(one[i].cycle_durations, four[i].cycle_durations);
  }
  EXPECT_NE(one[0].total_cost, one[1].total_cost);
  EXPECT_THROW(monte_carlo(policy, model, 1, 300, 5), ParameterError);
  EXPECT_THROW(monte_carlo(policy, model, 4, 0, 5), ParameterError);
}

TEST(MonteCarlo, CommonRandomNumbersAcrossPolicies) {
  // Never acting leaves degradation untouched, so the first failure step is the
  // same whichever passive policy runs.
  const auto model = builtin_case(2).model();
  const auto a = monte_carlo(constant(Action::NoAction), model, 4, 400, 11, 1);
  const Policy repair_never_fires = [](const DecisionContext& c) {
    return c.state.x > 100.0 ? Action::Repair : Action::NoAction;
  };
  const auto b = monte_carlo(repair_never_fires, model, 4, 400, 11, 1);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].cycle_durations, b[i].cycle_durations);
}

TEST(CostShares, RunToFailureIsAllCorrective) {
  const auto model = builtin_case(2).model();
  const auto fr = monte_carlo(constant(Action::NoAction), model, 10, 500, 3, 1);
  const auto shares = cost_breakdown(fr, model.costs);
  EXPECT_DOUBLE_EQ(shares.corrective_replacement, 1.0);
  EXPECT_DOUBLE_EQ(shares.repair, 0.0);
  const auto ar = monte_carlo(constant(Action::Replace), model, 10, 50, 3, 1);
  EXPECT_DOUBLE_EQ(cost_breakdown(ar, model.costs).preventive_replacement, 1.0);
  EXPECT_NEAR(cost_per_inspection(ar).mean, 3500.0, 1e-9);
  EXPECT_NEAR(long_run_cost_rate(ar, model.costs).mean, 3500.0 * 50, 1e-6);
}

TEST(Summary, CsvShapes) {
  const auto model = builtin_case(2).model();
  const auto stats = monte_carlo(constant(Action::NoAction), model, 5, 400, 3, 1);
  std::ostringstream results, summary;
  write_results_csv(results, stats, model.costs);
  write_summary_csv(summary, {summarize("fr", stats, model.costs)});
  std::string line;
  int lines = 0;
  for (std::istringstream in(results.str()); std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 6);
  EXPECT_EQ(results.str().rfind("iteration,N_P,N_PR,N_CR,mean_cycle,total_cost,cost_rate\n", 0), 0u);
  EXPECT_NE(summary.str().find("\nfr,"), std::string::npos);
}
