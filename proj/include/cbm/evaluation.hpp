#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cbm/environment.hpp"

namespace cbm {

/// Counts and renewal cycles of one simulated horizon.
struct RunStatistics {
  int n_repairs = 0;                  // N_P
  int n_preventive_replacements = 0;  // N_PR
  int n_corrective_replacements = 0;  // N_CR
  /// Complete renewal cycles in inspections; a trailing open cycle is dropped.
  std::vector<int> cycle_durations;
  double total_cost = 0.0;
  int horizon = 0;

  double mean_cycle() const;
};

RunStatistics collect_run(const std::vector<StepOutcome>& trace);

/// C_P N_P + C_R N_PR + (C_R + C_down) N_CR.
double cost_from_counts(double n_p, double n_pr, double n_cr, const CostParams& costs) noexcept;

/// Evaluation stream ids live in their own index range, away from training.
inline constexpr std::uint64_t kEvaluationStreamBase = 1ULL << 40;

/// `iterations` independent horizons of `horizon` inspections. Iteration i uses
/// the degradation and repair streams with index kEvaluationStreamBase + i, so
/// every policy evaluated with the same master seed faces the same degradation
/// increments. Runs on up to `threads` workers (0 = hardware concurrency); the
/// result does not depend on the thread count.
std::vector<RunStatistics> monte_carlo(const Policy& policy, const MaintenanceModel& model,
                                       int iterations, int horizon, std::uint64_t master_seed,
                                       unsigned threads = 0);

struct IntervalEstimate {
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;

  double half_width() const noexcept { return 0.5 * (upper - lower); }
};

/// Normal-theory interval mean +- z * sd / sqrt(n) with the sample sd.
IntervalEstimate confidence_interval(std::span<const double> samples, double level = 0.95);
IntervalEstimate confidence_interval(double mean, double sd, std::size_t n, double level = 0.95);

/// (C_P E[N_P] + C_R E[N_PR] + (C_R + C_down) E[N_CR]) / E[S] with horizon-level
/// counts and mean renewal-cycle length, as used for the published case tables.
double cost_rate_plugin(double mean_n_p, double mean_n_pr, double mean_n_cr, double mean_cycle,
                        const CostParams& costs) noexcept;

/// Interval for cost_rate_plugin built from one ratio sample per iteration.
/// Note: horizon-level counts over a per-cycle duration; this is cost per
/// inspection scaled by the number of cycles in the horizon, not a cost per
/// unit time. Use cost_per_inspection() to compare policies.
IntervalEstimate long_run_cost_rate(const std::vector<RunStatistics>& stats, const CostParams& costs);

/// Renewal-reward cost rate: total cost / horizon per iteration, in cost per inspection.
IntervalEstimate cost_per_inspection(const std::vector<RunStatistics>& stats);

struct CostShares {
  double preventive_replacement = 0.0;
  double repair = 0.0;
  double corrective_replacement = 0.0;
};

CostShares cost_breakdown(const std::vector<RunStatistics>& stats, const CostParams& costs);

/// E[N_CR] * C_down, a relative unavailability measure.
double availability_metric(const std::vector<RunStatistics>& stats, const CostParams& costs);
double availability_metric(double mean_n_cr, const CostParams& costs) noexcept;

/// Two-sided one-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Asymptotic critical value c(alpha) / sqrt(n); alpha in {0.10, 0.05, 0.01}.
double ks_critical_value(std::size_t n, double alpha);

struct NormalityResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool normal = false;
};

/// KS test against a normal with the sample mean and sd at the 5% level.
/// Estimating the parameters makes the test conservative (Lilliefors).
NormalityResult ks_normality(std::span<const double> samples);

struct SummaryRow {
  std::string label;
  IntervalEstimate n_repairs;
  IntervalEstimate n_preventive;
  IntervalEstimate n_corrective;
  IntervalEstimate cycle;
  IntervalEstimate cost_rate;  // long_run_cost_rate
  IntervalEstimate cost_per_inspection;
  double mean_total_cost = 0.0;
  double availability = 0.0;
  CostShares shares;
};

SummaryRow summarize(const std::string& label, const std::vector<RunStatistics>& stats,
                     const CostParams& costs);

/// iteration,N_P,N_PR,N_CR,mean_cycle,total_cost,cost_rate
void write_results_csv(std::ostream& out, const std::vector<RunStatistics>& stats,
                       const CostParams& costs);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace cbm
