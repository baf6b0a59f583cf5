#include "cbm/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "cbm/errors.hpp"

namespace cbm {

double RunStatistics::mean_cycle() const {
  if (cycle_durations.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double sum = std::accumulate(cycle_durations.begin(), cycle_durations.end(), 0.0);
  return sum / static_cast<double>(cycle_durations.size());
}

RunStatistics collect_run(const std::vector<StepOutcome>& trace) {
  RunStatistics s;
  s.horizon = static_cast<int>(trace.size());
  int last_replacement = -1;
  for (int i = 0; i < s.horizon; ++i) {
    const auto& o = trace[static_cast<std::size_t>(i)];
    s.total_cost -= o.reward;
    switch (o.event) {
      case MaintenanceEvent::None: break;
      case MaintenanceEvent::Repair: ++s.n_repairs; break;
      case MaintenanceEvent::PreventiveReplacement: ++s.n_preventive_replacements; break;
      case MaintenanceEvent::CorrectiveReplacement: ++s.n_corrective_replacements; break;
    }
    if (o.event == MaintenanceEvent::PreventiveReplacement ||
        o.event == MaintenanceEvent::CorrectiveReplacement) {
      s.cycle_durations.push_back(i - last_replacement);
      last_replacement = i;
    }
  }
  return s;
}

double cost_from_counts(double n_p, double n_pr, double n_cr, const CostParams& costs) noexcept {
  return costs.c_p * n_p + costs.c_r * n_pr + (costs.c_r + costs.c_down) * n_cr;
}

std::vector<RunStatistics> monte_carlo(const Policy& policy, const MaintenanceModel& model,
                                       int iterations, int horizon, std::uint64_t master_seed,
                                       unsigned threads) {
  if (iterations < 2) throw ParameterError("monte carlo: need at least 2 iterations");
  if (horizon < 1) throw ParameterError("monte carlo: horizon must be positive");
  model.validate();

  std::vector<RunStatistics> out(static_cast<std::size_t>(iterations));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    const Policy local = policy;
    for (int i = next++; i < iterations; i = next++) {
      try {
        const auto index = kEvaluationStreamBase + static_cast<std::uint64_t>(i);
        RngStream degradation(master_seed, stream_id(StreamPurpose::Degradation, index));
        RngStream repairs(master_seed, stream_id(StreamPurpose::Repair, index));
        out[static_cast<std::size_t>(i)] =
            collect_run(run_episode(local, horizon, model, degradation, repairs));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = iterations;
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(iterations));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

IntervalEstimate confidence_interval(double mean, double sd, std::size_t n, double level) {
  if (n < 2) throw ParameterError("confidence interval: need at least 2 samples");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("confidence interval: level must lie in (0, 1)");
  const double z = std_normal_quantile(0.5 + 0.5 * level);
  const double half = z * sd / std::sqrt(static_cast<double>(n));
  return {mean, sd, mean - half, mean + half, n};
}

IntervalEstimate confidence_interval(std::span<const double> samples, double level) {
  const std::size_t n = samples.size();
  if (n < 2) throw ParameterError("confidence interval: need at least 2 samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return confidence_interval(mean, std::sqrt(ss / static_cast<double>(n - 1)), n, level);
}

double cost_rate_plugin(double mean_n_p, double mean_n_pr, double mean_n_cr, double mean_cycle,
                        const CostParams& costs) noexcept {
  return cost_from_counts(mean_n_p, mean_n_pr, mean_n_cr, costs) / mean_cycle;
}

IntervalEstimate long_run_cost_rate(const std::vector<RunStatistics>& stats, const CostParams& costs) {
  if (stats.empty()) throw ParameterError("long-run cost rate: no runs");
  std::vector<double> samples;
  samples.reserve(stats.size());
  for (const auto& s : stats) {
    if (s.cycle_durations.empty()) {
      throw ParameterError("long-run cost rate: a run has no complete renewal cycle; extend the horizon");
    }
    samples.push_back(cost_rate_plugin(s.n_repairs, s.n_preventive_replacements,
                                       s.n_corrective_replacements, s.mean_cycle(), costs));
  }
  return confidence_interval(samples);
}

IntervalEstimate cost_per_inspection(const std::vector<RunStatistics>& stats) {
  std::vector<double> samples;
  samples.reserve(stats.size());
  for (const auto& s : stats) samples.push_back(s.total_cost / s.horizon);
  return confidence_interval(samples);
}

CostShares cost_breakdown(const std::vector<RunStatistics>& stats, const CostParams& costs) {
  if (stats.empty()) throw ParameterError("cost breakdown: no runs");
  double repairs = 0.0, preventive = 0.0, corrective = 0.0;
  for (const auto& s : stats) {
    repairs += costs.c_p * s.n_repairs;
    preventive += costs.c_r * s.n_preventive_replacements;
    corrective += (costs.c_r + costs.c_down) * s.n_corrective_replacements;
  }
  const double total = repairs + preventive + corrective;
  if (total == 0.0) return {};
  return {preventive / total, repairs / total, corrective / total};
}

double availability_metric(double mean_n_cr, const CostParams& costs) noexcept {
  return mean_n_cr * costs.c_down;
}

double availability_metric(const std::vector<RunStatistics>& stats, const CostParams& costs) {
  if (stats.empty()) throw ParameterError("availability: no runs");
  double sum = 0.0;
  for (const auto& s : stats) sum += s.n_corrective_replacements;
  return availability_metric(sum / static_cast<double>(stats.size()), costs);
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ParameterError("ks: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const auto di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  double c;
  if (alpha == 0.10) {
    c = 1.224;
  } else if (alpha == 0.05) {
    c = 1.358;
  } else if (alpha == 0.01) {
    c = 1.628;
  } else {
    throw ParameterError("ks: unsupported significance level");
  }
  return c / std::sqrt(static_cast<double>(n));
}

NormalityResult ks_normality(std::span<const double> samples) {
  if (samples.size() < 20) throw ParameterError("ks normality: need at least 20 samples");
  const auto ci = confidence_interval(samples);
  if (!(ci.sd > 0.0)) throw ParameterError("ks normality: samples have zero variance");
  const double mean = ci.mean, sd = ci.sd;
  NormalityResult r;
  r.statistic = ks_statistic(samples, [&](double x) { return std_normal_cdf((x - mean) / sd); });
  r.critical_value = ks_critical_value(samples.size(), 0.05);
  r.normal = r.statistic < r.critical_value;
  return r;
}

SummaryRow summarize(const std::string& label, const std::vector<RunStatistics>& stats,
                     const CostParams& costs) {
  std::vector<double> np, npr, ncr, cyc, total;
  for (const auto& s : stats) {
    np.push_back(s.n_repairs);
    npr.push_back(s.n_preventive_replacements);
    ncr.push_back(s.n_corrective_replacements);
    if (!s.cycle_durations.empty()) cyc.push_back(s.mean_cycle());
    total.push_back(s.total_cost);
  }
  SummaryRow row;
  row.label = label;
  row.n_repairs = confidence_interval(np);
  row.n_preventive = confidence_interval(npr);
  row.n_corrective = confidence_interval(ncr);
  row.cycle = confidence_interval(cyc);
  row.cost_rate = long_run_cost_rate(stats, costs);
  row.cost_per_inspection = cost_per_inspection(stats);
  row.mean_total_cost = confidence_interval(total).mean;
  row.availability = availability_metric(row.n_corrective.mean, costs);
  row.shares = cost_breakdown(stats, costs);
  return row;
}

void write_results_csv(std::ostream& out, const std::vector<RunStatistics>& stats,
                       const CostParams& costs) {
  out << "iteration,N_P,N_PR,N_CR,mean_cycle,total_cost,cost_rate\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const double mc = s.mean_cycle();
    const double rate = cost_rate_plugin(s.n_repairs, s.n_preventive_replacements,
                                         s.n_corrective_replacements, mc, costs);
    out << i << ',' << s.n_repairs << ',' << s.n_preventive_replacements << ','
        << s.n_corrective_replacements << ',' << mc << ',' << s.total_cost << ',' << rate << '\n';
  }
  out.precision(old_precision);
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "label,N_P_mean,N_P_sd,N_PR_mean,N_PR_sd,N_CR_mean,N_CR_sd,S_mean,S_sd,"
         "N_P_lower,N_P_upper,N_PR_lower,N_PR_upper,N_CR_lower,N_CR_upper,S_lower,S_upper,"
         "cost_rate_lower,cost_rate_upper,cost_rate_mean,cost_per_inspection_mean,"
         "cost_per_inspection_lower,cost_per_inspection_upper,mean_total_cost,"
         "availability_E_NCR_Cdown,share_preventive_replacement,share_repair,"
         "share_corrective_replacement\n";
  const auto old_precision = out.precision(10);
  for (const auto& r : rows) {
    out << r.label << ',' << r.n_repairs.mean << ',' << r.n_repairs.sd << ',' << r.n_preventive.mean
        << ',' << r.n_preventive.sd << ',' << r.n_corrective.mean << ',' << r.n_corrective.sd << ','
        << r.cycle.mean << ',' << r.cycle.sd << ',' << r.n_repairs.lower << ',' << r.n_repairs.upper
        << ',' << r.n_preventive.lower << ',' << r.n_preventive.upper << ',' << r.n_corrective.lower
        << ',' << r.n_corrective.upper << ',' << r.cycle.lower << ',' << r.cycle.upper << ','
        << r.cost_rate.lower << ',' << r.cost_rate.upper << ',' << r.cost_rate.mean << ','
        << r.cost_per_inspection.mean << ',' << r.cost_per_inspection.lower << ','
        << r.cost_per_inspection.upper << ',' << r.mean_total_cost << ',' << r.availability << ','
        << r.shares.preventive_replacement << ',' << r.shares.repair << ','
        << r.shares.corrective_replacement << '\n';
  }
  out.precision(old_precision);
}

}  // namespace cbm
