#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbm/environment.hpp"
#include "cbm/evaluation.hpp"

namespace cbm {

enum class BaselineKind { FR, Age, TBM, ATBM };

std::string_view to_string(BaselineKind k);
BaselineKind parse_baseline_kind(std::string_view name);

/// Period value meaning "this trigger never fires".
inline constexpr int kNeverPeriod = std::numeric_limits<int>::max();

/// Conventional maintenance rule. Periods count inspections; thresholds are
/// deterioration levels. Which fields are set is fixed by the kind.
struct BaselineSpec {
  BaselineKind kind = BaselineKind::FR;
  std::optional<double> repair_threshold;
  std::optional<double> replacement_threshold;
  std::optional<int> repair_period;
  std::optional<int> replacement_period;

  static BaselineSpec fr();
  static BaselineSpec age(int repair_period, int replacement_period);
  static BaselineSpec tbm(double repair_threshold, double replacement_threshold);
  static BaselineSpec atbm(double repair_threshold, double replacement_threshold, int repair_period,
                           int replacement_period);

  void validate(double failure_threshold) const;
  std::string describe() const;
};

/// Inverse of BaselineSpec::describe(); also accepts ',' or ':' as separators,
/// e.g. "tbm:repair_threshold=4,replacement_threshold=7". Periods accept "never".
/// Parameter presence is checked by validate(), not here.
BaselineSpec parse_baseline_spec(std::string_view text);

/// The same decision rule expressed as an ATBM spec (unused triggers set to L
/// or never). Used to seed the ATBM search with TBM and Age optima.
BaselineSpec as_atbm(const BaselineSpec& spec, double failure_threshold);

Action baseline_decision(const BaselineSpec& spec, const SystemState& s, int steps_since_repair,
                         int steps_since_replacement);

Policy baseline_policy(BaselineSpec spec);

enum class GridSearch {
  Exhaustive,
  /// Repeated one-parameter sweeps over the grid axes, started from the given
  /// seeds; accepts strict improvements only.
  CoordinateDescent,
};

struct BaselineGrid {
  std::vector<double> repair_thresholds;
  std::vector<double> replacement_thresholds;
  std::vector<int> repair_periods;
  std::vector<int> replacement_periods;
  GridSearch search = GridSearch::Exhaustive;
  std::vector<BaselineSpec> starts;  // CoordinateDescent only

  /// Thresholds every 0.25 up to L, periods every inspection up to
  /// `max_period`, with the never-sentinel appended to period axes.
  static BaselineGrid defaults(BaselineKind kind, double failure_threshold, int max_period = 80,
                               double threshold_step = 0.25);
};

struct SurfacePoint {
  BaselineSpec spec;
  IntervalEstimate cost;  // cost per inspection
};

struct OptimizationResult {
  BaselineSpec best;
  IntervalEstimate best_cost;
  std::vector<SurfacePoint> surface;
};

/// Grid search minimizing cost per inspection. Every grid point is simulated
/// with the same master seed (common random numbers). Ties go to the spec with
/// fewer interventions: higher thresholds, then longer periods.
OptimizationResult optimize_baseline(BaselineKind kind, const MaintenanceModel& model,
                                     const BaselineGrid& grid, int iterations, int horizon,
                                     std::uint64_t seed);

/// kind,repair_threshold,replacement_threshold,repair_period,replacement_period,mean_cost_rate,ci_half_width
void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& surface);

}  // namespace cbm
