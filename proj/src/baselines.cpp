#include "cbm/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "cbm/errors.hpp"

namespace cbm {

std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::FR: return "fr";
    case BaselineKind::Age: return "age";
    case BaselineKind::TBM: return "tbm";
    case BaselineKind::ATBM: return "atbm";
  }
  return "?";
}

BaselineKind parse_baseline_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "fr") return BaselineKind::FR;
  if (lower == "age") return BaselineKind::Age;
  if (lower == "tbm") return BaselineKind::TBM;
  if (lower == "atbm") return BaselineKind::ATBM;
  throw ParameterError("unknown baseline '" + std::string(name) + "' (expected fr, age, tbm or atbm)");
}

BaselineSpec BaselineSpec::fr() { return {}; }

BaselineSpec BaselineSpec::age(int repair_period, int replacement_period) {
  BaselineSpec s;
  s.kind = BaselineKind::Age;
  s.repair_period = repair_period;
  s.replacement_period = replacement_period;
  return s;
}

BaselineSpec BaselineSpec::tbm(double repair_threshold, double replacement_threshold) {
  BaselineSpec s;
  s.kind = BaselineKind::TBM;
  s.repair_threshold = repair_threshold;
  s.replacement_threshold = replacement_threshold;
  return s;
}

BaselineSpec BaselineSpec::atbm(double repair_threshold, double replacement_threshold,
                                int repair_period, int replacement_period) {
  BaselineSpec s;
  s.kind = BaselineKind::ATBM;
  s.repair_threshold = repair_threshold;
  s.replacement_threshold = replacement_threshold;
  s.repair_period = repair_period;
  s.replacement_period = replacement_period;
  return s;
}

void BaselineSpec::validate(double failure_threshold) const {
  const bool has_thresholds = repair_threshold && replacement_threshold;
  const bool no_thresholds = !repair_threshold && !replacement_threshold;
  const bool has_periods = repair_period && replacement_period;
  const bool no_periods = !repair_period && !replacement_period;
  bool shape_ok = false;
  switch (kind) {
    case BaselineKind::FR: shape_ok = no_thresholds && no_periods; break;
    case BaselineKind::Age: shape_ok = no_thresholds && has_periods; break;
    case BaselineKind::TBM: shape_ok = has_thresholds && no_periods; break;
    case BaselineKind::ATBM: shape_ok = has_thresholds && has_periods; break;
  }
  if (!shape_ok) {
    throw ParameterError("baseline " + std::string(to_string(kind)) +
                         ": parameters do not match the policy kind");
  }
  for (const auto& t : {repair_threshold, replacement_threshold}) {
    if (t && !(*t >= 0.0 && *t <= failure_threshold)) {
      throw ParameterError("baseline threshold " + std::to_string(*t) + " outside [0, L]");
    }
  }
  for (const auto& p : {repair_period, replacement_period}) {
    if (p && *p < 1) throw ParameterError("baseline period must be at least 1");
  }
}

namespace {

std::string format_number(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string format_period(int p) { return p == kNeverPeriod ? std::string("never") : std::to_string(p); }

}  // namespace

std::string BaselineSpec::describe() const {
  std::string out(to_string(kind));
  if (repair_threshold) out += " repair_threshold=" + format_number(*repair_threshold);
  if (replacement_threshold) out += " replacement_threshold=" + format_number(*replacement_threshold);
  if (repair_period) out += " repair_period=" + format_period(*repair_period);
  if (replacement_period) out += " replacement_period=" + format_period(*replacement_period);
  return out;
}

BaselineSpec parse_baseline_spec(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (c == ' ' || c == ',' || c == ':' || c == '\t' || c == '\n') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  if (tokens.empty()) throw ParameterError("baseline spec is empty");

  BaselineSpec spec;
  spec.kind = parse_baseline_kind(tokens.front());
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos) throw ParameterError("baseline spec: expected key=value, got '" + tokens[i] + "'");
    const std::string key = tokens[i].substr(0, eq);
    const std::string value = tokens[i].substr(eq + 1);
    auto number = [&] {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParameterError("baseline spec: bad value for " + key + ": '" + value + "'");
      }
      return v;
    };
    auto period = [&] {
      if (value == "never") return kNeverPeriod;
      int v = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParameterError("baseline spec: bad value for " + key + ": '" + value + "'");
      }
      return v;
    };
    if (key == "repair_threshold") spec.repair_threshold = number();
    else if (key == "replacement_threshold") spec.replacement_threshold = number();
    else if (key == "repair_period") spec.repair_period = period();
    else if (key == "replacement_period") spec.replacement_period = period();
    else throw ParameterError("baseline spec: unknown parameter '" + key + "'");
  }
  return spec;
}

BaselineSpec as_atbm(const BaselineSpec& spec, double failure_threshold) {
  return BaselineSpec::atbm(spec.repair_threshold.value_or(failure_threshold),
                            spec.replacement_threshold.value_or(failure_threshold),
                            spec.repair_period.value_or(kNeverPeriod),
                            spec.replacement_period.value_or(kNeverPeriod));
}

Action baseline_decision(const BaselineSpec& spec, const SystemState& s, int steps_since_repair,
                         int steps_since_replacement) {
  if (steps_since_repair < 0 || steps_since_replacement < 0) {
    throw ParameterError("baseline: counters must be non-negative");
  }
  const bool use_thresholds = spec.kind == BaselineKind::TBM || spec.kind == BaselineKind::ATBM;
  const bool use_periods = spec.kind == BaselineKind::Age || spec.kind == BaselineKind::ATBM;
  if ((use_thresholds && !(spec.repair_threshold && spec.replacement_threshold)) ||
      (use_periods && !(spec.repair_period && spec.replacement_period))) {
    throw ParameterError("baseline " + std::string(to_string(spec.kind)) + ": missing parameters");
  }

  bool replace = false;
  bool repair = false;
  if (use_thresholds) {
    replace = replace || s.x >= *spec.replacement_threshold;
    repair = repair || s.x >= *spec.repair_threshold;
  }
  if (use_periods) {
    replace = replace || (*spec.replacement_period != kNeverPeriod &&
                          steps_since_replacement >= *spec.replacement_period);
    repair = repair || (*spec.repair_period != kNeverPeriod && steps_since_repair >= *spec.repair_period);
  }
  if (replace) return Action::Replace;
  if (repair) return Action::Repair;
  return Action::NoAction;
}

Policy baseline_policy(BaselineSpec spec) {
  return [spec = std::move(spec)](const DecisionContext& ctx) {
    return baseline_decision(spec, ctx.state, ctx.steps_since_repair, ctx.steps_since_replacement);
  };
}

BaselineGrid BaselineGrid::defaults(BaselineKind kind, double failure_threshold, int max_period,
                                    double threshold_step) {
  BaselineGrid g;
  std::vector<double> thresholds;
  for (int i = 1;; ++i) {
    const double t = i * threshold_step;
    if (t > failure_threshold + 1e-12) break;
    thresholds.push_back(std::min(t, failure_threshold));
  }
  std::vector<int> periods;
  for (int p = 1; p <= max_period; ++p) periods.push_back(p);
  periods.push_back(kNeverPeriod);

  if (kind == BaselineKind::TBM || kind == BaselineKind::ATBM) {
    g.repair_thresholds = thresholds;
    g.replacement_thresholds = thresholds;
  }
  if (kind == BaselineKind::Age || kind == BaselineKind::ATBM) {
    g.repair_periods = periods;
    g.replacement_periods = periods;
  }
  if (kind == BaselineKind::ATBM) g.search = GridSearch::CoordinateDescent;
  return g;
}

namespace {

using SpecKey = std::tuple<double, double, int, int>;

SpecKey key_of(const BaselineSpec& s) {
  return {s.repair_threshold.value_or(-1.0), s.replacement_threshold.value_or(-1.0),
          s.repair_period.value_or(-1), s.replacement_period.value_or(-1)};
}

// True when a is preferred over b.
bool better(const SurfacePoint& a, const SurfacePoint& b) {
  if (a.cost.mean != b.cost.mean) return a.cost.mean < b.cost.mean;
  const auto conservative = [](const BaselineSpec& s) {
    return std::make_tuple(s.replacement_threshold.value_or(0.0), s.repair_threshold.value_or(0.0),
                           s.replacement_period.value_or(0), s.repair_period.value_or(0));
  };
  return conservative(a.spec) > conservative(b.spec);
}

class Evaluator {
 public:
  Evaluator(const MaintenanceModel& model, int iterations, int horizon, std::uint64_t seed)
      : model_(model), iterations_(iterations), horizon_(horizon), seed_(seed) {}

  const SurfacePoint& operator()(const BaselineSpec& spec) {
    const auto key = key_of(spec);
    if (auto it = cache_.find(key); it != cache_.end()) return surface_[it->second];
    spec.validate(model_.costs.failure_threshold);
    const auto stats = monte_carlo(baseline_policy(spec), model_, iterations_, horizon_, seed_);
    surface_.push_back({spec, cost_per_inspection(stats)});
    cache_.emplace(key, surface_.size() - 1);
    return surface_.back();
  }

  std::vector<SurfacePoint>& surface() { return surface_; }

 private:
  MaintenanceModel model_;
  int iterations_;
  int horizon_;
  std::uint64_t seed_;
  std::map<SpecKey, std::size_t> cache_;
  std::vector<SurfacePoint> surface_;
};

std::vector<BaselineSpec> enumerate(BaselineKind kind, const BaselineGrid& g) {
  std::vector<BaselineSpec> specs;
  switch (kind) {
    case BaselineKind::FR:
      break;
    case BaselineKind::TBM:
      // Repair thresholds at or above the replacement threshold never fire;
      // they collapse onto repair_threshold == replacement_threshold.
      for (double rt : g.replacement_thresholds) {
        for (double pt : g.repair_thresholds) {
          if (pt < rt) specs.push_back(BaselineSpec::tbm(pt, rt));
        }
        specs.push_back(BaselineSpec::tbm(rt, rt));
      }
      break;
    case BaselineKind::Age:
      // The repair counter never exceeds the replacement counter, so repair
      // periods at or above the replacement period are equivalent to never.
      for (int rp : g.replacement_periods) {
        for (int pp : g.repair_periods) {
          if (pp < rp) specs.push_back(BaselineSpec::age(pp, rp));
        }
        specs.push_back(BaselineSpec::age(kNeverPeriod, rp));
      }
      break;
    case BaselineKind::ATBM:
      for (double rt : g.replacement_thresholds)
        for (double pt : g.repair_thresholds)
          for (int rp : g.replacement_periods)
            for (int pp : g.repair_periods) specs.push_back(BaselineSpec::atbm(pt, rt, pp, rp));
      break;
  }
  return specs;
}

}  // namespace

OptimizationResult optimize_baseline(BaselineKind kind, const MaintenanceModel& model,
                                     const BaselineGrid& grid, int iterations, int horizon,
                                     std::uint64_t seed) {
  if (kind == BaselineKind::FR) {
    throw ParameterError("FR has no parameters to optimize");
  }
  Evaluator eval(model, iterations, horizon, seed);
  // Surface entries are referenced by index because the vector grows.
  auto eval_index = [&](const BaselineSpec& s) {
    const auto& p = eval(s);
    return static_cast<std::size_t>(&p - eval.surface().data());
  };
  std::size_t best_index = 0;
  bool have_best = false;
  auto consider = [&](std::size_t idx) {
    if (!have_best || better(eval.surface()[idx], eval.surface()[best_index])) {
      best_index = idx;
      have_best = true;
    }
  };

  if (grid.search == GridSearch::Exhaustive || kind != BaselineKind::ATBM) {
    const auto specs = enumerate(kind, grid);
    if (specs.empty()) throw ParameterError("optimize: empty grid");
    for (const auto& s : specs) consider(eval_index(s));
  } else {
    if (grid.repair_thresholds.empty() || grid.replacement_thresholds.empty() ||
        grid.repair_periods.empty() || grid.replacement_periods.empty()) {
      throw ParameterError("optimize: empty grid axis");
    }
    std::vector<BaselineSpec> starts = grid.starts;
    if (starts.empty()) {
      starts.push_back(BaselineSpec::atbm(model.costs.failure_threshold, model.costs.failure_threshold,
                                          kNeverPeriod, kNeverPeriod));
    }
    for (const auto& start : starts) {
      std::size_t current = eval_index(start);
      for (int pass = 0; pass < 20; ++pass) {
        bool improved = false;
        for (int axis = 0; axis < 4; ++axis) {
          const BaselineSpec base = eval.surface()[current].spec;
          auto try_value = [&](auto setter) {
            BaselineSpec cand = base;
            setter(cand);
            const std::size_t idx = eval_index(cand);
            if (better(eval.surface()[idx], eval.surface()[current])) {
              current = idx;
              improved = true;
            }
          };
          switch (axis) {
            case 0: for (double v : grid.repair_thresholds) try_value([v](BaselineSpec& s) { s.repair_threshold = v; }); break;
            case 1: for (double v : grid.replacement_thresholds) try_value([v](BaselineSpec& s) { s.replacement_threshold = v; }); break;
            case 2: for (int v : grid.repair_periods) try_value([v](BaselineSpec& s) { s.repair_period = v; }); break;
            case 3: for (int v : grid.replacement_periods) try_value([v](BaselineSpec& s) { s.replacement_period = v; }); break;
          }
        }
        if (!improved) break;
      }
      consider(current);
    }
  }

  const auto& best = eval.surface()[best_index];
  OptimizationResult result{best.spec, best.cost, {}};
  result.surface = std::move(eval.surface());
  return result;
}

void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& surface) {
  out << "kind,repair_threshold,replacement_threshold,repair_period,replacement_period,"
         "mean_cost_rate,ci_half_width\n";
  const auto old_precision = out.precision(10);
  auto period = [](const std::optional<int>& p) {
    if (!p) return std::string();
    return *p == kNeverPeriod ? std::string("never") : std::to_string(*p);
  };
  auto threshold = [](const std::optional<double>& t) {
    if (!t) return std::string();
    std::ostringstream s;
    s << *t;
    return s.str();
  };
  for (const auto& p : surface) {
    out << to_string(p.spec.kind) << ',' << threshold(p.spec.repair_threshold) << ','
        << threshold(p.spec.replacement_threshold) << ',' << period(p.spec.repair_period) << ','
        << period(p.spec.replacement_period) << ',' << p.cost.mean << ',' << p.cost.half_width()
        << '\n';
  }
  out.precision(old_precision);
}

}  // namespace cbm
