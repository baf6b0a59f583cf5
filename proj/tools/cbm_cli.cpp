#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbm/baselines.hpp"
#include "cbm/case_config.hpp"
#include "cbm/ddqn.hpp"
#include "cbm/errors.hpp"
#include "cbm/evaluation.hpp"
#include "cbm/mlp.hpp"

namespace fs = std::filesystem;
using namespace cbm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitMissing = 4;

struct GlobalOptions {
  std::string case_spec = "2";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<int> horizon;
  std::string out;
};

struct Context {
  CaseConfig config;
  std::string command;

  std::string header() const {
    std::ostringstream ss;
    ss << "# cbm " << command << " case=" << config.id << " seed=" << config.seed
       << " config_hash=" << std::hex << std::setw(16) << std::setfill('0') << config.hash();
    return ss.str();
  }
};

Context make_context(const GlobalOptions& g, const std::string& command) {
  Context ctx{load_case(g.case_spec), command};
  if (g.seed) ctx.config.seed = *g.seed;
  if (g.iterations) ctx.config.iterations = *g.iterations;
  if (g.horizon) ctx.config.horizon = *g.horizon;
  ctx.config.validate();
  return ctx;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string read_first_data_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() != '#') return line;
  }
  return {};
}

Policy load_model_policy(const std::string& path, const CaseConfig& config) {
  const SavedModel saved = load_model(path);
  if (saved.metadata.case_id != config.id) {
    std::cerr << "warning: model " << path << " was trained on case " << saved.metadata.case_id
              << ", evaluating on case " << config.id << '\n';
  }
  if (saved.net.input_size() != 2 || saved.net.output_size() != kNumActions) {
    throw ParseError(path, 0, "network shape does not match the maintenance environment");
  }
  return greedy_policy(saved.net, config.failure_threshold);
}

struct PolicySource {
  std::string model;
  std::string policy;

  void attach(CLI::App* cmd) {
    auto* m = cmd->add_option("--model", model, "Trained model file (JSON)");
    auto* p = cmd->add_option("--policy", policy,
                              "Baseline spec, e.g. fr or tbm:repair_threshold=6,replacement_threshold=7.5");
    m->excludes(p);
  }

  std::pair<Policy, std::string> resolve(const CaseConfig& config) const {
    if (!model.empty()) return {load_model_policy(model, config), "rl"};
    if (policy.empty()) throw CLI::RequiredError("--model or --policy");
    const BaselineSpec spec = parse_baseline_spec(policy);
    spec.validate(config.failure_threshold);
    return {baseline_policy(spec), spec.describe()};
  }
};

fs::path best_spec_path(const fs::path& dir, BaselineKind kind) {
  return dir / ("best_" + std::string(to_string(kind)) + ".txt");
}

BaselineSpec load_best_spec(const fs::path& dir, BaselineKind kind, const CaseConfig& config) {
  const fs::path path = best_spec_path(dir, kind);
  if (!fs::exists(path)) {
    throw MissingArtifactError("no optimized " + std::string(to_string(kind)) + " policy at " +
                               path.string() + "; run `cbm optimize --baseline " +
                               std::string(to_string(kind)) + " --case " + config.id +
                               " --out " + dir.string() + "` first");
  }
  const BaselineSpec spec = parse_baseline_spec(read_first_data_line(path));
  spec.validate(config.failure_threshold);
  return spec;
}

void print_summary(std::ostream& out, const SummaryRow& r) {
  out << std::fixed << std::setprecision(2);
  auto row = [&](const char* name, const IntervalEstimate& e) {
    out << "  " << std::left << std::setw(22) << name << std::right << std::setw(10) << e.mean
        << std::setw(10) << e.sd << "   [" << e.lower << ", " << e.upper << "]\n";
  };
  out << "  " << std::left << std::setw(22) << "" << std::right << std::setw(10) << "mean"
      << std::setw(10) << "sd" << "   95% interval\n";
  row("N_P (repairs)", r.n_repairs);
  row("N_PR (preventive)", r.n_preventive);
  row("N_CR (corrective)", r.n_corrective);
  row("S (cycle length)", r.cycle);
  row("EC (cycle formula)", r.cost_rate);
  row("cost per inspection", r.cost_per_inspection);
  out << "  E[N_CR]*C_down         " << r.availability << '\n'
      << "  cost shares            replacement " << r.shares.preventive_replacement << ", repair "
      << r.shares.repair << ", corrective " << r.shares.corrective_replacement << '\n';
  out << std::defaultfloat;
}

int cmd_train(const GlobalOptions& g, const AgentConfig& agent_in, const std::string& log_path) {
  Context ctx = make_context(g, "train");
  AgentConfig agent = agent_in;
  agent.seed = ctx.config.seed;
  agent.validate();
  const fs::path model_path = g.out.empty() ? fs::path("model.json") : fs::path(g.out);
  fs::path log = log_path.empty() ? fs::path(model_path).replace_extension(".log.csv") : fs::path(log_path);

  // Open both outputs before the (long) training run so path errors surface early.
  std::ofstream model_out = open_output(model_path);
  std::ofstream log_out = open_output(log);

  const int report_every = std::max(1, agent.episodes / 20);
  const auto result = train(ctx.config.model(), agent, [&](const EpisodeLog& e) {
    if (e.episode % report_every == 0 || e.episode == agent.episodes) {
      std::cerr << "episode " << e.episode << "/" << agent.episodes << "  reward "
                << e.cumulative_reward << "  epsilon " << e.epsilon << "  loss " << e.mean_loss << '\n';
    }
  });

  model_out << serialize_model(result.network, {ctx.config.id, agent.seed, agent.episodes});
  log_out << ctx.header() << '\n';
  write_training_log_csv(log_out, result.log);
  std::cout << "model written to " << model_path.string() << "\ntraining log written to "
            << log.string() << '\n';
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const PolicySource& source) {
  Context ctx = make_context(g, "evaluate");
  const auto [policy, label] = source.resolve(ctx.config);
  const auto& c = ctx.config;
  const auto stats = monte_carlo(policy, c.model(), c.iterations, c.horizon, c.seed);
  const SummaryRow row = summarize(label, stats, c.model().costs);

  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  auto results = open_output(dir / "results.csv");
  results << ctx.header() << '\n';
  write_results_csv(results, stats, c.model().costs);
  auto summary = open_output(dir / "summary.csv");
  summary << ctx.header() << '\n';
  write_summary_csv(summary, {row});

  std::cout << "case " << c.id << " (" << c.description << "), policy " << label << ", "
            << c.iterations << " x " << c.horizon << " inspections\n";
  print_summary(std::cout, row);
  std::vector<double> per_inspection;
  for (const auto& s : stats) per_inspection.push_back(s.total_cost / s.horizon);
  if (per_inspection.size() >= 20 && row.cost_per_inspection.sd > 0.0) {
    const auto normal = ks_normality(per_inspection);
    std::cout << "  KS normality of cost per inspection: D=" << normal.statistic << " (5% critical "
              << normal.critical_value << ") " << (normal.normal ? "normal" : "not normal") << '\n';
  }
  return 0;
}

struct OptimizeOptions {
  std::string baseline;
  double threshold_step = 0.25;
  int max_period = 80;
  std::string search;
};

int cmd_optimize(const GlobalOptions& g, const OptimizeOptions& opt) {
  Context ctx = make_context(g, "optimize");
  const auto& c = ctx.config;
  const BaselineKind kind = parse_baseline_kind(opt.baseline);
  if (kind == BaselineKind::FR) throw ParameterError("fr has no parameters to optimize");
  if (!(opt.threshold_step > 0.0) || opt.max_period < 1) {
    throw ParameterError("grid: threshold step and max period must be positive");
  }
  BaselineGrid grid = BaselineGrid::defaults(kind, c.failure_threshold, opt.max_period, opt.threshold_step);
  if (opt.search == "exhaustive") grid.search = GridSearch::Exhaustive;
  else if (opt.search == "coordinate") grid.search = GridSearch::CoordinateDescent;
  else if (!opt.search.empty()) throw ParameterError("--search must be exhaustive or coordinate");

  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  if (kind == BaselineKind::ATBM) {
    grid.starts.push_back(as_atbm(BaselineSpec::fr(), c.failure_threshold));
    for (auto sub : {BaselineKind::TBM, BaselineKind::Age}) {
      if (fs::exists(best_spec_path(dir, sub))) {
        grid.starts.push_back(as_atbm(load_best_spec(dir, sub, c), c.failure_threshold));
      }
    }
  }

  const auto result = optimize_baseline(kind, c.model(), grid, c.iterations, c.horizon, c.seed);
  auto surface = open_output(dir / ("surface_" + std::string(to_string(kind)) + ".csv"));
  surface << ctx.header() << '\n';
  write_surface_csv(surface, result.surface);
  auto best = open_output(best_spec_path(dir, kind));
  best << ctx.header() << '\n' << result.best.describe() << '\n';

  std::cout << "best " << result.best.describe() << "\n  cost per inspection "
            << result.best_cost.mean << " [" << result.best_cost.lower << ", "
            << result.best_cost.upper << "] over " << result.surface.size() << " grid points\n";
  return 0;
}

int cmd_compare(const GlobalOptions& g, const std::string& model_path, const std::string& baselines_dir) {
  Context ctx = make_context(g, "compare");
  const auto& c = ctx.config;
  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  const fs::path bdir = baselines_dir.empty() ? dir : fs::path(baselines_dir);
  if (model_path.empty()) throw CLI::RequiredError("--model");
  if (!fs::exists(model_path)) {
    throw MissingArtifactError("no trained model at " + model_path + "; run `cbm train --case " +
                               c.id + " --out " + model_path + "` first");
  }

  struct Entry {
    std::string label;
    std::string spec;
    Policy policy;
  };
  std::vector<Entry> entries;
  entries.push_back({"rl", fs::path(model_path).filename().string(), load_model_policy(model_path, c)});
  entries.push_back({"fr", "fr", baseline_policy(BaselineSpec::fr())});
  for (auto kind : {BaselineKind::TBM, BaselineKind::Age, BaselineKind::ATBM}) {
    const BaselineSpec spec = load_best_spec(bdir, kind, c);
    entries.push_back({std::string(to_string(kind)), spec.describe(), baseline_policy(spec)});
  }

  std::vector<std::vector<RunStatistics>> runs;
  std::vector<IntervalEstimate> costs;
  for (const auto& e : entries) {
    runs.push_back(monte_carlo(e.policy, c.model(), c.iterations, c.horizon, c.seed));
    costs.push_back(cost_per_inspection(runs.back()));
  }

  auto dist = open_output(dir / "comparison_costs.csv");
  dist << ctx.header() << "\niteration";
  for (const auto& e : entries) dist << ',' << e.label;
  dist << '\n' << std::setprecision(17);
  for (int i = 0; i < c.iterations; ++i) {
    dist << i;
    for (const auto& r : runs) {
      const auto& s = r[static_cast<std::size_t>(i)];
      dist << ',' << s.total_cost / s.horizon;
    }
    dist << '\n';
  }

  auto table = open_output(dir / "comparison.csv");
  table << ctx.header() << '\n'
        << "policy,spec,cost_per_inspection_mean,cost_per_inspection_lower,cost_per_inspection_upper,"
           "rl_reduction_percent\n"
        << std::setprecision(10);
  std::cout << "case " << c.id << ", " << c.iterations << " x " << c.horizon
            << " inspections, common random numbers\n";
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const double reduction = 100.0 * (1.0 - costs[0].mean / costs[k].mean);
    table << entries[k].label << ",\"" << entries[k].spec << "\"," << costs[k].mean << ','
          << costs[k].lower << ',' << costs[k].upper << ',' << reduction << '\n';
    std::cout << "  " << std::left << std::setw(5) << entries[k].label << std::right << std::fixed
              << std::setprecision(2) << std::setw(10) << costs[k].mean << "  RL reduction "
              << std::setw(6) << reduction << "%   " << entries[k].spec << '\n'
              << std::defaultfloat;
  }
  return 0;
}

int cmd_trace(const GlobalOptions& g, const PolicySource& source, int steps) {
  Context ctx = make_context(g, "trace");
  if (steps < 1) throw ParameterError("--steps must be positive");
  const auto [policy, label] = source.resolve(ctx.config);
  const auto& c = ctx.config;
  const auto trace = run_episode(policy, steps, c.model(),
                                 RngStream(c.seed, stream_id(StreamPurpose::Degradation, kEvaluationStreamBase)),
                                 RngStream(c.seed, stream_id(StreamPurpose::Repair, kEvaluationStreamBase)));
  const fs::path path = g.out.empty() ? fs::path("trace.csv") : fs::path(g.out);
  auto out = open_output(path);
  out << ctx.header() << " policy=" << label << '\n';
  write_trace_csv(out, trace);
  std::cout << steps << " inspections written to " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condition-based maintenance with a double deep Q-network agent"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--case", g.case_spec, "Builtin case 1..7 or a case file (default 2)");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--iterations", g.iterations, "Monte Carlo iterations")->check(CLI::PositiveNumber);
  app.add_option("--horizon", g.horizon, "Inspections per iteration")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file (train, trace) or directory (evaluate, optimize, compare)");

  AgentConfig agent;
  agent.episodes = 5000;
  std::string log_path;
  std::string target_update = "soft";
  auto* train_cmd = app.add_subcommand("train", "Train a DDQN agent on a case");
  train_cmd->add_option("--episodes", agent.episodes, "Training episodes")->capture_default_str();
  train_cmd->add_option("--episode-length", agent.episode_length)->capture_default_str();
  train_cmd->add_option("--learn-rate", agent.learn_rate)->capture_default_str();
  train_cmd->add_option("--gamma", agent.gamma, "Discount factor")->capture_default_str();
  train_cmd->add_option("--tau", agent.tau, "Soft target smoothing factor")->capture_default_str();
  train_cmd->add_option("--target-update", target_update, "soft or hard")->check(CLI::IsMember({"soft", "hard"}));
  train_cmd->add_option("--hidden", agent.hidden, "Hidden layer widths")->capture_default_str();
  train_cmd->add_option("--reward-scale", agent.reward_scale)->capture_default_str();
  train_cmd->add_option("--log", log_path, "Training log CSV (default: <out>.log.csv)");

  PolicySource eval_source;
  auto* eval_cmd = app.add_subcommand("evaluate", "Monte Carlo evaluation of a trained model or baseline");
  eval_source.attach(eval_cmd);

  OptimizeOptions opt;
  auto* opt_cmd = app.add_subcommand("optimize", "Grid-search the parameters of a baseline policy");
  opt_cmd->add_option("--baseline", opt.baseline, "tbm, age or atbm")->required();
  opt_cmd->add_option("--threshold-step", opt.threshold_step)->capture_default_str();
  opt_cmd->add_option("--max-period", opt.max_period)->capture_default_str();
  opt_cmd->add_option("--search", opt.search, "exhaustive or coordinate (default depends on baseline)");

  std::string compare_model;
  std::string baselines_dir;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare a trained model against optimized baselines");
  cmp_cmd->add_option("--model", compare_model, "Trained model file")->required();
  cmp_cmd->add_option("--baselines", baselines_dir, "Directory holding best_<kind>.txt (default: --out)");

  PolicySource trace_source;
  int trace_steps = 250;
  auto* trace_cmd = app.add_subcommand("trace", "Export a per-inspection trace");
  trace_source.attach(trace_cmd);
  trace_cmd->add_option("--steps", trace_steps)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) {
      if (app.count("--case") == 0) {
        throw CLI::RequiredError("--case");
      }
      agent.target_update = target_update == "hard" ? TargetUpdate::HardCopy : TargetUpdate::Soft;
      return cmd_train(g, agent, log_path);
    }
    if (*eval_cmd) return cmd_evaluate(g, eval_source);
    if (*opt_cmd) return cmd_optimize(g, opt);
    if (*cmp_cmd) return cmd_compare(g, compare_model, baselines_dir);
    if (*trace_cmd) return cmd_trace(g, trace_source, trace_steps);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissing;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
