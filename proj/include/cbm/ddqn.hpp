#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "cbm/environment.hpp"
#include "cbm/mlp.hpp"
#include "cbm/random.hpp"

namespace cbm {

/// Continuing-task environment seen by the learner: real-valued observations,
/// discrete actions. step() reports the action that was actually executed,
/// which may differ from the requested one, and whether the next state admits
/// only a single action.
class Environment {
 public:
  struct Feedback {
    double reward = 0.0;
    int executed_action = 0;
    /// Action the environment will execute at the next state whatever is
    /// requested, or -1 when every action is available there.
    int next_forced_action = -1;
  };

  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual int num_actions() const = 0;
  virtual void reset(std::span<double> observation) = 0;
  virtual Feedback step(int action, std::span<double> next_observation) = 0;
};

/// Network input for a maintenance state: (x / L, x_m / L).
std::array<double, 2> encode_state(const SystemState& s, double failure_threshold) noexcept;

/// Adapter exposing MaintenanceEnv to the learner.
class MaintenanceRlEnv final : public Environment {
 public:
  MaintenanceRlEnv(const MaintenanceModel& model, std::uint64_t seed);

  int observation_size() const override { return 2; }
  int num_actions() const override { return kNumActions; }
  void reset(std::span<double> observation) override;
  Feedback step(int action, std::span<double> next_observation) override;

  const StepOutcome& last_outcome() const noexcept { return last_; }

 private:
  MaintenanceEnv env_;
  StepOutcome last_;
};

struct Transition {
  std::span<const double> state;
  int action = 0;
  double reward = 0.0;
  std::span<const double> next_state;
  int next_forced_action = -1;
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int observation_size);

  void push(std::span<const double> state, int action, double reward,
            std::span<const double> next_state, int next_forced_action = -1);

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  int observation_size() const noexcept { return obs_; }

  /// Transition `i` in insertion order, 0 = oldest retained.
  Transition at(std::size_t i) const;

  /// `batch` distinct slots drawn uniformly (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t batch, RngStream& rng) const;
  Transition slot(std::size_t slot) const;

 private:
  std::size_t capacity_;
  int obs_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // next slot to write
  std::vector<double> states_;
  std::vector<double> next_states_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<int> next_forced_;
};

/// epsilon_t = max(eps_min, eps_max * (1 - decay)^t), t = environment steps taken.
class ExplorationSchedule {
 public:
  ExplorationSchedule(double eps_max = 1.0, double eps_min = 0.01, double decay = 0.005);

  double epsilon() const noexcept { return epsilon_; }
  std::int64_t steps() const noexcept { return steps_; }
  void advance() noexcept;

 private:
  double eps_max_;
  double eps_min_;
  double decay_;
  std::int64_t steps_ = 0;
  double epsilon_;
};

enum class TargetUpdate { Soft, HardCopy };

struct AgentConfig {
  double gamma = 0.99;
  int batch_size = 64;
  int episodes = 50000;
  int episode_length = 500;
  std::size_t buffer_capacity = 10000;
  TargetUpdate target_update = TargetUpdate::Soft;
  double tau = 0.001;
  int hard_copy_period = 1000;  // learning steps between copies in HardCopy mode
  double eps_max = 1.0;
  double eps_min = 0.01;
  double eps_decay = 0.005;
  double learn_rate = 0.01;
  double grad_decay = 0.9;
  double sq_grad_decay = 0.999;
  double adam_epsilon = 1e-8;
  std::vector<int> hidden{64, 64};
  /// Multiplies environment rewards before they enter the replay buffer.
  double reward_scale = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

int greedy_action(const Eigen::VectorXd& q) noexcept;

int select_action(const Mlp& net, std::span<const double> observation, double epsilon,
                  RngStream& rng);

/// r + gamma * Q_target(s', argmax_a Q_main(s', a)); the argmax is replaced by
/// the forced action when s' admits only one.
double ddqn_target(const Mlp& main, const Mlp& target, const Transition& t, double gamma);

struct EpisodeLog {
  int episode = 0;
  double cumulative_reward = 0.0;
  double epsilon = 0.0;
  double mean_loss = 0.0;
};

struct TrainingResult {
  Mlp network;
  std::vector<EpisodeLog> log;
};

using EpisodeCallback = std::function<void(const EpisodeLog&)>;
/// Called with every stored transition; lets callers audit the replay stream.
using TransitionObserver = std::function<void(const Transition&)>;

TrainingResult train(Environment& env, const AgentConfig& cfg, const EpisodeCallback& on_episode = {},
                     const TransitionObserver& on_transition = {});

/// Trains on a fresh MaintenanceRlEnv seeded from cfg.seed.
TrainingResult train(const MaintenanceModel& model, const AgentConfig& cfg,
                     const EpisodeCallback& on_episode = {});

/// Deterministic argmax policy over the encoded maintenance state.
Policy greedy_policy(Mlp net, double failure_threshold);

void write_training_log_csv(std::ostream& out, const std::vector<EpisodeLog>& log);

}  // namespace cbm
