#include "cbm/ddqn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "cbm/errors.hpp"

namespace cbm {

std::array<double, 2> encode_state(const SystemState& s, double failure_threshold) noexcept {
  return {s.x / failure_threshold, s.x_m / failure_threshold};
}

MaintenanceRlEnv::MaintenanceRlEnv(const MaintenanceModel& model, std::uint64_t seed)
    : env_(model, RngStream(seed, stream_id(StreamPurpose::Degradation, 0)),
           RngStream(seed, stream_id(StreamPurpose::Repair, 0))) {}

void MaintenanceRlEnv::reset(std::span<double> observation) {
  env_.reset();
  const auto enc = encode_state(env_.state(), env_.model().costs.failure_threshold);
  std::copy(enc.begin(), enc.end(), observation.begin());
}

Environment::Feedback MaintenanceRlEnv::step(int action, std::span<double> next_observation) {
  if (action < 0 || action >= kNumActions) throw ParameterError("action index out of range");
  last_ = env_.advance(static_cast<Action>(action));
  const double limit = env_.model().costs.failure_threshold;
  const auto enc = encode_state(env_.state(), limit);
  std::copy(enc.begin(), enc.end(), next_observation.begin());
  const int forced = env_.state().x >= limit ? static_cast<int>(Action::Replace) : -1;
  return {last_.reward, static_cast<int>(last_.executed), forced};
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int observation_size)
    : capacity_(capacity), obs_(observation_size) {
  if (capacity == 0 || observation_size <= 0) throw ParameterError("replay buffer: empty shape");
  states_.resize(capacity * static_cast<std::size_t>(obs_));
  next_states_.resize(capacity * static_cast<std::size_t>(obs_));
  actions_.resize(capacity);
  rewards_.resize(capacity);
  next_forced_.resize(capacity);
}

void ReplayBuffer::push(std::span<const double> state, int action, double reward,
                        std::span<const double> next_state, int next_forced_action) {
  const auto n = static_cast<std::size_t>(obs_);
  if (state.size() != n || next_state.size() != n) throw ParameterError("replay buffer: observation size");
  std::copy(state.begin(), state.end(), states_.begin() + static_cast<std::ptrdiff_t>(head_ * n));
  std::copy(next_state.begin(), next_state.end(),
            next_states_.begin() + static_cast<std::ptrdiff_t>(head_ * n));
  actions_[head_] = action;
  rewards_[head_] = reward;
  next_forced_[head_] = next_forced_action;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::slot(std::size_t slot) const {
  const auto n = static_cast<std::size_t>(obs_);
  return {std::span<const double>(states_).subspan(slot * n, n), actions_[slot], rewards_[slot],
          std::span<const double>(next_states_).subspan(slot * n, n), next_forced_[slot]};
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay buffer index");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return slot((oldest + i) % capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, RngStream& rng) const {
  if (batch > size_) throw ParameterError("replay buffer: batch larger than contents");
  std::vector<std::size_t> picked;
  picked.reserve(batch);
  for (std::size_t j = size_ - batch; j < size_; ++j) {
    const auto t = static_cast<std::size_t>(rng.uniform_index(j + 1));
    if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
      picked.push_back(t);
    } else {
      picked.push_back(j);
    }
  }
  // Slots [0, size_) are all occupied whether or not the ring has wrapped.
  return picked;
}

ExplorationSchedule::ExplorationSchedule(double eps_max, double eps_min, double decay)
    : eps_max_(eps_max), eps_min_(eps_min), decay_(decay), epsilon_(std::max(eps_min, eps_max)) {
  if (!(eps_min >= 0.0 && eps_min <= eps_max && eps_max <= 1.0) || !(decay >= 0.0 && decay < 1.0)) {
    throw ParameterError("exploration schedule: need 0 <= eps_min <= eps_max <= 1, 0 <= decay < 1");
  }
}

void ExplorationSchedule::advance() noexcept {
  ++steps_;
  epsilon_ = std::max(eps_min_, eps_max_ * std::pow(1.0 - decay_, static_cast<double>(steps_)));
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("agent: discount must lie in [0, 1]");
  if (batch_size <= 0 || episodes <= 0 || episode_length <= 0 || buffer_capacity == 0) {
    throw ParameterError("agent: counts must be positive");
  }
  if (static_cast<std::size_t>(batch_size) > buffer_capacity) {
    throw ParameterError("agent: batch size exceeds buffer capacity");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("agent: tau must lie in (0, 1]");
  if (hard_copy_period <= 0) throw ParameterError("agent: hard copy period must be positive");
  if (!(learn_rate > 0.0)) throw ParameterError("agent: learn rate must be positive");
  if (!(reward_scale > 0.0)) throw ParameterError("agent: reward scale must be positive");
  ExplorationSchedule(eps_max, eps_min, eps_decay);
}

int greedy_action(const Eigen::VectorXd& q) noexcept {
  int best = 0;
  for (int a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

int select_action(const Mlp& net, std::span<const double> observation, double epsilon,
                  RngStream& rng) {
  // Both draws are taken unconditionally so the stream position does not depend
  // on the network.
  const double coin = rng.uniform();
  const auto random_action = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(net.output_size())));
  if (coin < epsilon) return random_action;
  return greedy_action(net.forward(observation));
}

double ddqn_target(const Mlp& main, const Mlp& target, const Transition& t, double gamma) {
  if (gamma == 0.0) return t.reward;
  const int best =
      t.next_forced_action >= 0 ? t.next_forced_action : greedy_action(main.forward(t.next_state));
  return t.reward + gamma * target.forward(t.next_state)[best];
}

TrainingResult train(Environment& env, const AgentConfig& cfg, const EpisodeCallback& on_episode,
                     const TransitionObserver& on_transition) {
  cfg.validate();
  const int obs_size = env.observation_size();
  const int n_actions = env.num_actions();

  RngStream init_rng(cfg.seed, stream_id(StreamPurpose::Initialization, 0));
  RngStream explore_rng(cfg.seed, stream_id(StreamPurpose::Exploration, 0));
  RngStream replay_rng(cfg.seed, stream_id(StreamPurpose::Replay, 0));

  Mlp main = Mlp::q_network(obs_size, cfg.hidden, n_actions, init_rng);
  Mlp target = main;
  AdamState opt(main);
  opt.learn_rate = cfg.learn_rate;
  opt.beta1 = cfg.grad_decay;
  opt.beta2 = cfg.sq_grad_decay;
  opt.epsilon = cfg.adam_epsilon;

  ReplayBuffer buffer(cfg.buffer_capacity, obs_size);
  ExplorationSchedule schedule(cfg.eps_max, cfg.eps_min, cfg.eps_decay);

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  Eigen::MatrixXd states(obs_size, cfg.batch_size);
  Eigen::MatrixXd next_states(obs_size, cfg.batch_size);
  std::vector<int> actions(batch);
  std::vector<double> targets(batch);
  std::vector<int> forced(batch);
  Eigen::VectorXd grad;
  std::vector<double> obs(static_cast<std::size_t>(obs_size));
  std::vector<double> next_obs(static_cast<std::size_t>(obs_size));
  std::int64_t learn_steps = 0;

  TrainingResult result{main, {}};
  result.log.reserve(static_cast<std::size_t>(cfg.episodes));

  for (int episode = 1; episode <= cfg.episodes; ++episode) {
    env.reset(obs);
    double cumulative = 0.0;
    double loss_sum = 0.0;
    int loss_count = 0;

    for (int t = 0; t < cfg.episode_length; ++t) {
      const int requested = select_action(main, obs, schedule.epsilon(), explore_rng);
      const auto fb = env.step(requested, next_obs);
      buffer.push(obs, fb.executed_action, fb.reward * cfg.reward_scale, next_obs,
                  fb.next_forced_action);
      if (on_transition) {
        on_transition({obs, fb.executed_action, fb.reward * cfg.reward_scale, next_obs,
                       fb.next_forced_action});
      }
      schedule.advance();
      cumulative += fb.reward;

      if (buffer.size() >= batch) {
        const auto picked = buffer.sample_indices(batch, replay_rng);
        for (std::size_t j = 0; j < batch; ++j) {
          const auto tr = buffer.slot(picked[j]);
          const auto col = static_cast<Eigen::Index>(j);
          for (int k = 0; k < obs_size; ++k) {
            states(k, col) = tr.state[static_cast<std::size_t>(k)];
            next_states(k, col) = tr.next_state[static_cast<std::size_t>(k)];
          }
          actions[j] = tr.action;
          targets[j] = tr.reward;
          forced[j] = tr.next_forced_action;
        }
        const Eigen::MatrixXd q_next_main = main.forward(next_states);
        const Eigen::MatrixXd q_next_target = target.forward(next_states);
        for (std::size_t j = 0; j < batch; ++j) {
          const auto col = static_cast<Eigen::Index>(j);
          Eigen::Index best = forced[j];
          if (best < 0) best = greedy_action(q_next_main.col(col));
          targets[j] += cfg.gamma * q_next_target(best, col);
        }
        loss_sum += main.backward_mse(states, actions, targets, grad);
        ++loss_count;
        adam_step(main, opt, grad);
        ++learn_steps;
        if (cfg.target_update == TargetUpdate::Soft) {
          soft_update(target, main, cfg.tau);
        } else if (learn_steps % cfg.hard_copy_period == 0) {
          target = main;
        }
      }
      std::swap(obs, next_obs);
    }

    if (!main.parameters().allFinite()) {
      throw std::runtime_error("training diverged: non-finite network parameters at episode " +
                               std::to_string(episode));
    }
    EpisodeLog entry{episode, cumulative, schedule.epsilon(),
                     loss_count > 0 ? loss_sum / loss_count : 0.0};
    result.log.push_back(entry);
    if (on_episode) on_episode(entry);
  }
  result.network = std::move(main);
  return result;
}

TrainingResult train(const MaintenanceModel& model, const AgentConfig& cfg,
                     const EpisodeCallback& on_episode) {
  MaintenanceRlEnv env(model, cfg.seed);
  return train(env, cfg, on_episode);
}

Policy greedy_policy(Mlp net, double failure_threshold) {
  return [net = std::move(net), failure_threshold](const DecisionContext& ctx) {
    const auto enc = encode_state(ctx.state, failure_threshold);
    return static_cast<Action>(greedy_action(net.forward(enc)));
  };
}

void write_training_log_csv(std::ostream& out, const std::vector<EpisodeLog>& log) {
  out << "episode,cumulative_reward,epsilon,mean_loss\n";
  const auto old_precision = out.precision(17);
  for (const auto& e : log) {
    out << e.episode << ',' << e.cumulative_reward << ',' << e.epsilon << ',' << e.mean_loss << '\n';
  }
  out.precision(old_precision);
}

}  // namespace cbm
