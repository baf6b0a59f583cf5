#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cbm/random.hpp"

namespace cbm {

enum class Activation { Relu, Linear };

/// Dense feed-forward network with all parameters in one flat vector.
///
/// Layer l stores its weight matrix (outputs x inputs, column-major) followed by
/// its bias vector. Keeping the parameters flat makes ADAM, soft target updates
/// and serialization elementwise operations on a single vector.
class Mlp {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  /// Zero-initialized network. `activations` has one entry per weight layer.
  Mlp(std::vector<int> layer_sizes, std::vector<Activation> activations);

  /// ReLU hidden layers and a linear head; He-uniform weights, zero biases.
  static Mlp q_network(int inputs, const std::vector<int>& hidden, int outputs, RngStream& rng);

  int input_size() const noexcept { return sizes_.front(); }
  int output_size() const noexcept { return sizes_.back(); }
  std::size_t num_layers() const noexcept { return activations_.size(); }
  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  const std::vector<Activation>& activations() const noexcept { return activations_; }

  Vector& parameters() noexcept { return params_; }
  const Vector& parameters() const noexcept { return params_; }

  Eigen::Map<Matrix> weights(std::size_t layer);
  Eigen::Map<const Matrix> weights(std::size_t layer) const;
  Eigen::Map<Vector> bias(std::size_t layer);
  Eigen::Map<const Vector> bias(std::size_t layer) const;

  bool same_architecture(const Mlp& other) const noexcept {
    return sizes_ == other.sizes_ && activations_ == other.activations_;
  }

  Vector forward(std::span<const double> input) const;
  /// Column-per-sample batch evaluation: inputs is (input_size x batch).
  Matrix forward(const Matrix& inputs) const;

  /// Gradient of 0.5 * (Q(s, action) - target)^2 with respect to every parameter.
  Vector backward_mse(std::span<const double> input, int action, double target) const;

  /// Gradient of the minibatch loss mean_j 0.5 * (Q(s_j, a_j) - y_j)^2 written
  /// into `grad`. Returns the loss.
  double backward_mse(const Matrix& inputs, std::span<const int> actions,
                      std::span<const double> targets, Vector& grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<Activation> activations_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's weights in params_
  Vector params_;
};

struct AdamState {
  double learn_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(const Mlp& net) : m(Eigen::VectorXd::Zero(net.parameters().size())),
                                       v(Eigen::VectorXd::Zero(net.parameters().size())) {}
};

void adam_step(Mlp& net, AdamState& opt, const Eigen::VectorXd& grad);

/// target <- tau * main + (1 - tau) * target.
void soft_update(Mlp& target, const Mlp& main, double tau);

struct ModelMetadata {
  std::string case_id;
  std::uint64_t seed = 0;
  int episodes = 0;
};

struct SavedModel {
  Mlp net;
  ModelMetadata metadata;
};

std::string serialize_model(const Mlp& net, const ModelMetadata& meta);
SavedModel deserialize_model(const std::string& text, const std::string& source = "<model>");
void save_model(const std::filesystem::path& path, const Mlp& net, const ModelMetadata& meta);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace cbm
