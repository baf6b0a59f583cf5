#include "cbm/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbm/errors.hpp"

namespace cbm {

namespace {

constexpr const char* kModelFormat = "cbm-qnetwork";
constexpr int kModelVersion = 1;

const char* activation_name(Activation a) { return a == Activation::Relu ? "relu" : "linear"; }

Activation parse_activation(const std::string& name, const std::string& source) {
  if (name == "relu") return Activation::Relu;
  if (name == "linear") return Activation::Linear;
  throw ParseError(source, 0, "unknown activation '" + name + "'");
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, std::vector<Activation> activations)
    : sizes_(std::move(layer_sizes)), activations_(std::move(activations)) {
  if (sizes_.size() < 2 || activations_.size() != sizes_.size() - 1) {
    throw ParameterError("mlp: need at least two layer sizes and one activation per layer");
  }
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw ParameterError("mlp: layer sizes must be positive");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Vector::Zero(total);
}

Mlp Mlp::q_network(int inputs, const std::vector<int>& hidden, int outputs, RngStream& rng) {
  std::vector<int> sizes{inputs};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(outputs);
  std::vector<Activation> acts(hidden.size(), Activation::Relu);
  acts.push_back(Activation::Linear);
  Mlp net(sizes, acts);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double limit = std::sqrt(6.0 / sizes[l]);
    auto w = net.weights(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
  }
  return net;
}

Eigen::Map<Mlp::Matrix> Mlp::weights(std::size_t layer) {
  return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Mlp::Matrix> Mlp::weights(std::size_t layer) const {
  return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<Mlp::Vector> Mlp::bias(std::size_t layer) {
  const Eigen::Index start = offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer];
  return {params_.data() + start, sizes_[layer + 1]};
}

Eigen::Map<const Mlp::Vector> Mlp::bias(std::size_t layer) const {
  const Eigen::Index start = offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer];
  return {params_.data() + start, sizes_[layer + 1]};
}

Mlp::Vector Mlp::forward(std::span<const double> input) const {
  if (input.size() != static_cast<std::size_t>(input_size())) {
    throw ParameterError("mlp: input has " + std::to_string(input.size()) + " entries, expected " +
                         std::to_string(input_size()));
  }
  Vector a = Eigen::Map<const Vector>(input.data(), input_size());
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Vector z = weights(l) * a + bias(l);
    if (activations_[l] == Activation::Relu) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Mlp::Matrix Mlp::forward(const Matrix& inputs) const {
  if (inputs.rows() != input_size()) throw ParameterError("mlp: batch input has wrong row count");
  Matrix a = inputs;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Matrix z = weights(l) * a;
    z.colwise() += bias(l);
    if (activations_[l] == Activation::Relu) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

double Mlp::backward_mse(const Matrix& inputs, std::span<const int> actions,
                         std::span<const double> targets, Vector& grad) const {
  const Eigen::Index batch = inputs.cols();
  if (inputs.rows() != input_size()) throw ParameterError("mlp: batch input has wrong row count");
  if (actions.size() != static_cast<std::size_t>(batch) || targets.size() != actions.size()) {
    throw ParameterError("mlp: actions/targets do not match batch size");
  }

  std::vector<Matrix> act(num_layers() + 1);
  act[0] = inputs;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Matrix z = weights(l) * act[l];
    z.colwise() += bias(l);
    if (activations_[l] == Activation::Relu) z = z.cwiseMax(0.0);
    act[l + 1] = std::move(z);
  }

  Matrix delta = Matrix::Zero(output_size(), batch);
  double loss = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    const int a = actions[static_cast<std::size_t>(j)];
    const double y = targets[static_cast<std::size_t>(j)];
    if (a < 0 || a >= output_size()) throw ParameterError("mlp: action index out of range");
    if (!std::isfinite(y)) throw ParameterError("mlp: non-finite regression target");
    const double err = act.back()(a, j) - y;
    loss += 0.5 * err * err;
    delta(a, j) = err * inv_batch;
  }

  grad.resize(params_.size());
  for (std::size_t l = num_layers(); l-- > 0;) {
    if (activations_[l] == Activation::Relu) {
      // ReLU outputs are zero exactly where the pre-activation was non-positive.
      delta = delta.cwiseProduct((act[l + 1].array() > 0.0).cast<double>().matrix());
    }
    const Eigen::Index start = offsets_[l];
    const Eigen::Index rows = sizes_[l + 1];
    const Eigen::Index cols = sizes_[l];
    Eigen::Map<Matrix>(grad.data() + start, rows, cols).noalias() = delta * act[l].transpose();
    Eigen::Map<Vector>(grad.data() + start + rows * cols, rows) = delta.rowwise().sum();
    if (l > 0) delta = weights(l).transpose() * delta;
  }
  return loss * inv_batch;
}

Mlp::Vector Mlp::backward_mse(std::span<const double> input, int action, double target) const {
  if (input.size() != static_cast<std::size_t>(input_size())) {
    throw ParameterError("mlp: input dimension mismatch");
  }
  const Matrix x = Eigen::Map<const Matrix>(input.data(), input_size(), 1);
  Vector grad;
  const int actions[] = {action};
  const double targets[] = {target};
  backward_mse(x, actions, targets, grad);
  return grad;
}

void adam_step(Mlp& net, AdamState& opt, const Eigen::VectorXd& grad) {
  auto& theta = net.parameters();
  if (grad.size() != theta.size()) throw ParameterError("adam: gradient shape mismatch");
  if (opt.m.size() != theta.size()) {
    opt.m = Eigen::VectorXd::Zero(theta.size());
    opt.v = Eigen::VectorXd::Zero(theta.size());
  }
  ++opt.step;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grad;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  theta.array() -= opt.learn_rate * (opt.m.array() / c1) /
                   ((opt.v.array() / c2).sqrt() + opt.epsilon);
}

void soft_update(Mlp& target, const Mlp& main, double tau) {
  if (!target.same_architecture(main)) throw ParameterError("soft update: architecture mismatch");
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("soft update: tau must lie in (0, 1]");
  if (tau == 1.0) {
    target.parameters() = main.parameters();
    return;
  }
  target.parameters() = tau * main.parameters() + (1.0 - tau) * target.parameters();
}

std::string serialize_model(const Mlp& net, const ModelMetadata& meta) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["layer_sizes"] = net.layer_sizes();
  auto acts = nlohmann::json::array();
  for (auto a : net.activations()) acts.push_back(activation_name(a));
  j["activations"] = acts;
  j["metadata"] = {{"case_id", meta.case_id}, {"seed", meta.seed}, {"episodes", meta.episodes}};
  const auto& p = net.parameters();
  j["parameters"] = std::vector<double>(p.data(), p.data() + p.size());
  return j.dump(1);
}

SavedModel deserialize_model(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw ParseError(source, 0, "not a " + std::string(kModelFormat) + " file");
    }
    std::vector<Activation> acts;
    for (const auto& a : j.at("activations")) acts.push_back(parse_activation(a.get<std::string>(), source));
    Mlp net(j.at("layer_sizes").get<std::vector<int>>(), acts);
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != static_cast<std::size_t>(net.parameters().size())) {
      throw ParseError(source, 0, "parameter count " + std::to_string(params.size()) +
                                      " does not match layer sizes");
    }
    net.parameters() = Eigen::Map<const Eigen::VectorXd>(params.data(), net.parameters().size());
    if (!net.parameters().allFinite()) throw ParseError(source, 0, "non-finite parameter");
    ModelMetadata meta;
    const auto& m = j.at("metadata");
    meta.case_id = m.at("case_id").get<std::string>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.episodes = m.at("episodes").get<int>();
    return {std::move(net), std::move(meta)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, e.what());
  } catch (const ParameterError& e) {
    throw ParseError(source, 0, e.what());
  }
}

void save_model(const std::filesystem::path& path, const Mlp& net, const ModelMetadata& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << serialize_model(net, meta) << '\n';
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("model file not found: " + path.string() + " (run `train` first)");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str(), path.string());
}

}  // namespace cbm
