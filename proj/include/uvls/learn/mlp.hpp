#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace uvls::learn {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

// Fully connected Q-network: ReLU on hidden layers, identity output.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  // sizes = {input, hidden..., output}.
  static Mlp zeros(const std::vector<std::size_t>& sizes);
  static Mlp glorot(const std::vector<std::size_t>& sizes, std::mt19937_64& rng);

  Eigen::VectorXd forward(std::span<const double> x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;  // columns are samples

  std::vector<std::size_t> sizes() const;
  std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().w.cols(); }
  std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().w.rows(); }
  std::size_t parameter_count() const;

  // Inputs are multiplied by this before the first layer.
  double input_scale() const { return input_scale_; }
  void set_input_scale(double s);

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Flat view for finite-difference checks: per layer, w column-major then b.
  std::vector<double> flat() const;
  void set_flat(std::span<const double> values);

 private:
  std::vector<Layer> layers_;
  double input_scale_ = 1.0;
};

struct Gradient {
  std::vector<Layer> layers;
  double loss = 0.0;
};

// Gradient of 0.5 * mean_i (Q(x_i, a_i) - y_i)^2. Only the taken action's
// output contributes per sample. Throws NumericalError on non-finite values.
Gradient loss_gradient(const Mlp& net, const Eigen::MatrixXd& x, std::span<const std::uint32_t> actions,
                       std::span<const double> targets);

double loss_value(const Mlp& net, const Eigen::MatrixXd& x, std::span<const std::uint32_t> actions,
                  std::span<const double> targets);

enum class OptimizerKind { kSgd, kAdam };

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);
  void apply(Mlp& net, const Gradient& grad);
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::uint64_t t_ = 0;
  std::vector<Layer> m_, v_;
};

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace uvls::learn
