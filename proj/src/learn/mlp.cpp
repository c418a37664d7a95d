#include "uvls/learn/mlp.hpp"

#include <cmath>

namespace uvls::learn {

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].b.size() != layers_[l].w.rows()) throw std::invalid_argument("bias size mismatch");
    if (l > 0 && layers_[l].w.cols() != layers_[l - 1].w.rows()) {
      throw std::invalid_argument("layer shapes do not chain");
    }
  }
}

void Mlp::set_input_scale(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("input scale must be positive");
  input_scale_ = s;
}

Mlp Mlp::zeros(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("need at least input and output sizes");
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::glorot(const std::vector<std::size_t>& sizes, std::mt19937_64& rng) {
  Mlp net = zeros(sizes);
  for (auto& layer : net.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.w.rows() + layer.w.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i) layer.w(i, j) = u(rng);
    }
  }
  return net;
}

Eigen::VectorXd Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_size()) {
    throw std::invalid_argument("state length " + std::to_string(x.size()) + " != network input " +
                                std::to_string(input_size()));
  }
  Eigen::VectorXd a =
      input_scale_ * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].w * a + layers_[l].b;
    a = l + 1 < layers_.size() ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_size()) throw std::invalid_argument("batch row count mismatch");
  Eigen::MatrixXd a = input_scale_ * x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].w * a;
    z.colwise() += layers_[l].b;
    a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

std::vector<std::size_t> Mlp::sizes() const {
  std::vector<std::size_t> s;
  if (layers_.empty()) return s;
  s.push_back(layers_.front().w.cols());
  for (const auto& l : layers_) s.push_back(l.w.rows());
  return s;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

std::vector<double> Mlp::flat() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
    out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return out;
}

void Mlp::set_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) throw std::invalid_argument("flat parameter length mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    std::copy_n(values.begin() + k, l.w.size(), l.w.data());
    k += l.w.size();
    std::copy_n(values.begin() + k, l.b.size(), l.b.data());
    k += l.b.size();
  }
}

namespace {

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // a_0 = x, ..., a_L
};

ForwardCache forward_cached(const Mlp& net, const Eigen::MatrixXd& x) {
  ForwardCache c;
  c.activations.push_back(net.input_scale() * x);
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].w * c.activations.back();
    z.colwise() += layers[l].b;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    c.activations.push_back(std::move(z));
  }
  return c;
}

void check_batch(const Mlp& net, const Eigen::MatrixXd& x, std::span<const std::uint32_t> actions,
                 std::span<const double> targets) {
  if (static_cast<std::size_t>(x.cols()) != actions.size() || actions.size() != targets.size()) {
    throw std::invalid_argument("minibatch, actions and targets differ in length");
  }
  if (x.cols() == 0) throw std::invalid_argument("empty minibatch");
  for (auto a : actions) {
    if (a >= net.output_size()) throw std::invalid_argument("action outside network output range");
  }
}

}  // namespace

Gradient loss_gradient(const Mlp& net, const Eigen::MatrixXd& x, std::span<const std::uint32_t> actions,
                       std::span<const double> targets) {
  check_batch(net, x, actions, targets);
  const auto cache = forward_cached(net, x);
  const auto& layers = net.layers();
  const Eigen::Index n = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.output_size()), n);
  Gradient g;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = cache.activations.back()(actions[i], i) - targets[i];
    g.loss += 0.5 * r * r * inv_n;
    delta(actions[i], i) = r * inv_n;
  }
  if (!std::isfinite(g.loss)) throw NumericalError("non-finite loss in gradient computation");

  g.layers.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& a_prev = cache.activations[l];
    g.layers[l].w = delta * a_prev.transpose();
    g.layers[l].b = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers[l].w.transpose() * delta;
      delta = back.cwiseProduct((a_prev.array() > 0.0).cast<double>().matrix());
    }
  }
  for (const auto& gl : g.layers) {
    if (!gl.w.allFinite() || !gl.b.allFinite()) throw NumericalError("non-finite gradient");
  }
  return g;
}

double loss_value(const Mlp& net, const Eigen::MatrixXd& x, std::span<const std::uint32_t> actions,
                  std::span<const double> targets) {
  check_batch(net, x, actions, targets);
  const Eigen::MatrixXd q = net.forward_batch(x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const double r = q(actions[i], i) - targets[i];
    loss += 0.5 * r * r;
  }
  return loss / static_cast<double>(x.cols());
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
}

void Optimizer::apply(Mlp& net, const Gradient& grad) {
  auto& layers = net.layers();
  if (grad.layers.size() != layers.size()) throw std::invalid_argument("gradient shape mismatch");
  if (kind_ == OptimizerKind::kSgd) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].w -= lr_ * grad.layers[l].w;
      layers[l].b -= lr_ * grad.layers[l].b;
    }
    return;
  }
  if (m_.empty()) {
    for (const auto& l : layers) {
      m_.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()), Eigen::VectorXd::Zero(l.b.size())});
    }
    v_ = m_;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto step = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    step(layers[l].w, grad.layers[l].w, m_[l].w, v_[l].w);
    step(layers[l].b, grad.layers[l].b, m_[l].b, v_[l].b);
  }
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w(l.w.data(), l.w.data() + l.w.size());
    std::vector<double> b(l.b.data(), l.b.data() + l.b.size());
    layers.push_back({{"rows", l.w.rows()}, {"cols", l.w.cols()}, {"w_col_major", w}, {"b", b}});
  }
  return {{"activation", "relu"},
          {"output_activation", "identity"},
          {"input_scale", net.input_scale()},
          {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  std::vector<Layer> layers;
  for (const auto& jl : j.at("layers")) {
    const auto rows = jl.at("rows").get<Eigen::Index>();
    const auto cols = jl.at("cols").get<Eigen::Index>();
    const auto w = jl.at("w_col_major").get<std::vector<double>>();
    const auto b = jl.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
      throw std::invalid_argument("layer data does not match its declared shape");
    }
    Layer l{Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols),
            Eigen::Map<const Eigen::VectorXd>(b.data(), rows)};
    if (!l.w.allFinite() || !l.b.allFinite()) throw std::invalid_argument("non-finite network parameter");
    layers.push_back(std::move(l));
  }
  Mlp net(std::move(layers));
  net.set_input_scale(j.value("input_scale", 1.0));
  return net;
}

}  // namespace uvls::learn
