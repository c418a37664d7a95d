#include "uvls/learn/dqn.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uvls::learn {

using nlohmann::json;

void validate(const TrainConfig& c) {
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0, 1]");
  if (!(c.epsilon_decay > 0.0 && c.epsilon_decay <= 1.0)) {
    throw std::invalid_argument("epsilon decay must be in (0, 1]");
  }
  if (!(c.epsilon0 >= 0.0 && c.epsilon0 <= 1.0)) throw std::invalid_argument("epsilon0 must be in [0, 1]");
  if (!(c.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
  if (c.updates_per_step == 0) throw std::invalid_argument("updates per step must be positive");
  if (c.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (c.batch_size > c.expert_capacity + c.random_capacity) {
    throw std::invalid_argument("batch size exceeds total replay capacity");
  }
  if (!(c.input_scale > 0.0)) throw std::invalid_argument("input scale must be positive");
  if (c.double_q && c.target_sync == 0) throw std::invalid_argument("double_q needs a target network");
  for (auto h : c.hidden) {
    if (h == 0) throw std::invalid_argument("hidden layer of width 0");
  }
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"gamma", c.gamma},
          {"epsilon_decay", c.epsilon_decay},
          {"epsilon0", c.epsilon0},
          {"episodes", c.episodes},
          {"batch_size", c.batch_size},
          {"target_sync", c.target_sync},
          {"double_q", c.double_q},
          {"updates_per_step", c.updates_per_step},
          {"hidden", c.hidden},
          {"input_scale", c.input_scale},
          {"optimizer", c.optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
          {"expert_capacity", c.expert_capacity},
          {"random_capacity", c.random_capacity},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.gamma = j.value("gamma", c.gamma);
  c.epsilon_decay = j.value("epsilon_decay", c.epsilon_decay);
  c.epsilon0 = j.value("epsilon0", c.epsilon0);
  c.episodes = j.value("episodes", c.episodes);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.target_sync = j.value("target_sync", c.target_sync);
  c.double_q = j.value("double_q", c.double_q);
  c.updates_per_step = j.value("updates_per_step", c.updates_per_step);
  c.hidden = j.value("hidden", c.hidden);
  c.input_scale = j.value("input_scale", c.input_scale);
  const auto opt = j.value("optimizer", std::string("sgd"));
  if (opt == "sgd") {
    c.optimizer = OptimizerKind::kSgd;
  } else if (opt == "adam") {
    c.optimizer = OptimizerKind::kAdam;
  } else {
    throw std::invalid_argument("unknown optimizer '" + opt + "'");
  }
  c.expert_capacity = j.value("expert_capacity", c.expert_capacity);
  c.random_capacity = j.value("random_capacity", c.random_capacity);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::vector<std::size_t> layer_sizes(const TrainConfig& c, std::size_t inputs, std::size_t actions) {
  std::vector<std::size_t> s{inputs};
  s.insert(s.end(), c.hidden.begin(), c.hidden.end());
  s.push_back(actions);
  return s;
}

double epsilon_after(const TrainConfig& c, std::size_t episodes) {
  double eps = c.epsilon0;
  for (std::size_t k = 0; k < episodes; ++k) eps *= c.epsilon_decay;
  return eps;
}

std::uint32_t argmax(const Eigen::VectorXd& q) {
  if (q.size() == 0) throw std::invalid_argument("argmax of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return static_cast<std::uint32_t>(best);
}

double td_target(const Transition& t, const Mlp& net, double gamma) {
  if (t.terminal) return t.reward;
  return t.reward + gamma * net.forward(t.next_state).maxCoeff();
}

std::vector<double> td_targets(std::span<const Transition* const> batch, const Mlp& net, double gamma,
                               const Mlp* selector) {
  std::vector<double> y(batch.size());
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch[i]->reward;
    if (!batch[i]->terminal) live.push_back(i);
  }
  if (live.empty()) return y;
  const auto n_in = static_cast<Eigen::Index>(net.input_size());
  Eigen::MatrixXd next(n_in, static_cast<Eigen::Index>(live.size()));
  for (std::size_t c = 0; c < live.size(); ++c) {
    const auto& s = batch[live[c]]->next_state;
    if (static_cast<Eigen::Index>(s.size()) != n_in) throw std::invalid_argument("next-state length mismatch");
    next.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(s.data(), n_in);
  }
  const Eigen::MatrixXd q = net.forward_batch(next);
  if (selector) {
    const Eigen::MatrixXd pick = selector->forward_batch(next);
    for (std::size_t c = 0; c < live.size(); ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      y[live[c]] += gamma * q(static_cast<Eigen::Index>(argmax(pick.col(col))), col);
    }
    return y;
  }
  for (std::size_t c = 0; c < live.size(); ++c) {
    y[live[c]] += gamma * q.col(static_cast<Eigen::Index>(c)).maxCoeff();
  }
  return y;
}

env::ActionIndex act(const Mlp& net, std::span<const double> state) { return {argmax(net.forward(state))}; }

env::ActionIndex epsilon_greedy(const Mlp& net, std::span<const double> state, double epsilon,
                                std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(net.output_size() - 1));
    return {pick(rng)};
  }
  return act(net, state);
}

TimedAction act_timed(const Mlp& net, std::span<const double> state) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = act(net, state);
  return {a, std::chrono::steady_clock::now() - t0};
}

json to_json(const Checkpoint& c) {
  return {{"format_version", Checkpoint::kFormatVersion},
          {"params", to_json(c.params)},
          {"config", to_json(c.config)},
          {"episode", c.episode},
          {"epsilon", c.epsilon},
          {"rng_state", c.rng_state}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (j.at("format_version").get<int>() != Checkpoint::kFormatVersion) {
    throw std::invalid_argument("unsupported checkpoint format_version");
  }
  Checkpoint c;
  c.params = mlp_from_json(j.at("params"));
  c.config = train_config_from_json(j.at("config"));
  c.episode = j.at("episode").get<std::size_t>();
  c.epsilon = j.at("epsilon").get<double>();
  c.rng_state = j.at("rng_state").get<std::string>();
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << to_json(c).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  try {
    return checkpoint_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed checkpoint: " + std::string(e.what()));
  }
}

namespace {

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Eigen::MatrixXd stack_states(std::span<const Transition* const> batch, std::size_t n_in) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n_in), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t c = 0; c < batch.size(); ++c) {
    if (batch[c]->state.size() != n_in) throw std::invalid_argument("state length mismatch in replay");
    x.col(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::VectorXd>(batch[c]->state.data(), static_cast<Eigen::Index>(n_in));
  }
  return x;
}

}  // namespace

TrainResult train(env::Environment& env, std::span<const env::ScenarioSpec> pool,
                  std::span<const Transition> expert, const TrainConfig& config,
                  const EpisodeCallback& on_episode) {
  validate(config);
  if (config.episodes > 0 && pool.empty()) throw std::invalid_argument("training needs a scenario pool");

  std::mt19937_64 rng(config.seed);
  const std::size_t n_in = env.state_size();
  Mlp net = Mlp::glorot(layer_sizes(config, n_in, env.n_actions()), rng);
  net.set_input_scale(config.input_scale);
  Mlp target = net;
  Optimizer opt(config.optimizer, config.learning_rate);

  TrainResult result{{}, {}, {}, 0, ReplayBuffer(config.expert_capacity, config.random_capacity)};
  for (const auto& t : expert) {
    if (t.state.size() != n_in) throw std::invalid_argument("expert transition has wrong state length");
    result.buffer.add(t);
  }

  double eps = config.epsilon0;
  std::uniform_int_distribution<std::size_t> pick(0, pool.empty() ? 0 : pool.size() - 1);
  std::size_t episode = 0;
  std::size_t consecutive_rejects = 0;
  while (episode < config.episodes) {
    const auto& spec = pool[pick(rng)];
    env::StackedState state;
    try {
      state = env.reset(spec);
    } catch (const env::ScenarioRejected&) {
      result.rejected.push_back(spec.id);
      if (++consecutive_rejects > 10 * pool.size()) {
        throw std::runtime_error("every scenario in the pool is rejected");
      }
      continue;
    }
    consecutive_rejects = 0;

    auto s = state.flatten();
    double loss_sum = 0.0;
    std::size_t loss_n = 0;
    while (!env.terminal()) {
      const auto a = epsilon_greedy(net, s, eps, rng);
      auto step = env.step(a);
      auto next = step.state.flatten();
      result.buffer.add({s, a, step.reward, next, step.terminal, Origin::kRandom});
      s = std::move(next);

      for (std::size_t u = 0; u < config.updates_per_step; ++u) {
        const auto batch = result.buffer.sample(config.batch_size, rng);
        const auto& tnet = config.target_sync > 0 ? target : net;
        const auto y = td_targets(batch, tnet, config.gamma, config.double_q ? &net : nullptr);
        std::vector<std::uint32_t> actions;
        actions.reserve(batch.size());
        for (const auto* t : batch) actions.push_back(t->action.index);
        const auto grad = loss_gradient(net, stack_states(batch, n_in), actions, y);
        opt.apply(net, grad);
        loss_sum += grad.loss;
        ++loss_n;
        ++result.updates;
        if (config.target_sync > 0 && result.updates % config.target_sync == 0) target = net;
      }
    }

    const auto ep = env.result();
    CurvePoint p;
    p.episode = episode;
    p.scenario_id = spec.id;
    p.total_reward = ep.total_reward;
    p.success = ep.success;
    p.joint_reward = ep.total_reward * ep.success;
    p.epsilon = eps;
    p.mean_loss = loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0;
    p.remaining_load_pct = ep.final_remaining_load_pct;
    result.curve.push_back(p);
    if (on_episode) on_episode(p);

    eps *= config.epsilon_decay;
    ++episode;
  }

  result.checkpoint = {std::move(net), config, episode, eps, rng_state(rng)};
  return result;
}

}  // namespace uvls::learn
