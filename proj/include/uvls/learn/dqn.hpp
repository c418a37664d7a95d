#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uvls/env/environment.hpp"
#include "uvls/learn/mlp.hpp"
#include "uvls/learn/replay.hpp"

namespace uvls::learn {

struct TrainConfig {
  double learning_rate = 1e-4;  // alpha
  double gamma = 0.95;
  double epsilon_decay = 0.999;  // eta, per episode
  double epsilon0 = 1.0;
  std::size_t episodes = 3500;
  std::size_t batch_size = 2000;  // N_d
  std::size_t target_sync = 0;    // updates between target copies; 0 = online targets
  std::size_t updates_per_step = 1;
  bool double_q = false;          // online net picks a', target net scores it
  std::vector<std::size_t> hidden{60, 30, 15};
  double input_scale = 100.0;  // deltas enter the network in percent
  OptimizerKind optimizer = OptimizerKind::kSgd;
  std::size_t expert_capacity = kExpertBufferCapacity;
  std::size_t random_capacity = kRandomBufferCapacity;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

std::vector<std::size_t> layer_sizes(const TrainConfig& config, std::size_t inputs, std::size_t actions);

// epsilon after `episodes` decays: eps0 * eta^episodes.
double epsilon_after(const TrainConfig& config, std::size_t episodes);

// Terminal: r. Otherwise r + gamma * max_a Q(s', a). Terminal transitions
// never evaluate the network.
double td_target(const Transition& t, const Mlp& net, double gamma);
// With `selector`, a' = argmax of selector and the bootstrap is Q_net(s', a').
std::vector<double> td_targets(std::span<const Transition* const> batch, const Mlp& net, double gamma,
                               const Mlp* selector = nullptr);

// Lowest index among maximal entries.
std::uint32_t argmax(const Eigen::VectorXd& q);

env::ActionIndex act(const Mlp& net, std::span<const double> state);
env::ActionIndex epsilon_greedy(const Mlp& net, std::span<const double> state, double epsilon,
                                std::mt19937_64& rng);

// Greedy action plus wall-clock latency of the decision.
struct TimedAction {
  env::ActionIndex action;
  std::chrono::nanoseconds latency{0};
};
TimedAction act_timed(const Mlp& net, std::span<const double> state);

struct CurvePoint {
  std::size_t episode = 0;
  std::uint64_t scenario_id = 0;
  double total_reward = 0.0;  // R_k
  int success = 0;            // alpha_k
  double joint_reward = 0.0;  // R_k * alpha_k
  double epsilon = 0.0;
  double mean_loss = 0.0;
  double remaining_load_pct = 100.0;
};

struct Checkpoint {
  static constexpr int kFormatVersion = 1;
  Mlp params;
  TrainConfig config;
  std::size_t episode = 0;
  double epsilon = 1.0;
  std::string rng_state;
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<CurvePoint> curve;
  std::vector<std::uint64_t> rejected;  // scenario ids skipped at reset
  std::size_t updates = 0;
  ReplayBuffer buffer;
};

using EpisodeCallback = std::function<void(const CurvePoint&)>;

// Per episode: sample a scenario, roll out
// epsilon-greedy, store each transition, then updates_per_step minibatch updates
// after every step.
TrainResult train(env::Environment& env, std::span<const env::ScenarioSpec> pool,
                  std::span<const Transition> expert, const TrainConfig& config,
                  const EpisodeCallback& on_episode = {});

}  // namespace uvls::learn
