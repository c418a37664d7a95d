#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace uvls::learn {

// Finite MDP with an explicit kernel: outcomes[s][a] lists (probability,
// next state, reward).
struct ToyMdp {
  struct Outcome {
    double probability;
    std::size_t next;
    double reward;
  };
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<std::vector<std::vector<Outcome>>> outcomes;

  void validate() const;
};

using QTable = std::vector<std::vector<double>>;

// Q-learning with uniform random behavior from uniformly drawn start states;
// each episode runs `steps_per_episode` transitions.
QTable tabular_q_reference(const ToyMdp& mdp, double alpha, double gamma, std::size_t episodes,
                           std::uint64_t seed, std::size_t steps_per_episode = 20);

QTable value_iteration(const ToyMdp& mdp, double gamma, double tolerance = 1e-13,
                       std::size_t max_iterations = 100000);

double max_abs_difference(const QTable& a, const QTable& b);

}  // namespace uvls::learn
