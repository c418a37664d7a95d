#include "uvls/learn/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uvls::learn {

void ToyMdp::validate() const {
  if (n_states == 0 || n_actions == 0) throw std::invalid_argument("empty MDP");
  if (outcomes.size() != n_states) throw std::invalid_argument("outcome table has wrong state count");
  for (const auto& row : outcomes) {
    if (row.size() != n_actions) throw std::invalid_argument("outcome table has wrong action count");
    for (const auto& list : row) {
      double p = 0.0;
      for (const auto& o : list) {
        if (o.next >= n_states || o.probability < 0.0) throw std::invalid_argument("bad outcome");
        p += o.probability;
      }
      if (std::abs(p - 1.0) > 1e-12) throw std::invalid_argument("outcome probabilities must sum to 1");
    }
  }
}

namespace {
double row_max(const std::vector<double>& r) { return *std::max_element(r.begin(), r.end()); }
}  // namespace

QTable tabular_q_reference(const ToyMdp& mdp, double alpha, double gamma, std::size_t episodes,
                           std::uint64_t seed, std::size_t steps_per_episode) {
  mdp.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> state(0, mdp.n_states - 1);
  std::uniform_int_distribution<std::size_t> action(0, mdp.n_actions - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QTable q(mdp.n_states, std::vector<double>(mdp.n_actions, 0.0));
  for (std::size_t e = 0; e < episodes; ++e) {
    std::size_t s = state(rng);
    for (std::size_t k = 0; k < steps_per_episode; ++k) {
      const std::size_t a = action(rng);
      const auto& list = mdp.outcomes[s][a];
      double x = u(rng);
      std::size_t pick = list.size() - 1;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (x < list[i].probability) {
          pick = i;
          break;
        }
        x -= list[i].probability;
      }
      const auto& o = list[pick];
      q[s][a] += alpha * (o.reward + gamma * row_max(q[o.next]) - q[s][a]);
      s = o.next;
    }
  }
  return q;
}

QTable value_iteration(const ToyMdp& mdp, double gamma, double tolerance, std::size_t max_iterations) {
  mdp.validate();
  QTable q(mdp.n_states, std::vector<double>(mdp.n_actions, 0.0));
  for (std::size_t it = 0; it < max_iterations; ++it) {
    QTable next = q;
    double change = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        double v = 0.0;
        for (const auto& o : mdp.outcomes[s][a]) v += o.probability * (o.reward + gamma * row_max(q[o.next]));
        next[s][a] = v;
        change = std::max(change, std::abs(v - q[s][a]));
      }
    }
    q = std::move(next);
    if (change < tolerance) return q;
  }
  return q;
}

double max_abs_difference(const QTable& a, const QTable& b) {
  double d = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (std::size_t k = 0; k < a[s].size(); ++k) d = std::max(d, std::abs(a[s][k] - b.at(s).at(k)));
  }
  return d;
}

}  // namespace uvls::learn
