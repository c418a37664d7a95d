#pragma once

#include <deque>
#include <random>
#include <vector>

#include "uvls/learn/transition.hpp"

namespace uvls::learn {

inline constexpr std::size_t kExpertBufferCapacity = 2000;
inline constexpr std::size_t kRandomBufferCapacity = 6000;

// Two FIFO partitions keyed by transition origin.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t expert_capacity = kExpertBufferCapacity,
                        std::size_t random_capacity = kRandomBufferCapacity);

  void add(Transition t);

  std::size_t size() const { return expert_.size() + random_.size(); }
  std::size_t expert_size() const { return expert_.size(); }
  std::size_t random_size() const { return random_.size(); }
  std::size_t expert_capacity() const { return expert_cap_; }
  std::size_t random_capacity() const { return random_cap_; }
  bool empty() const { return size() == 0; }

  // Index over the union: [0, expert_size) expert, then random.
  const Transition& at(std::size_t i) const;

  // Uniform without replacement over both partitions; all entries when fewer
  // than n are stored. Throws std::logic_error on an empty buffer.
  std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

  std::vector<Transition> snapshot() const;

 private:
  std::size_t expert_cap_, random_cap_;
  std::deque<Transition> expert_, random_;
};

}  // namespace uvls::learn
