#include "uvls/learn/replay.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace uvls::learn {

ReplayBuffer::ReplayBuffer(std::size_t expert_capacity, std::size_t random_capacity)
    : expert_cap_(expert_capacity), random_cap_(random_capacity) {}

void ReplayBuffer::add(Transition t) {
  auto& part = t.origin == Origin::kExpert ? expert_ : random_;
  const std::size_t cap = t.origin == Origin::kExpert ? expert_cap_ : random_cap_;
  if (cap == 0) return;
  if (part.size() == cap) part.pop_front();
  part.push_back(std::move(t));
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i < expert_.size()) return expert_[i];
  return random_.at(i - expert_.size());
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  const std::size_t total = size();
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t k = std::min(n, total);
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<const Transition*> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(&at(idx[i]));
  return out;
}

std::vector<Transition> ReplayBuffer::snapshot() const {
  std::vector<Transition> out(expert_.begin(), expert_.end());
  out.insert(out.end(), random_.begin(), random_.end());
  return out;
}

}  // namespace uvls::learn
