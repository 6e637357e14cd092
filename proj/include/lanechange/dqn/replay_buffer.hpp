#pragma once

#include <cstddef>
#include <vector>

#include "lanechange/dqn/network.hpp"
#include "lanechange/random.hpp"

namespace lanechange::dqn {

// Fixed-capacity FIFO of transitions with uniform sampling without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;
  // Indices into chronological order (0 = oldest).
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;

  const Transition& at(std::size_t chronological_index) const;
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  // Oldest first.
  std::vector<Transition> chronological() const;

  bool operator==(const ReplayBuffer&) const = default;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::vector<Transition> items_;
};

}  // namespace lanechange::dqn
