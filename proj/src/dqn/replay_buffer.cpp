#include "lanechange/dqn/replay_buffer.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lanechange::dqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t chronological_index) const {
  return items_.at((head_ + chronological_index) % items_.size());
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (batch_size > items_.size())
    throw std::invalid_argument("ReplayBuffer::sample: batch of " + std::to_string(batch_size) +
                                " requested from " + std::to_string(items_.size()) + " items");
  // Floyd's algorithm: a uniformly random subset, then a shuffle of its order.
  const std::size_t n = items_.size();
  std::vector<std::size_t> picked;
  picked.reserve(batch_size);
  for (std::size_t j = n - batch_size; j < n; ++j) {
    const std::size_t t = uniform_index(rng, j + 1);
    if (std::find(picked.begin(), picked.end(), t) == picked.end())
      picked.push_back(t);
    else
      picked.push_back(j);
  }
  for (std::size_t i = picked.size(); i > 1; --i)
    std::swap(picked[i - 1], picked[uniform_index(rng, i)]);
  return picked;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i : sample_indices(batch_size, rng)) batch.push_back(at(i));
  return batch;
}

std::vector<Transition> ReplayBuffer::chronological() const {
  std::vector<Transition> out;
  out.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(at(i));
  return out;
}

}  // namespace lanechange::dqn
