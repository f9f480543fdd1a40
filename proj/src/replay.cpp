#include "bac/replay.hpp"

#include <stdexcept>

namespace bac {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  storage_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
  storage_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
  ++insertions_;
}

const Transition& ReplayBuffer::at(std::size_t logical_index) const {
  if (logical_index >= size_) throw std::out_of_range("ReplayBuffer: index out of range");
  const std::size_t oldest = size_ == capacity_ ? head_ : 0;
  return storage_[(oldest + logical_index) % capacity_];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw std::invalid_argument("ReplayBuffer: sample from empty buffer");
  std::vector<Transition> batch;
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.push_back(at(rng.uniform_int(size_)));
  return batch;
}

void ReplayBuffer::clear() {
  head_ = 0;
  size_ = 0;
}

}  // namespace bac
