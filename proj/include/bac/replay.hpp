#pragma once

// Bounded FIFO transition store with uniform with-replacement sampling.

#include <cstdint>
#include <vector>

#include "bac/rng.hpp"

namespace bac {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  // n independent uniform draws over current contents; buffer must be
  // non-empty.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertion_count() const { return insertions_; }
  const Transition& at(std::size_t logical_index) const;  // 0 = oldest
  void clear();
  void set_insertion_count(std::uint64_t count) { insertions_ = count; }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  std::uint64_t insertions_ = 0;
};

}  // namespace bac
