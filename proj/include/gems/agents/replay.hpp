#pragma once

#include "gems/belief/belief.hpp"

#include <deque>
#include <memory>

namespace gems::agents {

using belief::Observation;

/// Everything one episode produced. Transitions point into it, so histories
/// are stored once and belief prefixes are recomputed on demand.
struct Episode {
  std::vector<Observation> observations;
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> rewards;
};

/// Turn `t` of an episode: state = observations[0, t), action/reward at t,
/// next state = observations[0, t + 1).
struct Transition {
  std::shared_ptr<const Episode> episode;
  int t = 0;
  bool done = false;

  std::span<const Observation> history() const;
  std::span<const Observation> next_history() const;
  const Eigen::VectorXd& action() const;
  double reward() const;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  /// Appends; the oldest transition is evicted when full.
  void push(Transition t);
  /// `n` draws uniformly with replacement.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

}  // namespace gems::agents
