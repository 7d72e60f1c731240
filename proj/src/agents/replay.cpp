#include "gems/agents/replay.hpp"

#include <stdexcept>

namespace gems::agents {

std::span<const Observation> Transition::history() const {
  return std::span<const Observation>(episode->observations).first(static_cast<std::size_t>(t));
}

std::span<const Observation> Transition::next_history() const {
  return std::span<const Observation>(episode->observations).first(static_cast<std::size_t>(t) + 1);
}

const Eigen::VectorXd& Transition::action() const { return episode->actions.at(static_cast<std::size_t>(t)); }

double Transition::reward() const { return episode->rewards.at(static_cast<std::size_t>(t)); }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (!t.episode || t.t < 0 || static_cast<std::size_t>(t.t) >= t.episode->observations.size()) {
    throw std::invalid_argument("ReplayBuffer: transition does not point into its episode");
  }
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("ReplayBuffer: sample from empty buffer");
  std::uniform_int_distribution<std::size_t> dist(0, items_.size() - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = dist(rng);
  return out;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) out.push_back(items_[i]);
  return out;
}

}  // namespace gems::agents
