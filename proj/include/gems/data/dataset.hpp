#pragma once

#include "gems/sim/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace gems::data {

using sim::ClickVector;
using sim::Slate;

struct LoggedTurn {
  Slate slate;
  ClickVector clicks;
};

struct LoggedTrajectory {
  std::uint64_t user_seed = 0;
  std::vector<LoggedTurn> turns;
};

inline bool operator==(const LoggedTurn& a, const LoggedTurn& b) {
  return a.slate == b.slate && a.clicks == b.clicks;
}
inline bool operator==(const LoggedTrajectory& a, const LoggedTrajectory& b) {
  return a.user_seed == b.user_seed && a.turns == b.turns;
}

/// Logged interactions plus the header fields of the on-disk format.
struct Dataset {
  static constexpr std::uint32_t kVersion = 1;

  int slate_size = 0;
  int episode_length = 0;
  std::uint64_t config_hash = 0;
  std::vector<LoggedTrajectory> trajectories;

  std::size_t num_turns() const;
  std::size_t num_clicks() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Slate of the epsilon-greedy logging policy for one user state: every slot
/// is, with probability epsilon, a uniform item; otherwise the most relevant
/// item not yet placed in this slate.
Slate epsilon_greedy_slate(const sim::DisclosedView& view, const sim::SimConfig& cfg, double epsilon, Rng& rng);

/// Rolls `num_trajectories` fresh users through the simulator under the
/// epsilon-greedy oracle logging policy.
Dataset generate_dataset(const sim::SimConfig& cfg, const sim::ItemCatalog& catalog, int num_trajectories,
                         double epsilon, std::uint64_t seed);

/// Layout: magic "GEMSDATA", u32 version, u32 k, u32 T, u32 num_trajectories,
/// u64 SimConfig hash; then per trajectory a u64 user seed followed by T
/// fixed-width turn records (k x i32 item ids, ceil(k/8) bytes of packed
/// click bits, LSB first).
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace gems::data
