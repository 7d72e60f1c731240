#include "gems/data/dataset.hpp"

#include "gems/util/binary_io.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace gems::data {
namespace {
constexpr char kMagic[9] = "GEMSDATA";
}

std::size_t Dataset::num_turns() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.turns.size();
  return n;
}

std::size_t Dataset::num_clicks() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) {
    for (const auto& turn : t.turns) n += static_cast<std::size_t>(std::count(turn.clicks.begin(), turn.clicks.end(), 1));
  }
  return n;
}

Slate epsilon_greedy_slate(const sim::DisclosedView& view, const sim::SimConfig& cfg, double epsilon, Rng& rng) {
  const Eigen::VectorXd rel = sim::relevance_all(view.user(), view.catalog(), cfg);
  std::vector<sim::ItemId> order(static_cast<std::size_t>(cfg.num_items));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](sim::ItemId a, sim::ItemId b) { return rel(a) > rel(b); });

  std::vector<bool> placed(static_cast<std::size_t>(cfg.num_items), false);
  std::size_t next_best = 0;
  Slate slate;
  slate.reserve(static_cast<std::size_t>(cfg.slate_size));
  for (int j = 0; j < cfg.slate_size; ++j) {
    sim::ItemId item;
    if (uniform01(rng) < epsilon) {
      item = uniform_int(rng, 0, cfg.num_items - 1);
    } else {
      while (placed[static_cast<std::size_t>(order[next_best])]) ++next_best;
      item = order[next_best];
    }
    placed[static_cast<std::size_t>(item)] = true;
    slate.push_back(item);
  }
  return slate;
}

Dataset generate_dataset(const sim::SimConfig& cfg, const sim::ItemCatalog& catalog, int num_trajectories,
                         double epsilon, std::uint64_t seed) {
  if (num_trajectories < 0) throw std::invalid_argument("num_trajectories must be non-negative");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  Dataset data;
  data.slate_size = cfg.slate_size;
  data.episode_length = cfg.episode_length;
  data.config_hash = cfg.hash();
  data.trajectories.reserve(static_cast<std::size_t>(num_trajectories));
  sim::Environment env(cfg, catalog);
  for (int n = 0; n < num_trajectories; ++n) {
    LoggedTrajectory traj;
    traj.user_seed = derive_seed(seed, "logging-user", static_cast<std::uint64_t>(n));
    Rng policy_rng(derive_seed(seed, "logging-policy", static_cast<std::uint64_t>(n)));
    env.reset(traj.user_seed);
    while (!env.done()) {
      LoggedTurn turn;
      turn.slate = epsilon_greedy_slate(env.disclosed(), cfg, epsilon, policy_rng);
      turn.clicks = env.step(turn.slate).clicks;
      traj.turns.push_back(std::move(turn));
    }
    data.trajectories.push_back(std::move(traj));
  }
  return data;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  io::write_magic(out, kMagic);
  io::write_pod<std::uint32_t>(out, Dataset::kVersion);
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(data.slate_size));
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(data.episode_length));
  io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(data.trajectories.size()));
  io::write_pod<std::uint64_t>(out, data.config_hash);
  const std::size_t k = static_cast<std::size_t>(data.slate_size);
  const std::size_t click_bytes = (k + 7) / 8;
  for (const auto& traj : data.trajectories) {
    if (static_cast<int>(traj.turns.size()) != data.episode_length) {
      throw std::invalid_argument("trajectory length differs from the dataset header");
    }
    io::write_pod<std::uint64_t>(out, traj.user_seed);
    for (const auto& turn : traj.turns) {
      if (turn.slate.size() != k || turn.clicks.size() != k) throw std::invalid_argument("turn width differs from k");
      for (sim::ItemId i : turn.slate) io::write_pod<std::int32_t>(out, i);
      std::vector<std::uint8_t> packed(click_bytes, 0);
      for (std::size_t j = 0; j < k; ++j) {
        if (turn.clicks[j]) packed[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
      }
      out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    }
  }
  if (!out) throw std::runtime_error("dataset write failed");
}

Dataset read_dataset(std::istream& in) {
  io::expect_magic(in, kMagic);
  const auto version = io::read_pod<std::uint32_t>(in);
  if (version != Dataset::kVersion) throw io::FormatError("unsupported dataset version " + std::to_string(version));
  Dataset data;
  data.slate_size = static_cast<int>(io::read_pod<std::uint32_t>(in));
  data.episode_length = static_cast<int>(io::read_pod<std::uint32_t>(in));
  const auto n = io::read_pod<std::uint32_t>(in);
  data.config_hash = io::read_pod<std::uint64_t>(in);
  const std::size_t k = static_cast<std::size_t>(data.slate_size);
  const std::size_t click_bytes = (k + 7) / 8;
  data.trajectories.resize(n);
  for (auto& traj : data.trajectories) {
    traj.user_seed = io::read_pod<std::uint64_t>(in);
    traj.turns.resize(static_cast<std::size_t>(data.episode_length));
    for (auto& turn : traj.turns) {
      turn.slate.resize(k);
      for (auto& i : turn.slate) i = io::read_pod<std::int32_t>(in);
      std::vector<std::uint8_t> packed(click_bytes);
      in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(click_bytes));
      if (in.gcount() != static_cast<std::streamsize>(click_bytes)) throw io::FormatError("truncated dataset");
      turn.clicks.resize(k);
      for (std::size_t j = 0; j < k; ++j) turn.clicks[j] = (packed[j / 8] >> (j % 8)) & 1u;
    }
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dataset(out, data);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace gems::data
