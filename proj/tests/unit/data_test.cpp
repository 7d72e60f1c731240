#include "gems/data/dataset.hpp"
#include "gems/data/mf.hpp"
#include "gems/util/binary_io.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace gems;
using namespace gems::data;
using sim::SimConfig;

namespace {

SimConfig desk_config() {
  SimConfig cfg;
  cfg.num_items = 100;
  cfg.slate_size = 5;
  cfg.episode_length = 50;
  return cfg;
}

double chi2_critical(int dof, double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(dof), alpha));
}

}  // namespace

TEST(Logging, FullyRandomSlotsAreUniform) {
  SimConfig cfg = desk_config();
  const auto catalog = sim::generate_item_catalog(cfg, 1);
  const auto user = sim::sample_user(cfg, 2);
  const sim::DisclosedView view(catalog, user);
  Rng rng(3);
  std::vector<double> counts(static_cast<std::size_t>(cfg.num_items), 0.0);
  const int slates = 20000;
  for (int s = 0; s < slates; ++s) {
    for (auto i : epsilon_greedy_slate(view, cfg, 1.0, rng)) counts[static_cast<std::size_t>(i)] += 1.0;
  }
  const double total = slates * cfg.slate_size;
  ASSERT_EQ(std::accumulate(counts.begin(), counts.end(), 0.0), total);
  const double expected = total / cfg.num_items;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  EXPECT_LT(stat, chi2_critical(cfg.num_items - 1, 0.01));
}

TEST(Logging, GreedyEqualsTopK) {
  SimConfig cfg = desk_config();
  cfg.episode_length = 10;
  const auto catalog = sim::generate_item_catalog(cfg, 5);
  const Dataset data = generate_dataset(cfg, catalog, 3, 0.0, 9);
  for (const auto& traj : data.trajectories) {
    sim::UserState user = sim::sample_user(cfg, traj.user_seed);
    for (const auto& turn : traj.turns) {
      const Eigen::VectorXd rel = sim::relevance_all(user, catalog, cfg);
      std::vector<int> order(static_cast<std::size_t>(cfg.num_items));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rel(a) > rel(b); });
      const sim::Slate top(order.begin(), order.begin() + cfg.slate_size);
      EXPECT_EQ(turn.slate, top);
      sim::apply_feedback(user, turn.slate, turn.clicks, catalog, cfg);
    }
  }
}

TEST(Logging, SmallFileRoundTrip) {
  SimConfig cfg = desk_config();
  cfg.slate_size = 10;
  cfg.episode_length = 3;
  const auto catalog = sim::generate_item_catalog(cfg, 11);
  const Dataset data = generate_dataset(cfg, catalog, 2, 0.5, 12);
  EXPECT_EQ(data.num_turns(), 6u);
  std::stringstream buf;
  write_dataset(buf, data);
  const std::string bytes = buf.str();
  // header 8 + 4*4 + 8, then 2 * (8 + 3 * (10*4 + 2))
  EXPECT_EQ(bytes.size(), 32u + 2u * (8u + 3u * 42u));
  std::stringstream in(bytes);
  const Dataset back = read_dataset(in);
  EXPECT_EQ(back, data);
  std::stringstream again;
  write_dataset(again, back);
  EXPECT_EQ(again.str(), bytes);
}

TEST(Logging, RejectsBadMagicAndTruncation) {
  std::stringstream bad("NOTADATA........................");
  EXPECT_THROW(read_dataset(bad), io::FormatError);
  SimConfig cfg = desk_config();
  cfg.episode_length = 2;
  const auto catalog = sim::generate_item_catalog(cfg, 1);
  std::stringstream buf;
  write_dataset(buf, generate_dataset(cfg, catalog, 1, 0.5, 1));
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream cut(bytes);
  EXPECT_THROW(read_dataset(cut), io::FormatError);
}

TEST(Logging, InvalidEpsilon) {
  SimConfig cfg = desk_config();
  const auto catalog = sim::generate_item_catalog(cfg, 1);
  EXPECT_THROW(generate_dataset(cfg, catalog, 1, 1.5, 1), std::invalid_argument);
  EXPECT_THROW(generate_dataset(cfg, catalog, -1, 0.5, 1), std::invalid_argument);
}

TEST(Logging, Deterministic) {
  SimConfig cfg = desk_config();
  cfg.episode_length = 5;
  const auto catalog = sim::generate_item_catalog(cfg, 1);
  EXPECT_EQ(generate_dataset(cfg, catalog, 4, 0.5, 77), generate_dataset(cfg, catalog, 4, 0.5, 77));
  EXPECT_FALSE(generate_dataset(cfg, catalog, 4, 0.5, 77) == generate_dataset(cfg, catalog, 4, 0.5, 78));
}

TEST(Logging, ClickRateDecreasesWithRank) {
  SimConfig cfg = desk_config();
  const auto catalog = sim::generate_item_catalog(cfg, 21);
  const Dataset data = generate_dataset(cfg, catalog, 200, 0.5, 22);
  std::vector<double> clicks(static_cast<std::size_t>(cfg.slate_size), 0.0);
  for (const auto& traj : data.trajectories) {
    for (const auto& turn : traj.turns) {
      for (std::size_t j = 0; j < clicks.size(); ++j) clicks[j] += turn.clicks[j];
    }
  }
  for (std::size_t j = 1; j < clicks.size(); ++j) EXPECT_GT(clicks[j - 1], clicks[j]) << "rank " << j;
}

TEST(Mf, LossDecreasesAfterFirstEpoch) {
  SimConfig cfg = desk_config();
  const auto catalog = sim::generate_item_catalog(cfg, 31);
  const Dataset data = generate_dataset(cfg, catalog, 50, 0.5, 32);
  ASSERT_GE(data.num_clicks(), 100u);
  MfConfig mc;
  mc.epochs = 3;
  const MfResult r = train_mf(data, cfg.num_items, mc, 33);
  ASSERT_EQ(r.epoch_loss.size(), 3u);
  EXPECT_LT(r.epoch_loss[0], r.initial_loss);
  EXPECT_EQ(r.item_embeddings.rows(), cfg.num_items);
  EXPECT_EQ(r.item_embeddings.cols(), mc.embed_dim);
  EXPECT_TRUE(r.item_embeddings.allFinite());
  EXPECT_LE(r.item_embeddings.rowwise().norm().maxCoeff(), 10.0);
}

TEST(Mf, CoClickedItemsEndCloser) {
  // Two user groups over 20 items: group A always clicks items 0 and 1,
  // group B always clicks items 2 and 3. Other slots are never clicked.
  Dataset data;
  data.slate_size = 4;
  data.episode_length = 5;
  Rng rng(41);
  for (int u = 0; u < 200; ++u) {
    LoggedTrajectory traj;
    traj.user_seed = static_cast<std::uint64_t>(u);
    const bool group_a = u % 2 == 0;
    for (int t = 0; t < data.episode_length; ++t) {
      LoggedTurn turn;
      turn.slate = group_a ? sim::Slate{0, 1, 0, 0} : sim::Slate{2, 3, 0, 0};
      turn.slate[2] = uniform_int(rng, 4, 19);
      turn.slate[3] = uniform_int(rng, 4, 19);
      turn.clicks = {1, 1, 0, 0};
      traj.turns.push_back(turn);
    }
    data.trajectories.push_back(traj);
  }
  MfConfig mc;
  mc.epochs = 20;
  const Eigen::MatrixXd v = train_mf(data, 20, mc, 42).item_embeddings;
  auto cosine = [&](int a, int b) { return v.row(a).dot(v.row(b)) / (v.row(a).norm() * v.row(b).norm()); };
  EXPECT_GT(cosine(0, 1), cosine(0, 2));
  EXPECT_GT(cosine(2, 3), cosine(1, 3));
}

TEST(Mf, SeedDeterminism) {
  SimConfig cfg = desk_config();
  cfg.episode_length = 10;
  const auto catalog = sim::generate_item_catalog(cfg, 51);
  const Dataset data = generate_dataset(cfg, catalog, 20, 0.5, 52);
  MfConfig mc;
  mc.epochs = 2;
  const auto a = train_mf(data, cfg.num_items, mc, 7).item_embeddings;
  const auto b = train_mf(data, cfg.num_items, mc, 7).item_embeddings;
  const auto c = train_mf(data, cfg.num_items, mc, 8).item_embeddings;
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(Mf, ZeroClicksRejected) {
  Dataset data;
  data.slate_size = 2;
  data.episode_length = 1;
  data.trajectories.push_back({0, {LoggedTurn{{0, 1}, {0, 0}}}});
  EXPECT_THROW(train_mf(data, 5, MfConfig{}, 1), std::invalid_argument);
}
