#include "gems/belief/belief.hpp"

#include "support/finite_difference.hpp"

#include <gtest/gtest.h>

using namespace gems;
using namespace gems::belief;
using ad::Matrix;

namespace {

struct Fixture {
  BeliefEncoder enc;
  ad::ParameterStore store;
};

Fixture make(int belief_dim = 6, int window = 20, std::uint64_t seed = 1) {
  Rng rng(seed);
  BeliefConfig cfg;
  cfg.belief_dim = belief_dim;
  cfg.truncation_window = window;
  Fixture f{BeliefEncoder(cfg, gaussian_matrix(rng, 10, 3), 3), {}};
  f.enc.init(f.store, rng);
  return f;
}

std::vector<Observation> random_history(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Observation> h;
  for (int t = 0; t < n; ++t) {
    Observation o;
    for (int j = 0; j < 3; ++j) {
      o.slate.push_back(uniform_int(rng, 0, 9));
      o.clicks.push_back(static_cast<std::uint8_t>(uniform01(rng) < 0.4));
    }
    h.push_back(o);
  }
  return h;
}

BeliefState fold(const Fixture& f, std::span<const Observation> hist) {
  BeliefState b = init_belief(f.enc.config());
  for (const auto& o : hist) b = f.enc.update(b, o.slate, o.clicks, f.store);
  return b;
}

}  // namespace

TEST(Belief, InitIsZero) {
  BeliefConfig cfg;
  const BeliefState a = init_belief(cfg);
  const BeliefState b = init_belief(cfg);
  EXPECT_EQ(a.hidden.size(), 64);
  EXPECT_TRUE(a.hidden.isZero(0.0));
  EXPECT_EQ(a.turn, 0);
  EXPECT_EQ(a.hidden, b.hidden);
}

TEST(Belief, ZeroParametersHalveState) {
  Fixture f = make();
  for (auto& p : f.store) p.value.setZero();
  BeliefState b{Eigen::VectorXd::LinSpaced(6, -0.9, 0.8), 4};
  const BeliefState next = f.enc.update(b, {1, 2, 3}, {1, 0, 1}, f.store);
  EXPECT_TRUE(next.hidden.isApprox(0.5 * b.hidden, 1e-15));
  EXPECT_EQ(next.turn, 5);
}

TEST(Belief, SlotOrderMatters) {
  const Fixture f = make();
  const BeliefState b0 = init_belief(f.enc.config());
  const BeliefState a = f.enc.update(b0, {1, 2, 3}, {1, 0, 0}, f.store);
  const BeliefState b = f.enc.update(b0, {2, 1, 3}, {0, 1, 0}, f.store);
  EXPECT_GT((a.hidden - b.hidden).norm(), 1e-6);
}

TEST(Belief, UnknownItemThrows) {
  const Fixture f = make();
  EXPECT_THROW(f.enc.update(init_belief(f.enc.config()), {1, 2, 10}, {0, 0, 0}, f.store), std::out_of_range);
  EXPECT_THROW(f.enc.update(init_belief(f.enc.config()), {1, 2}, {0, 0}, f.store), std::invalid_argument);
}

TEST(Belief, ChainedGradientMatchesFiniteDifferences) {
  Fixture f = make(4, 20, 2);
  const auto hist = random_history(3, 3);
  const std::vector<std::span<const Observation>> batch{std::span<const Observation>(hist)};
  Rng rng(4);
  const Matrix w = gaussian_matrix(rng, 1, 4);
  auto loss = [&](ad::Tape& tape) {
    Var h = f.enc.batch(tape, f.store, batch);
    return ad::sum(ad::cwise_product(h, tape.constant(w)));
  };
  const auto r = oracle::check_gradients(loss, {&f.store});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Belief, HiddenStaysInOpenUnitInterval) {
  Fixture f = make(6, 20, 5);
  for (auto& p : f.store) p.value *= 8.0;
  const auto hist = random_history(60, 6);
  BeliefState b = init_belief(f.enc.config());
  for (const auto& o : hist) {
    b = f.enc.update(b, o.slate, o.clicks, f.store);
    ASSERT_TRUE(b.hidden.allFinite());
    ASSERT_LT(b.hidden.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Belief, PureFunctionOfHistory) {
  const Fixture f = make();
  const auto hist = random_history(7, 7);
  EXPECT_EQ(fold(f, hist).hidden, fold(f, hist).hidden);
}

TEST(Belief, BatchMatchesSequentialWithMixedLengths) {
  Fixture f = make();
  const auto h1 = random_history(5, 8);
  const auto h2 = random_history(2, 9);
  const std::vector<Observation> h3;
  const std::vector<std::span<const Observation>> batch{h1, h2, h3};
  ad::Tape tape;
  const Matrix out = f.enc.batch(tape, f.store, batch, false).value();
  EXPECT_TRUE(out.row(0).transpose().isApprox(fold(f, h1).hidden, 1e-13));
  EXPECT_TRUE(out.row(1).transpose().isApprox(fold(f, h2).hidden, 1e-13));
  EXPECT_TRUE(out.row(2).isZero(0.0));
}

TEST(Belief, TruncationUsesLastWindow) {
  Fixture f = make(6, 4);
  const auto hist = random_history(9, 10);
  const std::vector<std::span<const Observation>> batch{hist};
  ad::Tape tape;
  const Matrix out = f.enc.batch(tape, f.store, batch, false).value();
  const auto tail = std::span<const Observation>(hist).subspan(5);
  EXPECT_TRUE(out.row(0).transpose().isApprox(fold(f, tail).hidden, 1e-13));
  EXPECT_FALSE(out.row(0).transpose().isApprox(fold(f, hist).hidden, 1e-6));
}

TEST(Belief, SourceNames) {
  for (auto s : {EmbeddingSource::kGems, EmbeddingSource::kMf, EmbeddingSource::kIdeal}) {
    EXPECT_EQ(parse_embedding_source(to_string(s)), s);
  }
  EXPECT_THROW(parse_embedding_source("nope"), std::invalid_argument);
}
