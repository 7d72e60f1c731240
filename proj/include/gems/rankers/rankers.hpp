#pragma once

// Slate construction from agent outputs: GeMS decoding and every baseline
// ranker. All functions are pure given their inputs (and rng, when taken).

#include "gems/sim/simulator.hpp"
#include "gems/vae/gems.hpp"

#include <functional>

namespace gems::rankers {

using sim::Slate;

enum class RankerKind { kGems, kTopKMf, kTopKIdeal, kWknn, kSoftmax, kRandom, kOracle, kSlateQ };
std::string to_string(RankerKind k);
RankerKind parse_ranker(const std::string& s);

Slate rank_gems(const Eigen::VectorXd& z, const vae::GemsModel& model);

/// k distinct items with the largest dot product, descending; ties by lowest id.
Slate rank_topk(const Eigen::VectorXd& action, const Eigen::MatrixXd& item_embeddings, int k);

/// Scores a batch of partial-slate representations (one per row).
using PartialSlateCritic = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Wolpertinger-style ranker. The action holds k slot vectors; each slot takes
/// the p nearest unplaced items (Euclidean) and keeps the one whose partial
/// slate (chosen embeddings so far in slot order, zeros after) the critic
/// values most. With p = 1 the critic is never called.
Slate rank_wknn(const Eigen::VectorXd& action, const Eigen::MatrixXd& item_embeddings, int k, int p,
                const PartialSlateCritic& critic);

/// Concatenated embeddings of `slate` with zeros for the slots past `filled`.
Eigen::RowVectorXd slate_representation(const Slate& slate, std::size_t filled, const Eigen::MatrixXd& item_embeddings,
                                        int k);

struct SoftmaxDraw {
  Slate slate;
  double log_prob = 0.0;
};

/// k independent draws (with replacement) from softmax(logits).
SoftmaxDraw rank_softmax(const Eigen::VectorXd& logits, int k, Rng& rng);

/// k distinct uniform items.
Slate rank_random(int num_items, int k, Rng& rng);

/// Top-k items by current true relevance (bored topics masked).
Slate rank_short_term_oracle(const sim::DisclosedView& view, const sim::SimConfig& cfg);

/// SlateQ is outside this implementation; calling it always throws.
[[noreturn]] Slate rank_slateq();

}  // namespace gems::rankers
