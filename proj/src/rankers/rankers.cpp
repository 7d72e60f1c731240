#include "gems/rankers/rankers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gems::rankers {
namespace {

// Indices of the `count` largest scores, descending, ties to the lowest index.
std::vector<int> top_indices(const Eigen::VectorXd& scores, int count, const std::vector<bool>* excluded = nullptr) {
  std::vector<int> idx;
  for (int i = 0; i < scores.size(); ++i) {
    if (!excluded || !(*excluded)[static_cast<std::size_t>(i)]) idx.push_back(i);
  }
  count = std::min<int>(count, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + count, idx.end(), [&](int a, int b) {
    return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
  });
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace

std::string to_string(RankerKind k) {
  switch (k) {
    case RankerKind::kGems: return "gems";
    case RankerKind::kTopKMf: return "topk-mf";
    case RankerKind::kTopKIdeal: return "topk-ideal";
    case RankerKind::kWknn: return "wknn";
    case RankerKind::kSoftmax: return "softmax";
    case RankerKind::kRandom: return "random";
    case RankerKind::kOracle: return "oracle";
    case RankerKind::kSlateQ: return "slateq";
  }
  return "?";
}

RankerKind parse_ranker(const std::string& s) {
  for (auto k : {RankerKind::kGems, RankerKind::kTopKMf, RankerKind::kTopKIdeal, RankerKind::kWknn,
                 RankerKind::kSoftmax, RankerKind::kRandom, RankerKind::kOracle, RankerKind::kSlateQ}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown ranker '" + s + "'");
}

Slate rank_gems(const Eigen::VectorXd& z, const vae::GemsModel& model) { return vae::decode_to_slate(model, z); }

Slate rank_topk(const Eigen::VectorXd& action, const Eigen::MatrixXd& item_embeddings, int k) {
  if (action.size() != item_embeddings.cols()) throw std::invalid_argument("rank_topk: action width mismatch");
  if (k > item_embeddings.rows()) throw std::invalid_argument("rank_topk: k exceeds the catalog");
  const Eigen::VectorXd scores = item_embeddings * action;
  const auto idx = top_indices(scores, k);
  return Slate(idx.begin(), idx.end());
}

Eigen::RowVectorXd slate_representation(const Slate& slate, std::size_t filled, const Eigen::MatrixXd& item_embeddings,
                                        int k) {
  const Eigen::Index e = item_embeddings.cols();
  Eigen::RowVectorXd rep = Eigen::RowVectorXd::Zero(k * e);
  for (std::size_t j = 0; j < filled; ++j) rep.segment(static_cast<Eigen::Index>(j) * e, e) = item_embeddings.row(slate[j]);
  return rep;
}

Slate rank_wknn(const Eigen::VectorXd& action, const Eigen::MatrixXd& item_embeddings, int k, int p,
                const PartialSlateCritic& critic) {
  const Eigen::Index e = item_embeddings.cols();
  const auto n = static_cast<int>(item_embeddings.rows());
  if (action.size() != k * e) throw std::invalid_argument("rank_wknn: action must hold k slot vectors");
  if (p < 1 || p > n) throw std::invalid_argument("rank_wknn: p must lie in [1, num_items]");
  if (k > n) throw std::invalid_argument("rank_wknn: k exceeds the catalog");
  std::vector<bool> placed(static_cast<std::size_t>(n), false);
  Slate slate(static_cast<std::size_t>(k), 0);
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd target = action.segment(j * e, e);
    const Eigen::VectorXd neg_dist = -(item_embeddings.rowwise() - target.transpose()).rowwise().squaredNorm();
    const auto cand = top_indices(neg_dist, p, &placed);
    int choice = cand.front();
    if (cand.size() > 1) {
      Eigen::MatrixXd reps(static_cast<Eigen::Index>(cand.size()), k * e);
      for (std::size_t c = 0; c < cand.size(); ++c) {
        slate[static_cast<std::size_t>(j)] = cand[c];
        reps.row(static_cast<Eigen::Index>(c)) = slate_representation(slate, static_cast<std::size_t>(j) + 1,
                                                                       item_embeddings, k);
      }
      const Eigen::VectorXd q = critic(reps);
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < q.size(); ++c) {
        if (q(c) > q(best)) best = c;
      }
      choice = cand[static_cast<std::size_t>(best)];
    }
    slate[static_cast<std::size_t>(j)] = choice;
    placed[static_cast<std::size_t>(choice)] = true;
  }
  return slate;
}

SoftmaxDraw rank_softmax(const Eigen::VectorXd& logits, int k, Rng& rng) {
  const double m = logits.maxCoeff();
  const Eigen::VectorXd shifted = logits.array() - m;
  const double log_z = std::log(shifted.array().exp().sum());
  const Eigen::VectorXd log_p = shifted.array() - log_z;
  std::vector<double> weights(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i) weights[static_cast<std::size_t>(i)] = std::exp(log_p(i));
  std::discrete_distribution<int> dist(weights.begin(), weights.end());
  SoftmaxDraw out;
  for (int j = 0; j < k; ++j) {
    const int item = dist(rng);
    out.slate.push_back(item);
    out.log_prob += log_p(item);
  }
  return out;
}

Slate rank_random(int num_items, int k, Rng& rng) {
  if (k > num_items) throw std::invalid_argument("rank_random: k exceeds the catalog");
  // Partial Fisher-Yates over the catalog.
  std::vector<int> items(static_cast<std::size_t>(num_items));
  std::iota(items.begin(), items.end(), 0);
  for (int j = 0; j < k; ++j) std::swap(items[static_cast<std::size_t>(j)], items[static_cast<std::size_t>(uniform_int(rng, j, num_items - 1))]);
  return Slate(items.begin(), items.begin() + k);
}

Slate rank_short_term_oracle(const sim::DisclosedView& view, const sim::SimConfig& cfg) {
  const Eigen::VectorXd rel = sim::relevance_all(view.user(), view.catalog(), cfg);
  const auto idx = top_indices(rel, cfg.slate_size);
  return Slate(idx.begin(), idx.end());
}

Slate rank_slateq() {
  throw std::logic_error(
      "SlateQ is unimplemented: its Q-learning planner is delegated to an external reference and is "
      "out of scope for this implementation");
}

}  // namespace gems::rankers
