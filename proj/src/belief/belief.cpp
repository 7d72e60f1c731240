#include "gems/belief/belief.hpp"

#include <algorithm>
#include <stdexcept>

namespace gems::belief {

using ad::Matrix;

std::string to_string(EmbeddingSource s) {
  switch (s) {
    case EmbeddingSource::kGems: return "gems";
    case EmbeddingSource::kMf: return "mf";
    case EmbeddingSource::kIdeal: return "ideal";
  }
  return "?";
}

EmbeddingSource parse_embedding_source(const std::string& s) {
  if (s == "gems") return EmbeddingSource::kGems;
  if (s == "mf") return EmbeddingSource::kMf;
  if (s == "ideal") return EmbeddingSource::kIdeal;
  throw std::invalid_argument("unknown embedding source '" + s + "'");
}

BeliefState init_belief(const BeliefConfig& cfg) {
  if (cfg.belief_dim <= 0) throw std::invalid_argument("belief_dim must be positive");
  return {Eigen::VectorXd::Zero(cfg.belief_dim), 0};
}

BeliefEncoder::BeliefEncoder(BeliefConfig cfg, Eigen::MatrixXd item_embeddings, int slate_size)
    : cfg_(cfg), items_(std::move(item_embeddings)), slate_size_(slate_size) {
  if (cfg_.belief_dim <= 0 || slate_size <= 0 || items_.size() == 0) {
    throw std::invalid_argument("BeliefEncoder: invalid dimensions");
  }
  if (cfg_.truncation_window <= 0) throw std::invalid_argument("BeliefEncoder: truncation window must be positive");
  gru_ = nn::GruCell("belief", slate_size * (items_.cols() + 1), cfg_.belief_dim);
}

void BeliefEncoder::init(ad::ParameterStore& store, Rng& rng) const { gru_.init(store, rng); }

Eigen::RowVectorXd BeliefEncoder::features(const Slate& slate, const ClickVector& clicks) const {
  if (slate.size() != static_cast<std::size_t>(slate_size_) || clicks.size() != slate.size()) {
    throw std::invalid_argument("belief: slate and clicks must have length k");
  }
  const Eigen::Index e = items_.cols();
  Eigen::RowVectorXd x(input_dim());
  for (std::size_t j = 0; j < slate.size(); ++j) {
    if (slate[j] < 0 || slate[j] >= items_.rows()) throw std::out_of_range("belief: unknown item id");
    const auto off = static_cast<Eigen::Index>(j) * (e + 1);
    x.segment(off, e) = items_.row(slate[j]);
    x(off + e) = clicks[j];
  }
  return x;
}

BeliefState BeliefEncoder::update(const BeliefState& b, const Slate& slate, const ClickVector& clicks,
                                  const ad::ParameterStore& store) const {
  Tape tape;
  // Non-trainable binding never writes to the store.
  auto& s = const_cast<ad::ParameterStore&>(store);
  Var h = gru_(tape, s, tape.constant(Matrix(b.hidden.transpose())), tape.constant(Matrix(features(slate, clicks))),
               false);
  return {h.value().row(0).transpose(), b.turn + 1};
}

Var BeliefEncoder::batch(Tape& tape, ad::ParameterStore& store,
                         std::span<const std::span<const Observation>> histories, bool trainable) const {
  const auto n = static_cast<Eigen::Index>(histories.size());
  if (n == 0) throw std::invalid_argument("belief batch: no histories");
  const std::size_t window = static_cast<std::size_t>(cfg_.truncation_window);
  std::size_t steps = 0;
  for (const auto& h : histories) steps = std::max(steps, std::min(h.size(), window));

  Var h = tape.constant(Matrix::Zero(n, cfg_.belief_dim));
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix x = Matrix::Zero(n, input_dim());
    Matrix mask = Matrix::Zero(n, 1);
    bool all_active = true;
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& hist = histories[static_cast<std::size_t>(b)];
      const std::size_t used = std::min(hist.size(), window);
      if (t < used) {
        const Observation& o = hist[hist.size() - used + t];
        x.row(b) = features(o.slate, o.clicks);
        mask(b, 0) = 1.0;
      } else {
        all_active = false;
      }
    }
    Var next = gru_(tape, store, h, tape.constant(x), trainable);
    if (all_active) {
      h = next;
    } else {
      // Finished histories keep their state: h = m * next + (1 - m) * h.
      Var m = tape.constant(mask);
      h = ad::cwise_product(m, next) + ad::cwise_product(1.0 - m, h);
    }
  }
  return h;
}

}  // namespace gems::belief
