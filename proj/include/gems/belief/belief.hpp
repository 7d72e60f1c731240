#pragma once

// GRU belief over the interaction history. Input per turn is the concatenation
// over slots of [item embedding | click bit]; item embeddings come from a
// fixed table matched to the ranker (GeMS table, MF or true embeddings).

#include "gems/autodiff/layers.hpp"
#include "gems/data/dataset.hpp"

#include <span>

namespace gems::belief {

using ad::Tape;
using ad::Var;
using Observation = data::LoggedTurn;
using sim::ClickVector;
using sim::Slate;

enum class EmbeddingSource { kGems, kMf, kIdeal };
std::string to_string(EmbeddingSource s);
EmbeddingSource parse_embedding_source(const std::string& s);

struct BeliefConfig {
  int belief_dim = 64;
  EmbeddingSource source = EmbeddingSource::kGems;
  int truncation_window = 20;  // turns of history replayed during training
};

struct BeliefState {
  Eigen::VectorXd hidden;
  int turn = 0;
};

BeliefState init_belief(const BeliefConfig& cfg);

class BeliefEncoder {
 public:
  BeliefEncoder() = default;
  BeliefEncoder(BeliefConfig cfg, Eigen::MatrixXd item_embeddings, int slate_size);

  /// Adds the GRU parameters ("belief.*") to `store`.
  void init(ad::ParameterStore& store, Rng& rng) const;

  const BeliefConfig& config() const { return cfg_; }
  int slate_size() const { return slate_size_; }
  Eigen::Index input_dim() const { return gru_.input_dim(); }
  const Eigen::MatrixXd& item_embeddings() const { return items_; }

  /// Row vector [1 x k*(e+1)] for one observed turn.
  Eigen::RowVectorXd features(const Slate& slate, const ClickVector& clicks) const;

  /// One GRU step on plain values (parameters read-only).
  BeliefState update(const BeliefState& b, const Slate& slate, const ClickVector& clicks,
                     const ad::ParameterStore& store) const;

  /// Beliefs after each history in the batch, as a [B x belief_dim] node.
  /// Each history is folded from a zero state; only its last
  /// `truncation_window` turns are used. Empty histories give zeros.
  Var batch(Tape& tape, ad::ParameterStore& store, std::span<const std::span<const Observation>> histories,
            bool trainable = true) const;

 private:
  BeliefConfig cfg_;
  Eigen::MatrixXd items_;
  int slate_size_ = 0;
  nn::GruCell gru_;
};

}  // namespace gems::belief
