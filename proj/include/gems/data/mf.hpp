#pragma once

#include "gems/data/dataset.hpp"

#include <Eigen/Dense>

namespace gems::data {

struct MfConfig {
  int embed_dim = 20;
  double learning_rate = 0.05;
  int epochs = 10;
  int negatives_per_positive = 1;
  double l2 = 1e-4;
  double init_stddev = 0.1;
};

struct MfResult {
  Eigen::MatrixXd item_embeddings;  // [num_items x embed_dim]
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;   // evaluation loss after each epoch
};

/// Logistic matrix factorization on implicit clicks. Each trajectory gets its
/// own user vector; positives are (trajectory, clicked item) pairs and
/// negatives are drawn uniformly among items that trajectory never clicked.
/// Trained by plain SGD on binary cross-entropy; only item vectors are kept.
MfResult train_mf(const Dataset& data, int num_items, const MfConfig& cfg, std::uint64_t seed);

}  // namespace gems::data
