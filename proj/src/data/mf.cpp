#include "gems/data/mf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gems::data {
namespace {

struct Pair {
  int user;
  int item;
  double label;
};

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

std::vector<std::vector<bool>> clicked_sets(const Dataset& data, int num_items) {
  std::vector<std::vector<bool>> clicked(data.trajectories.size(), std::vector<bool>(static_cast<std::size_t>(num_items), false));
  for (std::size_t u = 0; u < data.trajectories.size(); ++u) {
    for (const auto& turn : data.trajectories[u].turns) {
      for (std::size_t j = 0; j < turn.slate.size(); ++j) {
        if (turn.clicks[j]) clicked[u][static_cast<std::size_t>(turn.slate[j])] = true;
      }
    }
  }
  return clicked;
}

int sample_negative(const std::vector<bool>& clicked, int num_items, Rng& rng) {
  // Rejection sampling; callers guarantee at least one unclicked item.
  for (;;) {
    const int j = uniform_int(rng, 0, num_items - 1);
    if (!clicked[static_cast<std::size_t>(j)]) return j;
  }
}

double mean_bce(const std::vector<Pair>& pairs, const Eigen::MatrixXd& users, const Eigen::MatrixXd& items) {
  double total = 0.0;
  for (const Pair& p : pairs) {
    const double s = users.row(p.user).dot(items.row(p.item));
    total -= p.label > 0.5 ? log_sigmoid(s) : log_sigmoid(-s);
  }
  return total / static_cast<double>(pairs.size());
}

}  // namespace

MfResult train_mf(const Dataset& data, int num_items, const MfConfig& cfg, std::uint64_t seed) {
  if (data.num_clicks() == 0) throw std::invalid_argument("train_mf: dataset contains no clicks");
  if (cfg.embed_dim <= 0 || cfg.epochs < 0 || cfg.negatives_per_positive < 0) {
    throw std::invalid_argument("train_mf: invalid configuration");
  }
  Rng rng(derive_seed(seed, "mf"));
  const int num_users = static_cast<int>(data.trajectories.size());
  Eigen::MatrixXd users = gaussian_matrix(rng, num_users, cfg.embed_dim, cfg.init_stddev);
  Eigen::MatrixXd items = gaussian_matrix(rng, num_items, cfg.embed_dim, cfg.init_stddev);
  const auto clicked = clicked_sets(data, num_items);

  std::vector<Pair> positives;
  for (int u = 0; u < num_users; ++u) {
    for (const auto& turn : data.trajectories[static_cast<std::size_t>(u)].turns) {
      for (std::size_t j = 0; j < turn.slate.size(); ++j) {
        if (turn.slate[j] < 0 || turn.slate[j] >= num_items) throw std::out_of_range("train_mf: item id out of range");
        if (turn.clicks[j]) positives.push_back({u, turn.slate[j], 1.0});
      }
    }
  }
  auto has_negatives = [&](int u) {
    const auto& c = clicked[static_cast<std::size_t>(u)];
    return std::find(c.begin(), c.end(), false) != c.end();
  };

  // Fixed evaluation sample so losses before and after training are comparable.
  std::vector<Pair> eval_pairs = positives;
  {
    Rng eval_rng(derive_seed(seed, "mf-eval"));
    for (const Pair& p : positives) {
      if (!has_negatives(p.user)) continue;
      for (int n = 0; n < cfg.negatives_per_positive; ++n) {
        eval_pairs.push_back({p.user, sample_negative(clicked[static_cast<std::size_t>(p.user)], num_items, eval_rng), 0.0});
      }
    }
  }

  MfResult result;
  result.initial_loss = mean_bce(eval_pairs, users, items);
  const double lr = cfg.learning_rate;
  std::vector<Pair> epoch_pairs;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    epoch_pairs.clear();
    for (const Pair& p : positives) {
      epoch_pairs.push_back(p);
      if (!has_negatives(p.user)) continue;
      for (int n = 0; n < cfg.negatives_per_positive; ++n) {
        epoch_pairs.push_back({p.user, sample_negative(clicked[static_cast<std::size_t>(p.user)], num_items, rng), 0.0});
      }
    }
    std::shuffle(epoch_pairs.begin(), epoch_pairs.end(), rng);
    for (const Pair& p : epoch_pairs) {
      const Eigen::VectorXd u = users.row(p.user).transpose();
      const Eigen::VectorXd v = items.row(p.item).transpose();
      const double g = 1.0 / (1.0 + std::exp(-u.dot(v))) - p.label;
      users.row(p.user) -= lr * (g * v + cfg.l2 * u).transpose();
      items.row(p.item) -= lr * (g * u + cfg.l2 * v).transpose();
    }
    result.epoch_loss.push_back(mean_bce(eval_pairs, users, items));
  }
  if (!items.allFinite()) throw std::runtime_error("train_mf: non-finite item embeddings");
  result.item_embeddings = std::move(items);
  return result;
}

}  // namespace gems::data
