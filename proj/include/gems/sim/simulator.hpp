#pragma once

// Topic-structured user simulator with position-based clicks, boredom and
// influence dynamics.

#include "gems/util/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

namespace gems::sim {

using ItemId = std::int32_t;
using Slate = std::vector<ItemId>;
using ClickVector = std::vector<std::uint8_t>;

enum class EmbeddingVariant { kDiffuse, kFocused };
enum class ClickModel { kTopDown, kMixed, kDivPen };

std::string to_string(EmbeddingVariant v);
std::string to_string(ClickModel m);
EmbeddingVariant parse_embedding_variant(const std::string& s);
ClickModel parse_click_model(const std::string& s);

struct SimConfig {
  int num_items = 1000;
  int slate_size = 10;
  int num_topics = 10;
  int topic_dim = 2;
  int episode_length = 100;
  EmbeddingVariant embedding_variant = EmbeddingVariant::kFocused;
  ClickModel click_model = ClickModel::kTopDown;
  double nu = 1.0;
  double epsilon_exam = 0.85;
  double omega = 0.9;
  int boredom_threshold = 5;
  int boredom_window = 10;
  int boredom_duration = 5;
  double divpen_factor = 3.0;
  int divpen_count = 4;
  double sigmoid_offset = 0.28;
  double sigmoid_slope = 5.0;
  double component_stddev = 0.6324555320336759;  // sqrt(0.4)

  int embed_dim() const { return num_topics * topic_dim; }
  void validate() const;

  /// Sets nu to the click model's conventional value (1 for TopDown, 0.5 otherwise).
  void apply_click_model_default_nu();

  /// Canonical "key=value" lines, stable across runs.
  std::string canonical() const;
  std::uint64_t hash() const;
};

struct ItemCatalog {
  Eigen::MatrixXd embeddings;  // [num_items x embed_dim], unit rows
  std::vector<int> main_topic;

  int num_items() const { return static_cast<int>(embeddings.rows()); }
};

struct UserState {
  Eigen::VectorXd embedding;       // base embedding; boredom is applied as a mask
  std::map<int, int> bored_topics;  // topic -> remaining bored turns
  std::deque<ItemId> click_history;  // most recent last
  int turn = 0;

  bool is_bored(int topic) const { return bored_topics.count(topic) != 0; }
  /// Embedding with the blocks of bored topics zeroed.
  Eigen::VectorXd masked_embedding(const SimConfig& cfg) const;
};

struct StepResult {
  ClickVector clicks;
  int reward = 0;
  bool done = false;
};

/// One topic-propensity embedding: uniform propensities normalized to sum 1,
/// per-component magnitudes min(|N(0, stddev^2)|, 1) scaled by the topic's
/// propensity, then unit L2 norm. Focused squares and re-normalizes.
Eigen::VectorXd sample_embedding(const SimConfig& cfg, EmbeddingVariant variant, Rng& rng);

int main_topic_of(const SimConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& embedding);

ItemCatalog generate_item_catalog(const SimConfig& cfg, std::uint64_t seed);
UserState sample_user(const SimConfig& cfg, std::uint64_t seed);

double relevance_from_score(const SimConfig& cfg, double score);
double relevance(const UserState& user, ItemId item, const ItemCatalog& catalog, const SimConfig& cfg);
/// Relevance of every catalog item for the user's current (masked) state.
Eigen::VectorXd relevance_all(const UserState& user, const ItemCatalog& catalog, const SimConfig& cfg);

/// Examination probability of 1-based rank r.
double examination(int rank, const SimConfig& cfg);
double attractiveness(const UserState& user, const Slate& slate, int position, const ItemCatalog& catalog,
                      const SimConfig& cfg);
/// A_i * E_r for every slot.
Eigen::VectorXd click_probabilities(const UserState& user, const Slate& slate, const ItemCatalog& catalog,
                                    const SimConfig& cfg);

/// Deterministic half of a step: influence, history, boredom bookkeeping and
/// the turn counter, given already-realized clicks.
void apply_feedback(UserState& user, const Slate& slate, const ClickVector& clicks, const ItemCatalog& catalog,
                    const SimConfig& cfg);

StepResult step(UserState& user, const Slate& slate, const ItemCatalog& catalog, const SimConfig& cfg, Rng& rng);

void validate_slate(const Slate& slate, const SimConfig& cfg);

/// Read-only view of privileged simulator state for the baselines that are
/// allowed to use it (short-term oracle, TopK ideal, logging oracle).
class DisclosedView {
 public:
  DisclosedView(const ItemCatalog& catalog, const UserState& user) : catalog_(&catalog), user_(&user) {}
  const ItemCatalog& catalog() const { return *catalog_; }
  const UserState& user() const { return *user_; }

 private:
  const ItemCatalog* catalog_;
  const UserState* user_;
};

/// Episodic environment: reset(seed) draws a fresh user, step(slate) serves
/// one slate. Agents only see clicks unless they ask for disclosure.
class Environment {
 public:
  Environment(SimConfig cfg, ItemCatalog catalog);

  void reset(std::uint64_t user_seed);
  StepResult step(const Slate& slate);

  /// Access to true embeddings and user state. Logged once per environment
  /// so disclosed runs are visible in the output.
  DisclosedView disclosed();

  const SimConfig& config() const { return cfg_; }
  const ItemCatalog& catalog() const { return catalog_; }
  int turn() const { return user_.turn; }
  bool done() const { return user_.turn >= cfg_.episode_length; }

 private:
  SimConfig cfg_;
  ItemCatalog catalog_;
  UserState user_;
  Rng click_rng_;
  bool started_ = false;
  bool disclosure_logged_ = false;
};

}  // namespace gems::sim
