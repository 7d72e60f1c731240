#include "gems/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace gems::sim {

std::string to_string(EmbeddingVariant v) { return v == EmbeddingVariant::kFocused ? "focused" : "diffuse"; }

std::string to_string(ClickModel m) {
  switch (m) {
    case ClickModel::kTopDown: return "TopDown";
    case ClickModel::kMixed: return "Mixed";
    case ClickModel::kDivPen: return "DivPen";
  }
  return "?";
}

EmbeddingVariant parse_embedding_variant(const std::string& s) {
  if (s == "focused") return EmbeddingVariant::kFocused;
  if (s == "diffuse") return EmbeddingVariant::kDiffuse;
  throw std::invalid_argument("unknown embedding variant: " + s);
}

ClickModel parse_click_model(const std::string& s) {
  if (s == "TopDown" || s == "topdown") return ClickModel::kTopDown;
  if (s == "Mixed" || s == "mixed") return ClickModel::kMixed;
  if (s == "DivPen" || s == "divpen") return ClickModel::kDivPen;
  throw std::invalid_argument("unknown click model: " + s);
}

void SimConfig::validate() const {
  if (num_items <= 0 || slate_size <= 0 || slate_size > num_items) {
    throw std::invalid_argument("SimConfig: need 0 < slate_size <= num_items");
  }
  if (num_topics <= 0 || topic_dim <= 0 || episode_length <= 0) {
    throw std::invalid_argument("SimConfig: topics, topic_dim and episode_length must be positive");
  }
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("SimConfig: nu must lie in [0,1]");
  if (!(epsilon_exam > 0.0 && epsilon_exam < 1.0)) throw std::invalid_argument("SimConfig: epsilon must lie in (0,1)");
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("SimConfig: omega must lie in [0,1]");
  if (boredom_window <= 0 || boredom_threshold <= 0 || boredom_duration <= 0) {
    throw std::invalid_argument("SimConfig: boredom parameters must be positive");
  }
  if (divpen_factor <= 0.0 || component_stddev <= 0.0) {
    throw std::invalid_argument("SimConfig: divpen_factor and component_stddev must be positive");
  }
}

void SimConfig::apply_click_model_default_nu() { nu = click_model == ClickModel::kTopDown ? 1.0 : 0.5; }

std::string SimConfig::canonical() const {
  std::ostringstream o;
  o.precision(17);
  o << "num_items=" << num_items << "\nslate_size=" << slate_size << "\nnum_topics=" << num_topics
    << "\ntopic_dim=" << topic_dim << "\nepisode_length=" << episode_length
    << "\nembedding_variant=" << to_string(embedding_variant) << "\nclick_model=" << to_string(click_model)
    << "\nnu=" << nu << "\nepsilon_exam=" << epsilon_exam << "\nomega=" << omega
    << "\nboredom_threshold=" << boredom_threshold << "\nboredom_window=" << boredom_window
    << "\nboredom_duration=" << boredom_duration << "\ndivpen_factor=" << divpen_factor
    << "\ndivpen_count=" << divpen_count << "\nsigmoid_offset=" << sigmoid_offset
    << "\nsigmoid_slope=" << sigmoid_slope << "\ncomponent_stddev=" << component_stddev << "\n";
  return o.str();
}

std::uint64_t SimConfig::hash() const { return fnv1a(canonical()); }

Eigen::VectorXd UserState::masked_embedding(const SimConfig& cfg) const {
  Eigen::VectorXd e = embedding;
  for (const auto& [topic, turns] : bored_topics) {
    e.segment(topic * cfg.topic_dim, cfg.topic_dim).setZero();
  }
  return e;
}

Eigen::VectorXd sample_embedding(const SimConfig& cfg, EmbeddingVariant variant, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, cfg.component_stddev);
  Eigen::VectorXd w(cfg.num_topics);
  for (int t = 0; t < cfg.num_topics; ++t) w(t) = unif(rng);
  w /= w.sum();
  Eigen::VectorXd e(cfg.embed_dim());
  for (int t = 0; t < cfg.num_topics; ++t) {
    for (int c = 0; c < cfg.topic_dim; ++c) {
      e(t * cfg.topic_dim + c) = w(t) * std::min(std::abs(normal(rng)), 1.0);
    }
  }
  e.normalize();
  if (variant == EmbeddingVariant::kFocused) {
    e = e.array().square().matrix();
    e.normalize();
  }
  return e;
}

int main_topic_of(const SimConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& embedding) {
  int best = 0;
  double best_norm = -1.0;
  for (int t = 0; t < cfg.num_topics; ++t) {
    const double n = embedding.segment(t * cfg.topic_dim, cfg.topic_dim).norm();
    if (n > best_norm) {
      best_norm = n;
      best = t;
    }
  }
  return best;
}

ItemCatalog generate_item_catalog(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, "catalog"));
  ItemCatalog catalog;
  catalog.embeddings.resize(cfg.num_items, cfg.embed_dim());
  catalog.main_topic.resize(static_cast<std::size_t>(cfg.num_items));
  for (int i = 0; i < cfg.num_items; ++i) {
    const Eigen::VectorXd e = sample_embedding(cfg, cfg.embedding_variant, rng);
    catalog.embeddings.row(i) = e.transpose();
    catalog.main_topic[static_cast<std::size_t>(i)] = main_topic_of(cfg, e);
  }
  return catalog;
}

UserState sample_user(const SimConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "user"));
  UserState user;
  user.embedding = sample_embedding(cfg, EmbeddingVariant::kDiffuse, rng);
  return user;
}

double relevance_from_score(const SimConfig& cfg, double score) {
  return 1.0 / (1.0 + std::exp(-(score - cfg.sigmoid_offset) * cfg.sigmoid_slope));
}

double relevance(const UserState& user, ItemId item, const ItemCatalog& catalog, const SimConfig& cfg) {
  if (item < 0 || item >= catalog.num_items()) throw std::out_of_range("relevance: unknown item id");
  const double score = catalog.embeddings.row(item).dot(user.masked_embedding(cfg));
  return relevance_from_score(cfg, score);
}

Eigen::VectorXd relevance_all(const UserState& user, const ItemCatalog& catalog, const SimConfig& cfg) {
  const Eigen::VectorXd scores = catalog.embeddings * user.masked_embedding(cfg);
  return scores.unaryExpr([&](double s) { return relevance_from_score(cfg, s); });
}

double examination(int rank, const SimConfig& cfg) {
  if (rank < 1 || rank > cfg.slate_size) throw std::out_of_range("examination: rank must lie in 1..k");
  const double eps = cfg.epsilon_exam;
  return cfg.nu * std::pow(eps, rank) + (1.0 - cfg.nu) * std::pow(eps, cfg.slate_size + 1 - rank);
}

namespace {

bool slate_lacks_diversity(const Slate& slate, const ItemCatalog& catalog, const SimConfig& cfg) {
  std::vector<int> counts(static_cast<std::size_t>(cfg.num_topics), 0);
  for (ItemId i : slate) {
    if (++counts[static_cast<std::size_t>(catalog.main_topic[static_cast<std::size_t>(i)])] > cfg.divpen_count) {
      return true;
    }
  }
  return false;
}

}  // namespace

void validate_slate(const Slate& slate, const SimConfig& cfg) {
  if (static_cast<int>(slate.size()) != cfg.slate_size) {
    throw std::invalid_argument("slate has " + std::to_string(slate.size()) + " items, expected " +
                                std::to_string(cfg.slate_size));
  }
  for (ItemId i : slate) {
    if (i < 0 || i >= cfg.num_items) throw std::out_of_range("slate item id out of range");
  }
}

double attractiveness(const UserState& user, const Slate& slate, int position, const ItemCatalog& catalog,
                      const SimConfig& cfg) {
  double a = relevance(user, slate.at(static_cast<std::size_t>(position)), catalog, cfg);
  if (cfg.click_model == ClickModel::kDivPen && slate_lacks_diversity(slate, catalog, cfg)) {
    a /= cfg.divpen_factor;
  }
  return a;
}

Eigen::VectorXd click_probabilities(const UserState& user, const Slate& slate, const ItemCatalog& catalog,
                                    const SimConfig& cfg) {
  validate_slate(slate, cfg);
  const Eigen::VectorXd masked = user.masked_embedding(cfg);
  const bool penalize = cfg.click_model == ClickModel::kDivPen && slate_lacks_diversity(slate, catalog, cfg);
  Eigen::VectorXd p(cfg.slate_size);
  for (int j = 0; j < cfg.slate_size; ++j) {
    double a = relevance_from_score(cfg, catalog.embeddings.row(slate[static_cast<std::size_t>(j)]).dot(masked));
    if (penalize) a /= cfg.divpen_factor;
    p(j) = a * examination(j + 1, cfg);
  }
  return p;
}

void apply_feedback(UserState& user, const Slate& slate, const ClickVector& clicks, const ItemCatalog& catalog,
                    const SimConfig& cfg) {
  if (clicks.size() != slate.size()) throw std::invalid_argument("clicks and slate lengths differ");
  for (std::size_t j = 0; j < slate.size(); ++j) {
    if (!clicks[j]) continue;
    user.embedding = cfg.omega * user.embedding + (1.0 - cfg.omega) * catalog.embeddings.row(slate[j]).transpose();
    user.click_history.push_back(slate[j]);
    while (static_cast<int>(user.click_history.size()) > cfg.boredom_window) user.click_history.pop_front();
  }
  for (auto it = user.bored_topics.begin(); it != user.bored_topics.end();) {
    if (--it->second <= 0) {
      it = user.bored_topics.erase(it);
    } else {
      ++it;
    }
  }
  std::vector<int> counts(static_cast<std::size_t>(cfg.num_topics), 0);
  for (ItemId i : user.click_history) ++counts[static_cast<std::size_t>(catalog.main_topic[static_cast<std::size_t>(i)])];
  for (int t = 0; t < cfg.num_topics; ++t) {
    if (!user.is_bored(t) && counts[static_cast<std::size_t>(t)] >= cfg.boredom_threshold) {
      user.bored_topics[t] = cfg.boredom_duration;
    }
  }
  ++user.turn;
}

StepResult step(UserState& user, const Slate& slate, const ItemCatalog& catalog, const SimConfig& cfg, Rng& rng) {
  if (user.turn >= cfg.episode_length) throw std::logic_error("step called after the episode ended");
  const Eigen::VectorXd p = click_probabilities(user, slate, catalog, cfg);
  StepResult result;
  result.clicks.assign(slate.size(), 0);
  for (int j = 0; j < cfg.slate_size; ++j) {
    if (uniform01(rng) < p(j)) {
      result.clicks[static_cast<std::size_t>(j)] = 1;
      ++result.reward;
    }
  }
  apply_feedback(user, slate, result.clicks, catalog, cfg);
  result.done = user.turn == cfg.episode_length;
  return result;
}

Environment::Environment(SimConfig cfg, ItemCatalog catalog) : cfg_(std::move(cfg)), catalog_(std::move(catalog)) {
  cfg_.validate();
  if (catalog_.num_items() != cfg_.num_items || catalog_.embeddings.cols() != cfg_.embed_dim()) {
    throw std::invalid_argument("catalog does not match SimConfig");
  }
}

void Environment::reset(std::uint64_t user_seed) {
  user_ = sample_user(cfg_, user_seed);
  click_rng_ = Rng(derive_seed(user_seed, "clicks"));
  started_ = true;
}

StepResult Environment::step(const Slate& slate) {
  if (!started_) throw std::logic_error("Environment::step before reset");
  return sim::step(user_, slate, catalog_, cfg_, click_rng_);
}

DisclosedView Environment::disclosed() {
  if (!disclosure_logged_) {
    std::clog << "[gems] DISCLOSED MODE: true item embeddings and user state exposed to the policy\n";
    disclosure_logged_ = true;
  }
  return DisclosedView(catalog_, user_);
}

}  // namespace gems::sim
