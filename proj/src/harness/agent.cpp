#include "gems/harness/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gems::harness {
namespace {

using agents::Episode;
using agents::Transition;
using ad::Matrix;
using ad::Tape;
using ad::Var;
using belief::Observation;
using rankers::RankerKind;

bool needs_gems(RankerKind r) { return r == RankerKind::kGems; }
bool needs_mf(RankerKind r) {
  return r == RankerKind::kTopKMf || r == RankerKind::kWknn || r == RankerKind::kSoftmax;
}

Eigen::MatrixXd belief_table(const ExperimentConfig& cfg, const Artifacts& art, sim::Environment& env) {
  switch (embedding_source_for(cfg.ranker)) {
    case belief::EmbeddingSource::kGems: return art.gems->item_embeddings();
    case belief::EmbeddingSource::kMf: return *art.mf_embeddings;
    case belief::EmbeddingSource::kIdeal: return env.disclosed().catalog().embeddings;
  }
  throw std::logic_error("unreachable");
}

std::vector<std::span<const Observation>> prefixes(const std::vector<Observation>& obs, std::size_t count) {
  std::vector<std::span<const Observation>> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) out.emplace_back(obs.data(), t);
  return out;
}

// Shared belief bookkeeping for the learned agents.
class BeliefAgent : public Agent {
 protected:
  BeliefAgent(const ExperimentConfig& cfg, Eigen::MatrixXd table, std::uint64_t init_seed) : cfg_(cfg) {
    belief::BeliefConfig bc = cfg.belief;
    bc.source = embedding_source_for(cfg.ranker);
    encoder_ = belief::BeliefEncoder(bc, std::move(table), cfg.sim.slate_size);
    Rng rng = make_rng(init_seed, "init", 0);
    encoder_.init(belief_store_, rng);
  }

  void begin_episode() override { episode_ = std::make_shared<Episode>(); }

  /// Belief over the current episode, truncated exactly as during training.
  Eigen::VectorXd current_belief() {
    Tape tape;
    const std::span<const Observation> hist(episode_->observations);
    return encoder_.batch(tape, belief_store_, std::span(&hist, 1), false).value().row(0).transpose();
  }

  ExperimentConfig cfg_;
  belief::BeliefEncoder encoder_;
  ad::ParameterStore belief_store_;
  std::shared_ptr<Episode> episode_ = std::make_shared<Episode>();
};

class SacAgent final : public BeliefAgent {
 public:
  SacAgent(const ExperimentConfig& cfg, const Artifacts& art, sim::Environment& env, std::uint64_t init_seed)
      : BeliefAgent(cfg, belief_table(cfg, art, env), init_seed), buffer_(cfg.buffer_capacity) {
    const int k = cfg.sim.slate_size;
    Eigen::Index action_dim = 0;
    switch (cfg.ranker) {
      case RankerKind::kGems:
        gems_ = *art.gems;
        action_dim = gems_.latent_dim();
        break;
      case RankerKind::kTopKMf:
      case RankerKind::kTopKIdeal:
        table_ = encoder_.item_embeddings();
        action_dim = table_.cols();
        break;
      case RankerKind::kWknn:
        table_ = encoder_.item_embeddings();
        action_dim = k * table_.cols();
        // Slot targets must be able to reach every embedding coordinate.
        scale_ = std::max(1e-12, table_.cwiseAbs().maxCoeff());
        break;
      default: throw std::invalid_argument("sac agent cannot drive ranker " + rankers::to_string(cfg.ranker));
    }
    sac_ = agents::SacCore(cfg.sac, cfg.belief.belief_dim, action_dim);
    Rng rng = make_rng(init_seed, "init", 1);
    sac_.init(rng);
  }

  Slate act(sim::Environment& env, bool explore, Rng& rng) override {
    (void)env;
    const Eigen::VectorXd b = current_belief();
    const Eigen::VectorXd a = sac_.act(b, explore, rng);
    const int k = cfg_.sim.slate_size;
    Slate slate;
    switch (cfg_.ranker) {
      case RankerKind::kGems: slate = rankers::rank_gems(a * scale_, gems_); break;
      case RankerKind::kTopKMf:
      case RankerKind::kTopKIdeal: slate = rankers::rank_topk(a, table_, k); break;
      case RankerKind::kWknn: {
        auto critic = [&](const Eigen::MatrixXd& reps) -> Eigen::VectorXd { return q_values(b, reps / scale_); };
        slate = rankers::rank_wknn(a * scale_, table_, k, cfg_.wknn_candidates, critic);
        // The critic learns from the slate actually served.
        last_action_ = rankers::slate_representation(slate, slate.size(), table_, k).transpose() / scale_;
        return slate;
      }
      default: break;
    }
    last_action_ = a;
    return slate;
  }

  void observe(const Slate& slate, const sim::ClickVector& clicks, double reward, bool done) override {
    episode_->observations.push_back({slate, clicks});
    episode_->actions.push_back(last_action_);
    episode_->rewards.push_back(reward);
    buffer_.push(Transition{episode_, static_cast<int>(episode_->observations.size()) - 1, done});
  }

  UpdateStats update(Rng& rng) override {
    UpdateStats st;
    const auto b = static_cast<std::size_t>(cfg_.sac.batch_size);
    if (buffer_.size() < b) return st;
    for (int u = 0; u < cfg_.sac.updates_per_step; ++u) {
      const auto batch = buffer_.sample(b, rng);
      agents::SacBatch sb;
      sb.action.resize(static_cast<Eigen::Index>(b), sac_.action_dim());
      sb.reward.resize(static_cast<Eigen::Index>(b), 1);
      sb.done.resize(static_cast<Eigen::Index>(b), 1);
      std::vector<std::span<const Observation>> hist, next_hist;
      for (std::size_t i = 0; i < b; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        sb.action.row(r) = batch[i].action().transpose();
        sb.reward(r, 0) = batch[i].reward();
        sb.done(r, 0) = batch[i].done ? 1.0 : 0.0;
        hist.push_back(batch[i].history());
        next_hist.push_back(batch[i].next_history());
      }
      auto state = [&](Tape& tape, bool trainable) { return encoder_.batch(tape, belief_store_, hist, trainable); };
      auto next_state = [&](Tape& tape, bool trainable) {
        return encoder_.batch(tape, belief_store_, next_hist, trainable);
      };
      const agents::SacDiagnostics d = sac_.update(state, next_state, sb, rng, {&belief_store_});
      if (!std::isfinite(d.critic_loss) || !std::isfinite(d.actor_loss)) {
        throw std::runtime_error("sac update produced a non-finite loss (critic " + std::to_string(d.critic_loss) +
                                 ", actor " + std::to_string(d.actor_loss) + ", mean q " +
                                 std::to_string(d.mean_q) + ")");
      }
      ++st.updates;
      st.critic_loss = d.critic_loss;
      st.actor_loss = d.actor_loss;
    }
    return st;
  }

  ad::Checkpoint checkpoint() const override {
    ad::Checkpoint c;
    c.metadata["kind"] = "agent";
    c.metadata["agent"] = "sac";
    c.metadata["ranker"] = rankers::to_string(cfg_.ranker);
    c.stores["actor"] = sac_.actor_store();
    c.stores["critic"] = sac_.critic_store();
    c.stores["target"] = sac_.target_store();
    c.stores["belief"] = belief_store_;
    return c;
  }

  void restore(const ad::Checkpoint& c) override {
    if (c.meta("agent") != "sac" || c.meta("ranker") != rankers::to_string(cfg_.ranker)) {
      throw std::invalid_argument("checkpoint does not match sac+" + rankers::to_string(cfg_.ranker));
    }
    sac_.actor_store() = c.store("actor");
    sac_.critic_store() = c.store("critic");
    sac_.target_store() = c.store("target");
    belief_store_ = c.store("belief");
  }

 private:
  Eigen::VectorXd q_values(const Eigen::VectorXd& b, const Eigen::MatrixXd& actions) {
    Tape tape;
    Var s = tape.constant(Matrix(b.transpose().replicate(actions.rows(), 1)));
    Var a = tape.constant(actions);
    Var q = ad::cwise_min(sac_.q_value(tape, 0, s, a, false, false), sac_.q_value(tape, 1, s, a, false, false));
    return q.value().col(0);
  }

  agents::SacCore sac_;
  agents::ReplayBuffer buffer_;
  vae::GemsModel gems_;
  Eigen::MatrixXd table_;
  double scale_ = 1.0;
  Eigen::VectorXd last_action_;
};

class ReinforceAgent final : public BeliefAgent {
 public:
  ReinforceAgent(const ExperimentConfig& cfg, const Artifacts& art, sim::Environment& env, std::uint64_t init_seed)
      : BeliefAgent(cfg, belief_table(cfg, art, env), init_seed),
        policy_(cfg.reinforce, cfg.belief.belief_dim, cfg.sim.num_items) {
    Rng rng = make_rng(init_seed, "init", 1);
    policy_.init(rng);
  }

  Slate act(sim::Environment& env, bool explore, Rng& rng) override {
    (void)env;
    const Eigen::VectorXd logits = policy_.logits(current_belief());
    if (explore) return rankers::rank_softmax(logits, cfg_.sim.slate_size, rng).slate;
    // Deterministic mode: the k most likely distinct items.
    std::vector<int> idx(static_cast<std::size_t>(logits.size()));
    std::iota(idx.begin(), idx.end(), 0);
    const auto k = static_cast<std::ptrdiff_t>(cfg_.sim.slate_size);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                      [&](int a, int b) { return logits(a) > logits(b) || (logits(a) == logits(b) && a < b); });
    return Slate(idx.begin(), idx.begin() + k);
  }

  void observe(const Slate& slate, const sim::ClickVector& clicks, double reward, bool) override {
    episode_->observations.push_back({slate, clicks});
    episode_->rewards.push_back(reward);
  }

  UpdateStats end_episode() override {
    UpdateStats st;
    const auto& obs = episode_->observations;
    if (obs.empty()) return st;
    const auto hist = prefixes(obs, obs.size());
    std::vector<std::vector<int>> slates;
    for (const auto& o : obs) slates.emplace_back(o.slate.begin(), o.slate.end());
    auto states = [&](Tape& tape, bool trainable) { return encoder_.batch(tape, belief_store_, hist, trainable); };
    const agents::ReinforceDiagnostics d = policy_.update(states, slates, episode_->rewards, {&belief_store_});
    if (!std::isfinite(d.loss)) throw std::runtime_error("reinforce update produced a non-finite loss");
    st.updates = 1;
    st.critic_loss = d.loss;
    return st;
  }

  ad::Checkpoint checkpoint() const override {
    ad::Checkpoint c;
    c.metadata["kind"] = "agent";
    c.metadata["agent"] = "reinforce";
    c.metadata["ranker"] = "softmax";
    std::ostringstream b;
    b.precision(17);
    b << policy_.baseline();
    c.metadata["baseline"] = b.str();
    c.stores["policy"] = policy_.store();
    c.stores["belief"] = belief_store_;
    return c;
  }

  void restore(const ad::Checkpoint& c) override {
    if (c.meta("agent") != "reinforce") throw std::invalid_argument("checkpoint does not hold a reinforce agent");
    policy_.store() = c.store("policy");
    policy_.set_baseline(std::stod(c.meta("baseline")));
    belief_store_ = c.store("belief");
  }

 private:
  agents::SoftmaxPolicy policy_;
};

// Random and short-term oracle: nothing to learn.
class StaticAgent final : public Agent {
 public:
  explicit StaticAgent(const ExperimentConfig& cfg) : cfg_(cfg) {}

  void begin_episode() override {}
  Slate act(sim::Environment& env, bool, Rng& rng) override {
    if (cfg_.ranker == RankerKind::kOracle) return rankers::rank_short_term_oracle(env.disclosed(), cfg_.sim);
    return rankers::rank_random(cfg_.sim.num_items, cfg_.sim.slate_size, rng);
  }
  void observe(const Slate&, const sim::ClickVector&, double, bool) override {}

  ad::Checkpoint checkpoint() const override {
    ad::Checkpoint c;
    c.metadata["kind"] = "agent";
    c.metadata["agent"] = "none";
    c.metadata["ranker"] = rankers::to_string(cfg_.ranker);
    return c;
  }
  void restore(const ad::Checkpoint& c) override {
    if (c.meta("agent") != "none") throw std::invalid_argument("checkpoint holds a learned agent");
  }

 private:
  ExperimentConfig cfg_;
};

}  // namespace

belief::EmbeddingSource embedding_source_for(RankerKind ranker) {
  switch (ranker) {
    case RankerKind::kGems: return belief::EmbeddingSource::kGems;
    case RankerKind::kTopKIdeal: return belief::EmbeddingSource::kIdeal;
    default: return belief::EmbeddingSource::kMf;
  }
}

void save_embeddings(const std::filesystem::path& path, const Eigen::MatrixXd& table) {
  ad::Checkpoint c;
  c.metadata["kind"] = "embeddings";
  c.stores["embeddings"].add("items", table);
  ad::save_checkpoint(path, c);
}

Eigen::MatrixXd load_embeddings(const std::filesystem::path& path) {
  const ad::Checkpoint c = ad::load_checkpoint(path);
  if (c.meta("kind") != "embeddings") throw std::runtime_error(path.string() + " does not hold item embeddings");
  return c.store("embeddings").at("items").value;
}

Artifacts load_artifacts(const ExperimentConfig& cfg) {
  Artifacts art;
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw std::runtime_error(std::string("missing artifact: ranker needs ") + what + " (no path set)");
    if (!std::filesystem::exists(p)) {
      throw std::runtime_error(std::string("missing artifact: ") + what + " not found at " + p.string());
    }
  };
  if (needs_gems(cfg.ranker)) {
    require(cfg.gems_checkpoint, "a GeMS checkpoint");
    art.gems = vae::load_gems(cfg.gems_checkpoint);
  }
  if (needs_mf(cfg.ranker)) {
    require(cfg.mf_checkpoint, "MF item embeddings");
    art.mf_embeddings = load_embeddings(cfg.mf_checkpoint);
  }
  return art;
}

std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, const Artifacts& artifacts, sim::Environment& env,
                                  std::uint64_t init_seed) {
  cfg.validate();
  if (needs_gems(cfg.ranker) && !artifacts.gems) throw std::runtime_error("missing artifact: GeMS checkpoint");
  if (needs_mf(cfg.ranker) && !artifacts.mf_embeddings) throw std::runtime_error("missing artifact: MF embeddings");
  if (artifacts.gems && needs_gems(cfg.ranker)) {
    if (artifacts.gems->num_items() != cfg.sim.num_items || artifacts.gems->slate_size() != cfg.sim.slate_size) {
      throw std::invalid_argument("GeMS checkpoint shape does not match the environment");
    }
  }
  if (artifacts.mf_embeddings && needs_mf(cfg.ranker) && artifacts.mf_embeddings->rows() != cfg.sim.num_items) {
    throw std::invalid_argument("MF embeddings do not match the catalog size");
  }
  switch (cfg.agent) {
    case AgentKind::kSac: return std::make_unique<SacAgent>(cfg, artifacts, env, init_seed);
    case AgentKind::kReinforce: return std::make_unique<ReinforceAgent>(cfg, artifacts, env, init_seed);
    case AgentKind::kNone: return std::make_unique<StaticAgent>(cfg);
  }
  throw std::logic_error("unreachable");
}

}  // namespace gems::harness
