#include "gems/harness/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace gems::harness {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw std::invalid_argument("config: bad value '" + v + "' for " + key);
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream o;
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << v[i];
  return o.str();
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(parse_number<T>(key, part));
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field number(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<T>("", v); },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt(c.*member);
            else return std::to_string(c.*member);
          }};
}

// Field inside a nested struct member.
template <typename S, typename T>
Field nested(S ExperimentConfig::*outer, T S::*inner) {
  return {[=](ExperimentConfig& c, const std::string& v) { (c.*outer).*inner = parse_number<T>("", v); },
          [=](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt((c.*outer).*inner);
            else return std::to_string((c.*outer).*inner);
          }};
}

template <typename S>
Field sizes(S ExperimentConfig::*outer, std::vector<Eigen::Index> S::*inner) {
  return {[=](ExperimentConfig& c, const std::string& v) { (c.*outer).*inner = parse_list<Eigen::Index>("", v); },
          [=](const ExperimentConfig& c) { return join((c.*outer).*inner); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"sim.num_items", nested(&C::sim, &sim::SimConfig::num_items)},
      {"sim.slate_size", nested(&C::sim, &sim::SimConfig::slate_size)},
      {"sim.num_topics", nested(&C::sim, &sim::SimConfig::num_topics)},
      {"sim.topic_dim", nested(&C::sim, &sim::SimConfig::topic_dim)},
      {"sim.episode_length", nested(&C::sim, &sim::SimConfig::episode_length)},
      {"sim.embedding_variant",
       {[](C& c, const std::string& v) { c.sim.embedding_variant = sim::parse_embedding_variant(v); },
        [](const C& c) { return sim::to_string(c.sim.embedding_variant); }}},
      {"sim.click_model",
       {[](C& c, const std::string& v) { c.sim.click_model = sim::parse_click_model(v); },
        [](const C& c) { return sim::to_string(c.sim.click_model); }}},
      {"sim.nu", nested(&C::sim, &sim::SimConfig::nu)},
      {"sim.epsilon_exam", nested(&C::sim, &sim::SimConfig::epsilon_exam)},
      {"sim.omega", nested(&C::sim, &sim::SimConfig::omega)},
      {"sim.boredom_threshold", nested(&C::sim, &sim::SimConfig::boredom_threshold)},
      {"sim.boredom_window", nested(&C::sim, &sim::SimConfig::boredom_window)},
      {"sim.boredom_duration", nested(&C::sim, &sim::SimConfig::boredom_duration)},
      {"sim.divpen_factor", nested(&C::sim, &sim::SimConfig::divpen_factor)},
      {"sim.divpen_count", nested(&C::sim, &sim::SimConfig::divpen_count)},
      {"sim.sigmoid_offset", nested(&C::sim, &sim::SimConfig::sigmoid_offset)},
      {"sim.sigmoid_slope", nested(&C::sim, &sim::SimConfig::sigmoid_slope)},
      {"sim.component_stddev", nested(&C::sim, &sim::SimConfig::component_stddev)},
      {"sim.catalog_seed", number(&C::catalog_seed)},
      {"ranker",
       {[](C& c, const std::string& v) { c.ranker = rankers::parse_ranker(v); },
        [](const C& c) { return rankers::to_string(c.ranker); }}},
      {"agent",
       {[](C& c, const std::string& v) { c.agent = parse_agent(v); }, [](const C& c) { return to_string(c.agent); }}},
      {"wknn.candidates", number(&C::wknn_candidates)},
      {"gems.latent_dim", nested(&C::gems, &vae::GemsConfig::latent_dim)},
      {"gems.beta", nested(&C::gems, &vae::GemsConfig::beta)},
      {"gems.lambda", nested(&C::gems, &vae::GemsConfig::lambda)},
      {"gems.item_embed_dim", nested(&C::gems, &vae::GemsConfig::item_embed_dim)},
      {"gems.hidden", sizes(&C::gems, &vae::GemsConfig::hidden)},
      {"gems.epochs", nested(&C::gems, &vae::GemsConfig::epochs)},
      {"gems.batch_size", nested(&C::gems, &vae::GemsConfig::batch_size)},
      {"gems.learning_rate", nested(&C::gems, &vae::GemsConfig::learning_rate)},
      {"gems.kl_form",
       {[](C& c, const std::string& v) {
          if (v != "standard" && v != "literal") throw std::invalid_argument("config: gems.kl_form is standard|literal");
          c.gems.kl_form = v == "literal" ? vae::KlForm::kLiteral : vae::KlForm::kStandard;
        },
        [](const C& c) { return std::string(c.gems.kl_form == vae::KlForm::kLiteral ? "literal" : "standard"); }}},
      {"mf.embed_dim", nested(&C::mf, &data::MfConfig::embed_dim)},
      {"mf.learning_rate", nested(&C::mf, &data::MfConfig::learning_rate)},
      {"mf.epochs", nested(&C::mf, &data::MfConfig::epochs)},
      {"mf.negatives_per_positive", nested(&C::mf, &data::MfConfig::negatives_per_positive)},
      {"mf.l2", nested(&C::mf, &data::MfConfig::l2)},
      {"belief.dim", nested(&C::belief, &belief::BeliefConfig::belief_dim)},
      {"belief.truncation_window", nested(&C::belief, &belief::BeliefConfig::truncation_window)},
      {"sac.gamma", nested(&C::sac, &agents::SacConfig::gamma)},
      {"sac.tau", nested(&C::sac, &agents::SacConfig::tau)},
      {"sac.alpha", nested(&C::sac, &agents::SacConfig::alpha)},
      {"sac.critic_lr", nested(&C::sac, &agents::SacConfig::critic_lr)},
      {"sac.actor_lr", nested(&C::sac, &agents::SacConfig::actor_lr)},
      {"sac.batch_size", nested(&C::sac, &agents::SacConfig::batch_size)},
      {"sac.updates_per_step", nested(&C::sac, &agents::SacConfig::updates_per_step)},
      {"sac.hidden", sizes(&C::sac, &agents::SacConfig::hidden)},
      {"reinforce.gamma", nested(&C::reinforce, &agents::ReinforceConfig::gamma)},
      {"reinforce.learning_rate", nested(&C::reinforce, &agents::ReinforceConfig::learning_rate)},
      {"reinforce.baseline_decay", nested(&C::reinforce, &agents::ReinforceConfig::baseline_decay)},
      {"reinforce.hidden", sizes(&C::reinforce, &agents::ReinforceConfig::hidden)},
      {"buffer.capacity", number(&C::buffer_capacity)},
      {"train.update_every", number(&C::update_every)},
      {"data.trajectories", number(&C::logged_trajectories)},
      {"data.epsilon", number(&C::logging_epsilon)},
      {"train.steps", number(&C::training_steps)},
      {"train.validation_every", number(&C::validation_every)},
      {"train.validation_trajectories", number(&C::validation_trajectories)},
      {"train.test_trajectories", number(&C::test_trajectories)},
      {"seeds",
       {[](C& c, const std::string& v) { c.seeds = parse_list<std::uint64_t>("seeds", v); },
        [](const C& c) { return join(c.seeds); }}},
      {"artifacts.gems", {[](C& c, const std::string& v) { c.gems_checkpoint = v; },
                          [](const C& c) { return c.gems_checkpoint.string(); }}},
      {"artifacts.mf", {[](C& c, const std::string& v) { c.mf_checkpoint = v; },
                        [](const C& c) { return c.mf_checkpoint.string(); }}},
  };
  return table;
}

}  // namespace

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::kSac: return "sac";
    case AgentKind::kReinforce: return "reinforce";
    case AgentKind::kNone: return "none";
  }
  return "?";
}

AgentKind parse_agent(const std::string& s) {
  if (s == "sac") return AgentKind::kSac;
  if (s == "reinforce") return AgentKind::kReinforce;
  if (s == "none") return AgentKind::kNone;
  throw std::invalid_argument("unknown agent '" + s + "'");
}

sim::SimConfig ExperimentConfig::desk_sim() {
  sim::SimConfig s;
  s.num_items = 100;
  s.slate_size = 5;
  s.episode_length = 50;
  return s;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name != key) continue;
    try {
      field.set(*this, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config: bad value '" + value + "' for " + key + " (" + e.what() + ")");
    }
    return;
  }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

void ExperimentConfig::validate() const {
  sim.validate();
  gems.validate();
  sac.validate();
  reinforce.validate();
  if (training_steps < 0 || validation_every <= 0) throw std::invalid_argument("config: invalid training cadence");
  if (validation_trajectories <= 0 || test_trajectories <= 0) {
    throw std::invalid_argument("config: evaluation needs at least one trajectory");
  }
  if (update_every <= 0) throw std::invalid_argument("config: train.update_every must be positive");
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  if (ranker == rankers::RankerKind::kSlateQ) rankers::rank_slateq();
  const bool learned = agent != AgentKind::kNone;
  const bool static_ranker = ranker == rankers::RankerKind::kRandom || ranker == rankers::RankerKind::kOracle;
  if (learned == static_ranker) {
    throw std::invalid_argument("config: ranker " + rankers::to_string(ranker) + " does not pair with agent " +
                                to_string(agent));
  }
  if ((ranker == rankers::RankerKind::kSoftmax) != (agent == AgentKind::kReinforce)) {
    throw std::invalid_argument("config: the softmax ranker pairs with reinforce only");
  }
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + "=" + field.get(*this) + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

std::string ExperimentConfig::method_name() const {
  std::string name = to_string(agent) + "+" + rankers::to_string(ranker);
  if (agent == AgentKind::kSac) {
    std::ostringstream g;
    g << sac.gamma;
    name += "(g=" + g.str() + ")";
  }
  return name;
}

std::string ExperimentConfig::environment_name() const {
  return sim::to_string(sim.click_model) + "-" + sim::to_string(sim.embedding_variant);
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in,
                                                                  const std::filesystem::path& base_dir) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.rfind("include ", 0) == 0) {
      const auto sub = read_key_values(base_dir / trim(line.substr(8)));
      out.insert(out.end(), sub.begin(), sub.end());
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_key_values(in, path.parent_path());
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) cfg.set(k, v);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  apply_overrides(cfg, read_key_values(path));
  return cfg;
}

}  // namespace gems::harness
