#include "gems/harness/experiment.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

namespace gems::harness {
namespace {

using nlohmann::json;

// One episode with the live agent. Training episodes push transitions and
// run updates; the returned value is the click sum.
double run_episode(Agent& agent, sim::Environment& env, std::uint64_t user_seed, bool training, Rng& action_rng,
                   Rng* update_rng, int update_every, long long* turn_counter, int episode_index,
                   std::vector<DiagnosticRow>* diagnostics) {
  env.reset(user_seed);
  agent.begin_episode();
  double total = 0.0;
  while (!env.done()) {
    const Slate slate = agent.act(env, training, action_rng);
    std::vector<DiagnosticRow> rows;
    if (diagnostics) {
      const sim::DisclosedView view = env.disclosed();
      const auto& user = view.user();
      for (std::size_t j = 0; j < slate.size(); ++j) {
        DiagnosticRow r;
        r.episode = episode_index;
        r.turn = env.turn();
        r.slot = static_cast<int>(j);
        r.item = slate[j];
        r.relevance = sim::relevance(user, slate[j], view.catalog(), env.config());
        r.topic_bored = user.is_bored(view.catalog().main_topic[static_cast<std::size_t>(slate[j])]);
        r.bored_topics = static_cast<int>(user.bored_topics.size());
        rows.push_back(r);
      }
    }
    const sim::StepResult res = env.step(slate);
    if (diagnostics) {
      for (auto& r : rows) r.clicked = res.clicks[static_cast<std::size_t>(r.slot)] != 0;
      diagnostics->insert(diagnostics->end(), rows.begin(), rows.end());
    }
    total += res.reward;
    const bool done = env.done();
    agent.observe(slate, res.clicks, static_cast<double>(res.reward), done);
    if (training) {
      ++*turn_counter;
      if (*turn_counter % update_every == 0) agent.update(*update_rng);
    }
  }
  if (training) agent.end_episode();
  return total;
}

std::vector<double> deterministic_returns(Agent& agent, sim::Environment& env, int n, std::uint64_t seed,
                                          const std::string& stream, Rng& action_rng,
                                          std::vector<DiagnosticRow>* diagnostics) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(run_episode(agent, env, derive_seed(seed, stream, static_cast<std::uint64_t>(i)), false,
                              action_rng, nullptr, 1, nullptr, i, diagnostics));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

double RunRecord::test_mean() const { return mean_of(test_returns); }

std::string RunRecord::to_json(bool include_wall_clock) const {
  json j;
  j["method"] = method;
  j["environment"] = environment;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  json val = json::array();
  for (const auto& v : validation) val.push_back({{"step", v.step}, {"mean_return", v.mean_return}});
  j["validation"] = val;
  j["best_checkpoint"] = best_checkpoint;
  j["test_returns"] = test_returns;
  if (include_wall_clock) j["wall_clock_seconds"] = wall_clock_seconds;
  return j.dump();
}

RunRecord RunRecord::from_json(const std::string& line) {
  const json j = json::parse(line);
  RunRecord r;
  r.method = j.at("method").get<std::string>();
  r.environment = j.at("environment").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::uint64_t>();
  for (const auto& v : j.at("validation")) r.validation.push_back({v.at("step").get<int>(), v.at("mean_return").get<double>()});
  r.best_checkpoint = j.at("best_checkpoint").get<int>();
  r.test_returns = j.at("test_returns").get<std::vector<double>>();
  r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  return r;
}

void append_run_record(const std::filesystem::path& path, const RunRecord& record) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << record.to_json() << '\n';
}

std::vector<RunRecord> read_run_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(RunRecord::from_json(line));
  }
  return out;
}

std::vector<RunRecord> read_run_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) {
    auto recs = read_run_records(f);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

sim::ItemCatalog make_catalog(const ExperimentConfig& cfg) {
  return sim::generate_item_catalog(cfg.sim, cfg.catalog_seed);
}

ad::Checkpoint run_checkpoint(const ExperimentConfig& cfg, std::uint64_t seed, int step, const ad::Checkpoint& agent) {
  ad::Checkpoint c = agent;
  c.metadata["config"] = cfg.canonical();
  c.metadata["seed"] = std::to_string(seed);
  c.metadata["step"] = std::to_string(step);
  return c;
}

ExperimentConfig checkpoint_config(const ad::Checkpoint& ckpt) {
  std::istringstream in(ckpt.meta("config"));
  ExperimentConfig cfg;
  apply_overrides(cfg, parse_key_values(in));
  return cfg;
}

TrainResult train(const ExperimentConfig& cfg, std::uint64_t seed, const Artifacts& artifacts,
                  const TrainOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  sim::Environment env(cfg.sim, make_catalog(cfg));
  std::unique_ptr<Agent> agent = make_agent(cfg, artifacts, env, seed);
  Rng action_rng = make_rng(seed, "action");
  Rng buffer_rng = make_rng(seed, "buffer");
  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);

  TrainResult result;
  RunRecord& rec = result.record;
  rec.method = cfg.method_name();
  rec.environment = cfg.environment_name();
  rec.seed = seed;
  rec.config_hash = cfg.hash();

  auto validate_now = [&](int step) {
    Rng eval_rng = make_rng(seed, "action-val", rec.validation.size());
    const auto returns = deterministic_returns(*agent, env, cfg.validation_trajectories, seed, "env-val", eval_rng,
                                               nullptr);
    const ValidationPoint vp{step, mean_of(returns)};
    ad::Checkpoint ckpt = run_checkpoint(cfg, seed, step, agent->checkpoint());
    ckpt.metadata["rng.action"] = serialize_rng(action_rng);
    ckpt.metadata["rng.buffer"] = serialize_rng(buffer_rng);
    if (options.checkpoint_dir) {
      ad::save_checkpoint(*options.checkpoint_dir / ("ckpt-" + std::to_string(step) + ".bin"), ckpt);
    }
    // Ties keep the earlier checkpoint.
    if (rec.validation.empty() || vp.mean_return > rec.validation[static_cast<std::size_t>(rec.best_checkpoint)].mean_return) {
      rec.best_checkpoint = static_cast<int>(rec.validation.size());
      result.best = std::move(ckpt);
    }
    rec.validation.push_back(vp);
    if (options.log) {
      *options.log << "[train] " << rec.method << " seed " << seed << " step " << step << " val " << vp.mean_return
                   << '\n';
    }
  };

  validate_now(0);
  long long turns = 0;
  for (int step = 0; step < cfg.training_steps; ++step) {
    run_episode(*agent, env, derive_seed(seed, "env-train", static_cast<std::uint64_t>(step)), true, action_rng,
                &buffer_rng, cfg.update_every, &turns, step, nullptr);
    if ((step + 1) % cfg.validation_every == 0 || step + 1 == cfg.training_steps) validate_now(step + 1);
  }

  if (options.checkpoint_dir) ad::save_checkpoint(*options.checkpoint_dir / "best.bin", result.best);
  rec.test_returns = evaluate(cfg, artifacts, result.best, cfg.test_trajectories, seed);
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<double> evaluate(const ExperimentConfig& cfg, const Artifacts& artifacts, const ad::Checkpoint& checkpoint,
                             int num_trajectories, std::uint64_t seed, const std::string& stream,
                             std::vector<DiagnosticRow>* diagnostics) {
  if (num_trajectories <= 0) throw std::invalid_argument("evaluate: need at least one trajectory");
  sim::Environment env(cfg.sim, make_catalog(cfg));
  std::unique_ptr<Agent> agent = make_agent(cfg, artifacts, env, seed);
  agent->restore(checkpoint);
  Rng rng = make_rng(seed, "action-" + stream);
  return deterministic_returns(*agent, env, num_trajectories, seed, stream, rng, diagnostics);
}

void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticRow>& rows) {
  out << "episode,turn,slot,item,relevance,topic_bored,bored_topics,clicked\n";
  const auto old = out.precision(17);
  for (const auto& r : rows) {
    out << r.episode << ',' << r.turn << ',' << r.slot << ',' << r.item << ',' << r.relevance << ','
        << (r.topic_bored ? 1 : 0) << ',' << r.bored_topics << ',' << (r.clicked ? 1 : 0) << '\n';
  }
  out.precision(old);
}

}  // namespace gems::harness
