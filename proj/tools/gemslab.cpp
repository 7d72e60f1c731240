// gemslab: data generation, pretraining, training, evaluation and reporting.

#include "gems/data/mf.hpp"
#include "gems/harness/report.hpp"
#include "gems/util/allocator.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace gems;
using namespace gems::harness;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value config file");
  cmd->add_option("--set", c.overrides, "override, key=value (repeatable)");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void print_losses(int epoch, const vae::LossComponents& l) {
  std::cout << "epoch " << epoch << " total " << l.total << " rec " << l.reconstruction << " click " << l.click
            << " kl " << l.kl << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"gemslab: slate recommendation with generative latent actions"};
  app.require_subcommand(1);

  Common common;
  std::uint64_t seed = 1;
  std::string out, data_path, ranker, agent, ckpt_path, runs_dir, diagnostics_path, csv_path;
  int trajectories = 0;

  auto* gen = app.add_subcommand("generate-data", "log epsilon-greedy oracle trajectories");
  add_common(gen, common);
  gen->add_option("--seed", seed);
  gen->add_option("--out", out)->required();

  auto* mf = app.add_subcommand("train-mf", "fit MF item embeddings on logged clicks");
  add_common(mf, common);
  mf->add_option("--data", data_path)->required();
  mf->add_option("--seed", seed);
  mf->add_option("--out", out)->required();

  auto* pre = app.add_subcommand("pretrain-gems", "pretrain the GeMS VAE on logged slates");
  add_common(pre, common);
  pre->add_option("--data", data_path)->required();
  pre->add_option("--seed", seed);
  pre->add_option("--out", out)->required();

  auto* tr = app.add_subcommand("train", "train an agent and test its best checkpoint");
  add_common(tr, common);
  tr->add_option("--ranker", ranker);
  tr->add_option("--agent", agent);
  auto* seed_opt = tr->add_option("--seed", seed, "run seed (default: every seed in the config)");
  tr->add_option("--out", out, "output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "evaluate a run checkpoint");
  add_common(ev, common);
  ev->add_option("--ckpt", ckpt_path)->required();
  ev->add_option("--trajectories", trajectories, "default: test-trajectories of the run config");
  auto* ev_seed = ev->add_option("--seed", seed, "default: the run seed");
  ev->add_option("--diagnostics", diagnostics_path, "per-item CSV");

  auto* rep = app.add_subcommand("report", "aggregate RunRecords into a results table");
  rep->add_option("--runs", runs_dir)->required();
  rep->add_option("--csv", csv_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ExperimentConfig cfg = resolve(common);
      const auto catalog = make_catalog(cfg);
      const data::Dataset d =
          data::generate_dataset(cfg.sim, catalog, cfg.logged_trajectories, cfg.logging_epsilon, seed);
      data::save_dataset(out, d);
      std::cout << "wrote " << d.trajectories.size() << " trajectories (" << d.num_clicks() << " clicks) to " << out
                << '\n';
    } else if (*mf) {
      ExperimentConfig cfg = resolve(common);
      const data::Dataset d = data::load_dataset(data_path);
      const data::MfResult r = data::train_mf(d, cfg.sim.num_items, cfg.mf, seed);
      for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) std::cout << "epoch " << e << " loss " << r.epoch_loss[e] << '\n';
      save_embeddings(out, r.item_embeddings);
    } else if (*pre) {
      ExperimentConfig cfg = resolve(common);
      const data::Dataset d = data::load_dataset(data_path);
      const vae::PretrainResult r = vae::pretrain(d, cfg.sim.num_items, cfg.gems, seed, print_losses);
      vae::save_gems(out, r.model);
    } else if (*tr) {
      ExperimentConfig cfg = resolve(common);
      if (!ranker.empty()) cfg.ranker = rankers::parse_ranker(ranker);
      if (!agent.empty()) cfg.agent = parse_agent(agent);
      if (*seed_opt) cfg.seeds = {seed};
      cfg.validate();
      const Artifacts art = load_artifacts(cfg);
      const std::filesystem::path dir(out);
      for (std::uint64_t s : cfg.seeds) {
        TrainOptions opt;
        opt.checkpoint_dir = dir / "checkpoints" / (cfg.method_name() + "-" + cfg.environment_name()) /
                             ("seed-" + std::to_string(s));
        opt.log = &std::cout;
        const TrainResult r = train(cfg, s, art, opt);
        append_run_record(dir / "runs.jsonl", r.record);
        std::cout << "test mean " << r.record.test_mean() << " (best checkpoint "
                  << r.record.validation[static_cast<std::size_t>(r.record.best_checkpoint)].step << ")\n";
      }
    } else if (*ev) {
      const ad::Checkpoint ckpt = ad::load_checkpoint(ckpt_path);
      ExperimentConfig cfg = checkpoint_config(ckpt);
      if (!common.config.empty()) apply_overrides(cfg, read_key_values(common.config));
      for (const auto& kv : common.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      const std::uint64_t s = *ev_seed ? seed : std::stoull(ckpt.meta("seed"));
      const int n = trajectories > 0 ? trajectories : cfg.test_trajectories;
      std::vector<DiagnosticRow> diag;
      const auto returns = evaluate(cfg, load_artifacts(cfg), ckpt, n, s, "env-test",
                                    diagnostics_path.empty() ? nullptr : &diag);
      const ConfidenceInterval ci = confidence_interval(returns);
      std::cout << "mean return " << ci.mean << " +- " << ci.half_width << " over " << returns.size()
                << " trajectories\n";
      if (!diagnostics_path.empty()) {
        std::ofstream f(diagnostics_path);
        write_diagnostics_csv(f, diag);
      }
    } else if (*rep) {
      const auto rows = build_report(read_run_directory(runs_dir));
      write_report_text(std::cout, rows);
      if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        write_report_csv(f, rows);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
