#include "gems/vae/gems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gems::vae {

using ad::Matrix;

namespace {

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string join(const std::vector<Eigen::Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<Eigen::Index> split_sizes(const std::string& s) {
  std::vector<Eigen::Index> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) out.push_back(std::stoll(part));
  }
  return out;
}

}  // namespace

void GemsConfig::validate() const {
  if (latent_dim <= 0) throw std::invalid_argument("GemsConfig: latent_dim must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("GemsConfig: beta must be non-negative");
  if (!(lambda >= 0.0)) throw std::invalid_argument("GemsConfig: lambda must be non-negative");
  if (item_embed_dim <= 0) throw std::invalid_argument("GemsConfig: item_embed_dim must be positive");
  if (epochs < 0 || batch_size <= 0 || !(learning_rate > 0.0)) {
    throw std::invalid_argument("GemsConfig: invalid optimisation settings");
  }
  for (auto h : hidden) {
    if (h <= 0) throw std::invalid_argument("GemsConfig: hidden sizes must be positive");
  }
}

GemsModel::GemsModel(GemsConfig cfg, int num_items, int slate_size)
    : cfg_(std::move(cfg)), num_items_(num_items), slate_size_(slate_size) {
  cfg_.validate();
  if (num_items <= 0 || slate_size <= 0) throw std::invalid_argument("GemsModel: empty catalog or slate");
  const Eigen::Index slot = cfg_.item_embed_dim + 1;
  encoder_ = nn::Mlp("enc", slate_size * slot, cfg_.hidden, 2 * cfg_.latent_dim, nn::Activation::kTanh);
  decoder_ = nn::Mlp("dec", cfg_.latent_dim, cfg_.hidden, slate_size * slot, nn::Activation::kTanh);
}

GemsModel GemsModel::create(const GemsConfig& cfg, int num_items, int slate_size, std::uint64_t seed) {
  GemsModel m(cfg, num_items, slate_size);
  Rng rng(derive_seed(seed, "gems-init"));
  m.store_.add(kItemTable, gaussian_matrix(rng, num_items, cfg.item_embed_dim, cfg.item_init_stddev));
  m.encoder_.init(m.store_, rng);
  m.decoder_.init(m.store_, rng);
  return m;
}

const Eigen::MatrixXd& GemsModel::item_embeddings() const { return store_.at(kItemTable).value; }

ad::Checkpoint GemsModel::to_checkpoint() const {
  ad::Checkpoint ckpt;
  auto& m = ckpt.metadata;
  m["kind"] = "gems";
  m["gems.latent_dim"] = std::to_string(cfg_.latent_dim);
  m["gems.beta"] = format_double(cfg_.beta);
  m["gems.lambda"] = format_double(cfg_.lambda);
  m["gems.item_embed_dim"] = std::to_string(cfg_.item_embed_dim);
  m["gems.hidden"] = join(cfg_.hidden);
  m["gems.epochs"] = std::to_string(cfg_.epochs);
  m["gems.batch_size"] = std::to_string(cfg_.batch_size);
  m["gems.learning_rate"] = format_double(cfg_.learning_rate);
  m["gems.item_init_stddev"] = format_double(cfg_.item_init_stddev);
  m["gems.kl_form"] = cfg_.kl_form == KlForm::kStandard ? "standard" : "literal";
  m["gems.num_items"] = std::to_string(num_items_);
  m["gems.slate_size"] = std::to_string(slate_size_);
  ckpt.stores.emplace("gems", store_);
  return ckpt;
}

GemsModel GemsModel::from_checkpoint(const ad::Checkpoint& ckpt) {
  if (ckpt.metadata.count("kind") == 0 || ckpt.meta("kind") != "gems") {
    throw std::invalid_argument("checkpoint does not hold a GeMS model");
  }
  GemsConfig cfg;
  cfg.latent_dim = std::stoi(ckpt.meta("gems.latent_dim"));
  cfg.beta = std::stod(ckpt.meta("gems.beta"));
  cfg.lambda = std::stod(ckpt.meta("gems.lambda"));
  cfg.item_embed_dim = std::stoi(ckpt.meta("gems.item_embed_dim"));
  cfg.hidden = split_sizes(ckpt.meta("gems.hidden"));
  cfg.epochs = std::stoi(ckpt.meta("gems.epochs"));
  cfg.batch_size = std::stoi(ckpt.meta("gems.batch_size"));
  cfg.learning_rate = std::stod(ckpt.meta("gems.learning_rate"));
  cfg.item_init_stddev = std::stod(ckpt.meta("gems.item_init_stddev"));
  cfg.kl_form = ckpt.meta("gems.kl_form") == "literal" ? KlForm::kLiteral : KlForm::kStandard;
  GemsModel m(cfg, std::stoi(ckpt.meta("gems.num_items")), std::stoi(ckpt.meta("gems.slate_size")));
  m.store_ = ckpt.store("gems");
  if (m.item_embeddings().rows() != m.num_items_ || m.item_embeddings().cols() != cfg.item_embed_dim) {
    throw std::invalid_argument("GeMS checkpoint: item table shape mismatch");
  }
  return m;
}

LatentVars encode(Tape& tape, GemsModel& model, std::span<const Slate> slates, std::span<const ClickVector> clicks,
                  const Eigen::MatrixXd& noise, bool trainable) {
  const std::size_t batch = slates.size();
  const int k = model.slate_size();
  const int d = model.latent_dim();
  if (clicks.size() != batch || batch == 0) throw std::invalid_argument("encode: slates and clicks must align");
  if (noise.rows() != static_cast<Eigen::Index>(batch) || noise.cols() != d) {
    throw std::invalid_argument("encode: noise must be [batch x latent_dim]");
  }
  Var table = tape.parameter(model.store(), kItemTable, trainable);
  std::vector<Var> parts;
  parts.reserve(2 * static_cast<std::size_t>(k));
  std::vector<int> ids(batch);
  Matrix click_col(static_cast<Eigen::Index>(batch), 1);
  for (int j = 0; j < k; ++j) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (slates[b].size() != static_cast<std::size_t>(k) || clicks[b].size() != static_cast<std::size_t>(k)) {
        throw std::invalid_argument("encode: slate length differs from k");
      }
      ids[b] = slates[b][static_cast<std::size_t>(j)];
      click_col(static_cast<Eigen::Index>(b), 0) = clicks[b][static_cast<std::size_t>(j)];
    }
    parts.push_back(ad::gather_rows(table, std::span<const int>(ids)));
    parts.push_back(tape.constant(click_col));
  }
  Var out = model.encoder()(tape, model.store(), ad::concat_cols(std::span<const Var>(parts)), trainable);
  LatentVars lv;
  lv.mu = ad::slice_cols(out, 0, d);
  lv.log_sigma = ad::slice_cols(out, d, d);
  lv.z = lv.mu + ad::cwise_product(ad::exp(lv.log_sigma), tape.constant(noise));
  return lv;
}

DecoderVars decode(Tape& tape, GemsModel& model, Var z, bool trainable) {
  const int k = model.slate_size();
  const Eigen::Index e = model.config().item_embed_dim;
  if (z.cols() != model.latent_dim()) throw std::invalid_argument("decode: latent width mismatch");
  Var out = model.decoder()(tape, model.store(), z, trainable);
  Var table_t = ad::transpose(tape.parameter(model.store(), kItemTable, false));
  DecoderVars dv;
  std::vector<Var> click_parts;
  for (int j = 0; j < k; ++j) {
    Var emb = ad::slice_cols(out, j * (e + 1), e);
    dv.item_log_probs.push_back(ad::log_softmax(ad::matmul(emb, table_t)));
    click_parts.push_back(ad::slice_cols(out, j * (e + 1) + e, 1));
  }
  dv.click_logits = ad::concat_cols(std::span<const Var>(click_parts));
  return dv;
}

LatentSample encode(const GemsModel& model, const Slate& slate, const ClickVector& clicks,
                    const Eigen::VectorXd& noise) {
  Tape tape;
  // Non-trainable binding never writes to the store.
  auto& m = const_cast<GemsModel&>(model);
  const LatentVars lv = encode(tape, m, std::span<const Slate>(&slate, 1), std::span<const ClickVector>(&clicks, 1),
                               noise.transpose(), false);
  return {lv.mu.value().row(0).transpose(), lv.log_sigma.value().row(0).transpose(), lv.z.value().row(0).transpose()};
}

Decoded decode(const GemsModel& model, const Eigen::VectorXd& z) {
  Tape tape;
  auto& m = const_cast<GemsModel&>(model);
  const DecoderVars dv = decode(tape, m, tape.constant(Matrix(z.transpose())), false);
  Decoded out;
  out.item_log_probs.resize(model.slate_size(), model.num_items());
  for (int j = 0; j < model.slate_size(); ++j) out.item_log_probs.row(j) = dv.item_log_probs[j].value().row(0);
  out.click_probabilities = dv.click_logits.value().row(0).transpose().unaryExpr([](double x) {
    return 1.0 / (1.0 + std::exp(-x));
  });
  return out;
}

Slate argmax_slate(const Eigen::MatrixXd& slot_scores) {
  Slate slate(static_cast<std::size_t>(slot_scores.rows()));
  for (Eigen::Index j = 0; j < slot_scores.rows(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < slot_scores.cols(); ++i) {
      if (slot_scores(j, i) > slot_scores(j, best)) best = i;
    }
    slate[static_cast<std::size_t>(j)] = static_cast<sim::ItemId>(best);
  }
  return slate;
}

Slate decode_to_slate(const GemsModel& model, const Eigen::VectorXd& z) {
  return argmax_slate(decode(model, z).item_log_probs);
}

Var kl_divergence(Var mu, Var log_sigma, KlForm form) {
  Var var = ad::exp(2.0 * log_sigma);
  if (form == KlForm::kStandard) return 0.5 * ad::row_sum(var + ad::square(mu) - 2.0 * log_sigma - 1.0);
  return ad::row_sum(var + ad::square(mu) - log_sigma - 1.0);
}

LossVars gems_loss(Tape& tape, GemsModel& model, std::span<const Slate> slates, std::span<const ClickVector> clicks,
                   const Eigen::MatrixXd& noise) {
  const GemsConfig& cfg = model.config();
  const auto batch = static_cast<Eigen::Index>(slates.size());
  const int k = model.slate_size();
  const LatentVars lv = encode(tape, model, slates, clicks, noise);
  const DecoderVars dv = decode(tape, model, lv.z);

  const double inv_b = 1.0 / static_cast<double>(batch);
  Var recon = tape.constant(0.0);
  for (int j = 0; j < k; ++j) {
    Matrix onehot = Matrix::Zero(batch, model.num_items());
    for (Eigen::Index b = 0; b < batch; ++b) onehot(b, slates[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)]) = 1.0;
    recon = recon - ad::sum(ad::cwise_product(dv.item_log_probs[static_cast<std::size_t>(j)], tape.constant(onehot)));
  }
  recon = recon * inv_b;

  Matrix c(batch, k);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int j = 0; j < k; ++j) c(b, j) = clicks[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
  }
  // -log p(c | logit) = softplus(logit) - c * logit
  Var click_nll = ad::sum(ad::softplus(dv.click_logits) - ad::cwise_product(tape.constant(c), dv.click_logits)) * inv_b;
  Var raw_kl = ad::sum(kl_divergence(lv.mu, lv.log_sigma, cfg.kl_form)) * inv_b;

  Var click_term = click_nll * cfg.lambda;
  Var kl_term = raw_kl * cfg.beta;
  LossVars out;
  out.total = recon + click_term + kl_term;
  out.components.reconstruction = recon.scalar();
  out.components.click = click_term.scalar();
  out.components.kl = kl_term.scalar();
  out.components.raw_kl = raw_kl.scalar();
  out.components.total = out.total.scalar();
  if (!std::isfinite(out.components.total)) throw ad::NonFiniteError("gems_loss: non-finite loss");
  return out;
}

PretrainResult pretrain(const data::Dataset& dataset, int num_items, const GemsConfig& cfg, std::uint64_t seed,
                        const EpochLogger& log) {
  std::vector<const data::LoggedTurn*> turns;
  for (const auto& traj : dataset.trajectories) {
    for (const auto& t : traj.turns) turns.push_back(&t);
  }
  if (turns.empty()) throw std::invalid_argument("pretrain: empty dataset");

  PretrainResult result{GemsModel::create(cfg, num_items, dataset.slate_size, seed), {}};
  GemsModel& model = result.model;
  const ad::AdamConfig adam{cfg.learning_rate};
  Rng shuffle_rng(derive_seed(seed, "gems-shuffle"));
  Rng noise_rng(derive_seed(seed, "gems-noise"));
  std::vector<std::size_t> order(turns.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Slate> slates;
  std::vector<ClickVector> clicks;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    LossComponents sum;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      slates.clear();
      clicks.clear();
      for (std::size_t i = start; i < end; ++i) {
        slates.push_back(turns[order[i]]->slate);
        clicks.push_back(turns[order[i]]->clicks);
      }
      const auto b = static_cast<Eigen::Index>(slates.size());
      const Eigen::MatrixXd noise = gaussian_matrix(noise_rng, b, cfg.latent_dim);
      Tape tape;
      const LossVars loss = gems_loss(tape, model, slates, clicks, noise);
      tape.backward(loss.total);
      ad::adam_step(model.store(), adam);
      const double w = static_cast<double>(b);
      sum.total += w * loss.components.total;
      sum.reconstruction += w * loss.components.reconstruction;
      sum.click += w * loss.components.click;
      sum.kl += w * loss.components.kl;
      sum.raw_kl += w * loss.components.raw_kl;
      seen += static_cast<std::size_t>(b);
    }
    const double inv = 1.0 / static_cast<double>(seen);
    LossComponents mean{sum.total * inv, sum.reconstruction * inv, sum.click * inv, sum.kl * inv, sum.raw_kl * inv};
    result.epoch_means.push_back(mean);
    if (log) log(epoch, mean);
  }
  return result;
}

void save_gems(const std::filesystem::path& path, const GemsModel& model) {
  ad::save_checkpoint(path, model.to_checkpoint());
}

GemsModel load_gems(const std::filesystem::path& path) { return GemsModel::from_checkpoint(ad::load_checkpoint(path)); }

}  // namespace gems::vae
