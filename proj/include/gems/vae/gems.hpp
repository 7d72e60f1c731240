#pragma once

// Variational auto-encoder over (slate, clicks) pairs. The latent space is the
// action space of the RL agent; the frozen decoder turns latents into slates.

#include "gems/autodiff/checkpoint.hpp"
#include "gems/autodiff/layers.hpp"
#include "gems/data/dataset.hpp"

#include <functional>
#include <span>

namespace gems::vae {

using ad::Tape;
using ad::Var;
using sim::ClickVector;
using sim::Slate;

enum class KlForm {
  kStandard,  // 0.5 * sum(sigma^2 + mu^2 - log sigma^2 - 1)
  kLiteral,   // sum(sigma^2 + mu^2 - log sigma - 1), kept for comparison only
};

struct GemsConfig {
  int latent_dim = 16;
  double beta = 1.0;
  double lambda = 0.5;
  int item_embed_dim = 20;
  std::vector<Eigen::Index> hidden{256, 256};
  int epochs = 10;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double item_init_stddev = 0.01;
  KlForm kl_form = KlForm::kStandard;

  void validate() const;
};

/// Parameters live in one store: "gems.items" [num_items x item_embed_dim],
/// "enc.*" and "dec.*" MLP layers.
class GemsModel {
 public:
  GemsModel() = default;
  GemsModel(GemsConfig cfg, int num_items, int slate_size);

  static GemsModel create(const GemsConfig& cfg, int num_items, int slate_size, std::uint64_t seed);

  const GemsConfig& config() const { return cfg_; }
  int num_items() const { return num_items_; }
  int slate_size() const { return slate_size_; }
  int latent_dim() const { return cfg_.latent_dim; }
  const nn::Mlp& encoder() const { return encoder_; }
  const nn::Mlp& decoder() const { return decoder_; }
  ad::ParameterStore& store() { return store_; }
  const ad::ParameterStore& store() const { return store_; }
  const Eigen::MatrixXd& item_embeddings() const;

  ad::Checkpoint to_checkpoint() const;
  static GemsModel from_checkpoint(const ad::Checkpoint& ckpt);

 private:
  GemsConfig cfg_;
  int num_items_ = 0;
  int slate_size_ = 0;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  ad::ParameterStore store_;
};

inline constexpr const char* kItemTable = "gems.items";

struct LatentSample {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_sigma;
  Eigen::VectorXd z;
};

struct LatentVars {
  Var mu;         // [B x d]
  Var log_sigma;  // [B x d]
  Var z;          // [B x d]
};

struct DecoderVars {
  std::vector<Var> item_log_probs;  // k entries of [B x num_items]
  Var click_logits;                 // [B x k]
};

/// Batched encoder. `noise` is [B x d]; z = mu + exp(log_sigma) * noise.
LatentVars encode(Tape& tape, GemsModel& model, std::span<const Slate> slates, std::span<const ClickVector> clicks,
                  const Eigen::MatrixXd& noise, bool trainable = true);

/// Batched decoder. The item table enters the logits as a constant.
DecoderVars decode(Tape& tape, GemsModel& model, Var z, bool trainable = true);

LatentSample encode(const GemsModel& model, const Slate& slate, const ClickVector& clicks,
                    const Eigen::VectorXd& noise);

struct Decoded {
  Eigen::MatrixXd item_log_probs;     // [k x num_items]
  Eigen::VectorXd click_probabilities;  // [k]
};
Decoded decode(const GemsModel& model, const Eigen::VectorXd& z);

/// Per slot, the most likely item; ties go to the lowest id.
Slate decode_to_slate(const GemsModel& model, const Eigen::VectorXd& z);
Slate argmax_slate(const Eigen::MatrixXd& slot_scores);

/// Loss terms averaged over the batch. total = reconstruction + click + kl.
struct LossComponents {
  double total = 0.0;
  double reconstruction = 0.0;  // -sum_j log p(a_j | z)
  double click = 0.0;           // -lambda * sum_j log p(c_j | z)
  double kl = 0.0;              // beta * KL
  double raw_kl = 0.0;          // KL without the beta weight
};

struct LossVars {
  Var total;
  LossComponents components;
};

LossVars gems_loss(Tape& tape, GemsModel& model, std::span<const Slate> slates, std::span<const ClickVector> clicks,
                   const Eigen::MatrixXd& noise);

/// KL(q || N(0, I)) per row as a [B x 1] node.
Var kl_divergence(Var mu, Var log_sigma, KlForm form);

struct PretrainResult {
  GemsModel model;
  std::vector<LossComponents> epoch_means;
};

using EpochLogger = std::function<void(int epoch, const LossComponents&)>;

/// Shuffled mini-batch Adam over every logged turn.
PretrainResult pretrain(const data::Dataset& dataset, int num_items, const GemsConfig& cfg, std::uint64_t seed,
                        const EpochLogger& log = {});

void save_gems(const std::filesystem::path& path, const GemsModel& model);
GemsModel load_gems(const std::filesystem::path& path);

}  // namespace gems::vae
