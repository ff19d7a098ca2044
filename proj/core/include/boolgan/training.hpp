// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "boolgan/checkpoint.hpp"
#include "boolgan/config.hpp"
#include "boolgan/data.hpp"
#include "boolgan/fid.hpp"
#include "boolgan/losses.hpp"
#include "boolgan/optim.hpp"

namespace boolgan {

// Stream ids under cfg.seed. Each consumer owns one so that, e.g., turning
// dropout on does not shift the latent draws.
namespace streams {
constexpr std::uint64_t kShuffle = 1;
constexpr std::uint64_t kLatent = 2;
constexpr std::uint64_t kDropout = 3;
constexpr std::uint64_t kGeneratorInit = 4;
constexpr std::uint64_t kDiscriminatorInit = 5;
constexpr std::uint64_t kEvalLatent = 6;
constexpr std::uint64_t kRealSubset = 7;
}  // namespace streams

ModelSpec generator_spec(const TrainConfig& cfg);
ModelSpec discriminator_spec(const TrainConfig& cfg);

struct StepLosses {
  double loss_d = 0.0;
  double loss_g = 0.0;
};

struct StepCounters {
  std::uint64_t d_updates = 0;
  std::uint64_t g_updates = 0;
};

/// Owns both players, their optimizer states and RNG streams.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::vector<ImageU8> dataset);

  /// n_critic discriminator/critic updates on `real` (fresh z each), then one
  /// generator update. Throws NonFinite naming the sub-step on a bad loss.
  StepLosses training_step(const TensorF& real);

  /// Called after every critic update; used to assert the clip invariant.
  std::function<void(const ParamSet<float>&)> after_critic_update;

  std::vector<std::vector<std::size_t>> epoch_batches();
  TensorF real_batch(std::span<const std::size_t> indices) const;

  /// Samples from the eval-latent stream, restarted at counter 0 each call,
  /// so every evaluation sees the same z.
  std::vector<ImageU8> eval_samples(std::size_t n) const;

  /// Proxy FID of cfg.fid_sample_count eval samples vs a fixed real subset.
  double evaluate_fid(std::size_t sample_count = 0);

  /// Halves the base rates every cfg.lr_decay_every epochs.
  void set_epoch(std::size_t epoch);

  Checkpoint checkpoint(std::uint64_t iteration) const;

  const TrainConfig& config() const noexcept { return cfg_; }
  const ModelSpec& g_spec() const noexcept { return g_spec_; }
  const ModelSpec& d_spec() const noexcept { return d_spec_; }
  const ParamSet<float>& g_params() const noexcept { return g_; }
  const ParamSet<float>& d_params() const noexcept { return d_; }
  ParamSet<float>& g_params() noexcept { return g_; }
  ParamSet<float>& d_params() noexcept { return d_; }
  const StepCounters& counters() const noexcept { return counters_; }
  std::size_t dataset_size() const noexcept { return dataset_.size(); }

 private:
  void optimizer_step(ParamSet<float>& params, const ParamSet<float>& grads, OptState<float>& st,
                      double lr);

  TrainConfig cfg_;
  std::vector<ImageU8> dataset_;
  ModelSpec g_spec_;
  ModelSpec d_spec_;
  ParamSet<float> g_;
  ParamSet<float> d_;
  OptState<float> g_opt_;
  OptState<float> d_opt_;
  RngStream shuffle_rng_;
  RngStream latent_rng_;
  RngStream dropout_rng_;
  double lr_scale_ = 1.0;
  StepCounters counters_;
  std::optional<GaussianStats> real_stats_;
  std::size_t real_stats_count_ = 0;
};

struct MetricsRow {
  std::uint64_t iteration = 0;
  std::size_t epoch = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  std::optional<double> fid;
};

struct RunReport {
  std::vector<MetricsRow> rows;
  std::filesystem::path final_checkpoint;
  std::optional<double> best_fid;
  double wall_seconds = 0.0;
};

/// Full run over an in-memory dataset. Writes into out_dir:
///   config.txt, metrics.csv, epoch_NNN.ckpt, best_fid.ckpt, final.ckpt,
///   samples_iterNNNNNN.png (64-sample grid per evaluation).
RunReport run_training(const TrainConfig& cfg, std::vector<ImageU8> dataset,
                       const std::filesystem::path& out_dir,
                       const std::function<void(const MetricsRow&)>& on_row = {});

/// Loads cfg.data_dir at 64x64 and runs into resolve_out_dir(cfg).
RunReport train(const TrainConfig& cfg, const std::function<void(const MetricsRow&)>& on_row = {});

/// cfg.out_dir, else $BOOLGAN_OUT_DIR, else "runs".
std::filesystem::path resolve_out_dir(const TrainConfig& cfg);

std::string format_metrics_row(const MetricsRow& row);
constexpr const char* kMetricsHeader = "iteration,epoch,loss_d,loss_g,fid";

/// z ~ N(0, I), eval-mode forward, mapped to bytes with round((x + 1) * 127.5).
std::vector<ImageU8> generate_samples(const ModelSpec& gen_spec, const ParamSet<float>& gen_params,
                                      std::size_t n, RngStream& rng);

/// Generator spec and parameters recovered from a training checkpoint.
struct LoadedGenerator {
  ModelSpec spec;
  ParamSet<float> params;
};

LoadedGenerator load_generator(const Checkpoint& ckpt);

}  // namespace boolgan
