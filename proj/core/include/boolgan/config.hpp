// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boolgan/optim.hpp"

namespace boolgan {

enum class ModelKind { Dcgan, Boolgan };
enum class LossKind { Dcgan, Wgan };

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(LossKind kind) noexcept;

constexpr double kDefaultLearningRate = 2e-4;
constexpr double kBoolganLearningRate = 7.5e-4;
constexpr std::size_t kDefaultEpochs = 50;
constexpr std::size_t kBoolganEpochs = 80;
constexpr double kDefaultClip = 0.1;
/// Dropout rate used by the dropout regimes; the baseline runs without it.
constexpr double kRegimeDropout = 0.2;

/// Every knob of a training run. Learning rates and the epoch count default
/// per model when left unset; see the resolved_* accessors.
struct TrainConfig {
  ModelKind model = ModelKind::Dcgan;
  LossKind loss = LossKind::Dcgan;
  double dropout_p = 0.0;
  std::optional<double> lr_g;
  std::optional<double> lr_d;
  double beta1 = 0.5;
  double beta2 = 0.999;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double rho = 0.99;
  double clip_c = kDefaultClip;
  std::size_t n_critic = 1;
  std::size_t batch_size = 128;
  std::optional<std::size_t> epochs;
  std::size_t z_dim = 100;
  std::size_t base_width = 64;
  std::uint64_t seed = 0;
  std::size_t fid_every_n_iters = 500;  // 0 disables evaluation
  std::size_t fid_sample_count = 1024;
  std::string data_dir = "data/images";
  std::string out_dir;  // empty: $BOOLGAN_OUT_DIR, else "runs"
  bool drop_last = true;
  std::uint64_t embedder_seed = 0;
  std::size_t embedder_dim = 64;
  std::size_t lr_decay_every = 0;  // halve both rates every N epochs; 0 = off
  std::size_t max_iters = 0;       // stop early after N iterations; 0 = off

  double resolved_lr_g() const noexcept;
  double resolved_lr_d() const noexcept;
  std::size_t resolved_epochs() const noexcept;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Key names accepted by config files and --set, in dump order.
const std::vector<std::string_view>& config_keys();

/// Assigns one key. Throws Config for unknown keys or unparsable values.
void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value);

/// Applies "key = value" lines onto cfg. Blank lines and '#' comments are
/// ignored. Errors carry "origin:line:".
void apply_config_text(TrainConfig& cfg, std::string_view text, std::string_view origin);

TrainConfig load_config_file(const std::filesystem::path& path);

/// Parses a single "key=value" override.
void apply_override(TrainConfig& cfg, std::string_view assignment);

/// Throws Config when the values are out of range.
void validate_config(const TrainConfig& cfg);

/// One "key = value" line per key with defaults resolved. Parsing the dump
/// reproduces the same dump byte for byte.
std::string dump_config(const TrainConfig& cfg);

/// Fingerprint of everything that influences the trained bytes; out_dir is
/// excluded so identical runs in different directories agree.
std::uint64_t config_hash(const TrainConfig& cfg);

/// Named regimes: baseline, dropout, wgan, wgan_dropout, boolgan.
const std::vector<std::string_view>& preset_names();
TrainConfig preset(std::string_view name);

}  // namespace boolgan
