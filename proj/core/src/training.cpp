// SPDX-License-Identifier: Apache-2.0
#include "boolgan/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "boolgan/grid.hpp"

namespace boolgan {

namespace {

constexpr std::size_t kGenerateChunk = 64;
constexpr std::size_t kGridSamples = 64;

void require_finite_loss(double v, const std::string& what) {
  if (!std::isfinite(v)) fail(ErrorKind::NonFinite, what + " is not finite");
}

void add_into(ParamSet<float>& acc, const ParamSet<float>& g) {
  for (std::size_t i = 0; i < acc.entries.size(); ++i) {
    auto& a = acc.entries[i].value;
    const auto& b = g.entries[i].value;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  }
}

std::string opt_name(const std::string& prefix, const std::string& param, const char* slot) {
  return prefix + param + "/" + slot;
}

void append_params(Checkpoint& ck, const std::string& prefix, const ParamSet<float>& params,
                   const OptState<float>& opt) {
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    const auto& p = params.entries[i];
    ck.params.push_back({prefix + p.name, p.value});
    if (!is_trainable(p.role)) continue;
    if (opt.first[i].size() > 0) ck.optimizer_state.push_back({opt_name(prefix, p.name, "m"), opt.first[i]});
    if (opt.second[i].size() > 0) ck.optimizer_state.push_back({opt_name(prefix, p.name, "v"), opt.second[i]});
  }
  TensorD step({1});
  step[0] = static_cast<double>(opt.step);
  ck.optimizer_state.push_back({prefix + "step", step});
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::UnwritablePath, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

std::string numbered(const char* prefix, std::uint64_t n, int width, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*llu%s", prefix, width, static_cast<unsigned long long>(n), suffix);
  return buf;
}

/// Backward from the logit under a network whose last layer is the sigmoid.
/// Consumes the cache's final entry.
BackwardResult<float> backward_from_logit(const ModelSpec& spec, const ParamSet<float>& params,
                                          ForwardCache<float>& cache, const TensorF& dlogit,
                                          GradRequest request) {
  ModelSpec trunk = spec;
  trunk.layers.pop_back();
  cache.inputs.pop_back();
  cache.dropout_masks.pop_back();
  cache.bn_updates.pop_back();
  return backward(trunk, params, cache, dlogit, request);
}

}  // namespace

ModelSpec generator_spec(const TrainConfig& cfg) {
  return cfg.model == ModelKind::Boolgan ? build_boolgan_generator(cfg.z_dim, cfg.base_width)
                                         : build_dcgan_generator(cfg.z_dim, cfg.base_width);
}

ModelSpec discriminator_spec(const TrainConfig& cfg) {
  return build_discriminator(cfg.loss == LossKind::Wgan, cfg.dropout_p, cfg.base_width);
}

Trainer::Trainer(const TrainConfig& cfg, std::vector<ImageU8> dataset)
    : cfg_(cfg),
      dataset_(std::move(dataset)),
      g_spec_(generator_spec(cfg)),
      d_spec_(discriminator_spec(cfg)),
      shuffle_rng_(cfg.seed, streams::kShuffle),
      latent_rng_(cfg.seed, streams::kLatent),
      dropout_rng_(cfg.seed, streams::kDropout) {
  validate_config(cfg_);
  require(!dataset_.empty(), ErrorKind::InvalidArgument, "training dataset is empty");
  for (const auto& img : dataset_)
    require(img.height == kImageSize && img.width == kImageSize, ErrorKind::ShapeMismatch,
            "training images must be 64x64");
  RngStream g_init(cfg.seed, streams::kGeneratorInit);
  RngStream d_init(cfg.seed, streams::kDiscriminatorInit);
  g_ = init_params<float>(g_spec_, g_init);
  d_ = init_params<float>(d_spec_, d_init);
  g_opt_ = make_opt_state(g_, cfg.optimizer);
  d_opt_ = make_opt_state(d_, cfg.optimizer);
  if (cfg_.loss == LossKind::Wgan) clip_weights(d_, cfg_.clip_c);
}

void Trainer::optimizer_step(ParamSet<float>& params, const ParamSet<float>& grads,
                             OptState<float>& st, double lr) {
  if (cfg_.optimizer == OptimizerKind::Adam)
    adam_step(params, grads, st, lr, cfg_.beta1, cfg_.beta2);
  else
    rmsprop_step(params, grads, st, lr, cfg_.rho);
}

StepLosses Trainer::training_step(const TensorF& real) {
  require(real.rank() == 4 && real.dim(0) >= 2, ErrorKind::ShapeMismatch,
          "training_step: real batch must be [n>=2,3,64,64], got " + shape_string(real.shape()));
  const std::size_t batch = real.dim(0);
  const bool wgan = cfg_.loss == LossKind::Wgan;
  StepLosses out;

  for (std::size_t k = 0; k < cfg_.n_critic; ++k) {
    const std::string where = "D step " + std::to_string(k + 1) + "/" + std::to_string(cfg_.n_critic);
    TensorF z = randn<float>({batch, cfg_.z_dim, 1, 1}, latent_rng_);
    auto gen = forward(g_spec_, g_, z, Mode::Train, dropout_rng_);
    apply_running_stats(g_spec_, g_, gen.cache);

    auto on_real = forward(d_spec_, d_, real, Mode::Train, dropout_rng_);
    apply_running_stats(d_spec_, d_, on_real.cache);
    auto on_fake = forward(d_spec_, d_, gen.y, Mode::Train, dropout_rng_);
    apply_running_stats(d_spec_, d_, on_fake.cache);

    const GradRequest params_only{false, true};
    ParamSet<float> grads;
    if (wgan) {
      out.loss_d = wgan_critic_loss(on_real.y, on_fake.y);
      require_finite_loss(out.loss_d, where + ": loss_d");
      const auto sg = wgan_critic_loss_grads(on_real.y, on_fake.y);
      grads = backward(d_spec_, d_, on_real.cache, sg.real, params_only).grads;
      add_into(grads, backward(d_spec_, d_, on_fake.cache, sg.fake, params_only).grads);
    } else {
      out.loss_d = dcgan_d_loss(on_real.y, on_fake.y);
      require_finite_loss(out.loss_d, where + ": loss_d");
      const auto sg = dcgan_d_logit_grads(on_real.y, on_fake.y);
      grads = backward_from_logit(d_spec_, d_, on_real.cache, sg.real, params_only).grads;
      add_into(grads, backward_from_logit(d_spec_, d_, on_fake.cache, sg.fake, params_only).grads);
    }
    try {
      optimizer_step(d_, grads, d_opt_, cfg_.resolved_lr_d() * lr_scale_);
    } catch (const Error& e) {
      fail(e.kind(), where + ": " + e.what());
    }
    if (wgan) clip_weights(d_, cfg_.clip_c);
    ++counters_.d_updates;
    if (after_critic_update) after_critic_update(d_);
  }

  TensorF z = randn<float>({batch, cfg_.z_dim, 1, 1}, latent_rng_);
  auto gen = forward(g_spec_, g_, z, Mode::Train, dropout_rng_);
  apply_running_stats(g_spec_, g_, gen.cache);
  auto on_fake = forward(d_spec_, d_, gen.y, Mode::Train, dropout_rng_);
  const GradRequest input_only{true, false};
  TensorF dfake;
  if (wgan) {
    out.loss_g = wgan_g_loss(on_fake.y);
    require_finite_loss(out.loss_g, "G step: loss_g");
    dfake = backward(d_spec_, d_, on_fake.cache, wgan_g_loss_grad(on_fake.y), input_only).dx;
  } else {
    out.loss_g = dcgan_g_loss(on_fake.y);
    require_finite_loss(out.loss_g, "G step: loss_g");
    dfake = backward_from_logit(d_spec_, d_, on_fake.cache, dcgan_g_logit_grad(on_fake.y), input_only).dx;
  }
  const auto g_grads = backward(g_spec_, g_, gen.cache, dfake, GradRequest{false, true}).grads;
  try {
    optimizer_step(g_, g_grads, g_opt_, cfg_.resolved_lr_g() * lr_scale_);
  } catch (const Error& e) {
    fail(e.kind(), std::string("G step: ") + e.what());
  }
  ++counters_.g_updates;
  return out;
}

std::vector<std::vector<std::size_t>> Trainer::epoch_batches() {
  return make_epoch_batches(dataset_.size(), cfg_.batch_size, shuffle_rng_, cfg_.drop_last);
}

TensorF Trainer::real_batch(std::span<const std::size_t> indices) const {
  return stack_images(dataset_, indices);
}

std::vector<ImageU8> Trainer::eval_samples(std::size_t n) const {
  RngStream rng(cfg_.seed, streams::kEvalLatent);
  return generate_samples(g_spec_, g_, n, rng);
}

double Trainer::evaluate_fid(std::size_t sample_count) {
  const std::size_t count = sample_count ? sample_count : cfg_.fid_sample_count;
  require(count >= 2, ErrorKind::InvalidArgument, "evaluate_fid: need at least 2 samples");
  const EmbedderSpec embedder{EmbedderKind::FixedRandomConv, cfg_.embedder_seed, cfg_.embedder_dim};
  if (!real_stats_ || real_stats_count_ != count) {
    // Fixed real subset: a partial shuffle from its own stream.
    std::vector<std::size_t> idx(dataset_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(count, idx.size());
    require(take >= 2, ErrorKind::InvalidArgument, "evaluate_fid: need at least 2 real images");
    RngStream rng(cfg_.seed, streams::kRealSubset);
    for (std::size_t i = 0; i < take; ++i)
      std::swap(idx[i], idx[i + rng.next_below(idx.size() - i)]);
    idx.resize(take);
    real_stats_ = gaussian_stats(embed_images(stack_images(dataset_, idx), embedder));
    real_stats_count_ = count;
  }
  const auto samples = eval_samples(count);
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto fake_stats = gaussian_stats(embed_images(stack_images(samples, all), embedder));
  return frechet_distance(*real_stats_, fake_stats);
}

void Trainer::set_epoch(std::size_t epoch) {
  lr_scale_ = cfg_.lr_decay_every ? std::ldexp(1.0, -static_cast<int>(epoch / cfg_.lr_decay_every)) : 1.0;
}

Checkpoint Trainer::checkpoint(std::uint64_t iteration) const {
  Checkpoint ck;
  append_params(ck, "g/", g_, g_opt_);
  append_params(ck, "d/", d_, d_opt_);
  ck.rng_states = {{"shuffle", shuffle_rng_}, {"latent", latent_rng_}, {"dropout", dropout_rng_}};
  ck.iteration = iteration;
  ck.config_hash = config_hash(cfg_);
  return ck;
}

std::filesystem::path resolve_out_dir(const TrainConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("BOOLGAN_OUT_DIR"); env && *env) return env;
  return "runs";
}

std::string format_metrics_row(const MetricsRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%llu,%zu,%.9g,%.9g,", static_cast<unsigned long long>(row.iteration),
                row.epoch, row.loss_d, row.loss_g);
  std::string out = buf;
  if (row.fid) {
    std::snprintf(buf, sizeof buf, "%.6f", *row.fid);
    out += buf;
  }
  return out;
}

RunReport run_training(const TrainConfig& cfg, std::vector<ImageU8> dataset,
                       const std::filesystem::path& out_dir,
                       const std::function<void(const MetricsRow&)>& on_row) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    fail(ErrorKind::UnwritablePath, "cannot create output directory '" + out_dir.string() + "'");

  Trainer trainer(cfg, std::move(dataset));
  write_text(out_dir / "config.txt", dump_config(cfg));
  std::ofstream csv(out_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
  if (!csv) fail(ErrorKind::UnwritablePath, "cannot write metrics.csv in '" + out_dir.string() + "'");
  csv << kMetricsHeader << '\n';

  RunReport report;
  std::uint64_t iteration = 0;
  bool stop = false;
  for (std::size_t epoch = 0; epoch < cfg.resolved_epochs() && !stop; ++epoch) {
    trainer.set_epoch(epoch);
    const auto batches = trainer.epoch_batches();
    require(!batches.empty(), ErrorKind::InvalidArgument,
            "dataset smaller than one batch with drop_last=true");
    for (const auto& batch : batches) {
      const StepLosses losses = trainer.training_step(trainer.real_batch(batch));
      ++iteration;
      MetricsRow row{iteration, epoch + 1, losses.loss_d, losses.loss_g, std::nullopt};
      if (cfg.fid_every_n_iters && iteration % cfg.fid_every_n_iters == 0) {
        row.fid = trainer.evaluate_fid();
        const auto samples = trainer.eval_samples(kGridSamples);
        save_png(emit_grid(samples, grid_columns(samples.size())),
                 out_dir / numbered("samples_iter", iteration, 6, ".png"));
        if (!report.best_fid || *row.fid < *report.best_fid) {
          report.best_fid = row.fid;
          checkpoint_save(trainer.checkpoint(iteration), out_dir / "best_fid.ckpt");
        }
      }
      csv << format_metrics_row(row) << '\n';
      csv.flush();
      if (!csv) fail(ErrorKind::Io, "write to metrics.csv failed");
      if (on_row) on_row(row);
      report.rows.push_back(row);
      if (cfg.max_iters && iteration >= cfg.max_iters) {
        stop = true;
        break;
      }
    }
    if (!stop) checkpoint_save(trainer.checkpoint(iteration), out_dir / numbered("epoch_", epoch + 1, 3, ".ckpt"));
  }
  report.final_checkpoint = out_dir / "final.ckpt";
  checkpoint_save(trainer.checkpoint(iteration), report.final_checkpoint);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

RunReport train(const TrainConfig& cfg, const std::function<void(const MetricsRow&)>& on_row) {
  validate_config(cfg);
  const DatasetIndex index = index_dataset(cfg.data_dir);
  require(index.size() >= 1, ErrorKind::InvalidArgument,
          "no PNG or JPEG images under '" + cfg.data_dir + "'");
  return run_training(cfg, load_dataset(index, kImageSize), resolve_out_dir(cfg), on_row);
}

std::vector<ImageU8> generate_samples(const ModelSpec& gen_spec, const ParamSet<float>& gen_params,
                                      std::size_t n, RngStream& rng) {
  require(n >= 1, ErrorKind::InvalidArgument, "generate_samples: n must be >= 1");
  const std::size_t z_dim = gen_spec.input.at(0);
  std::vector<ImageU8> out;
  out.reserve(n);
  RngStream unused_dropout = rng;  // generators carry no dropout; eval mode never draws
  for (std::size_t n0 = 0; n0 < n; n0 += kGenerateChunk) {
    const std::size_t nb = std::min(kGenerateChunk, n - n0);
    const TensorF z = randn<float>({nb, z_dim, 1, 1}, rng);
    auto images = to_images(forward(gen_spec, gen_params, z, Mode::Eval, unused_dropout).y);
    for (auto& img : images) out.push_back(std::move(img));
  }
  return out;
}

LoadedGenerator load_generator(const Checkpoint& ckpt) {
  const NamedTensor* first = ckpt.find_param("g/" + param_name(0, ParamRole::Weight));
  require(first != nullptr, ErrorKind::CorruptFile, "checkpoint holds no generator weights");
  const Shape& w0 = shape_of(first->tensor);
  require(w0.size() == 4 && w0[1] % 8 == 0 && w0[1] >= 8, ErrorKind::CorruptFile,
          "unexpected generator input layer shape " + shape_string(w0));
  const std::size_t z_dim = w0[0], width = w0[1] / 8;
  for (const ModelSpec& spec : {build_dcgan_generator(z_dim, width), build_boolgan_generator(z_dim, width)}) {
    RngStream dummy(0, 0);
    ParamSet<float> params = init_params<float>(spec, dummy);
    std::size_t g_count = 0;
    for (const auto& p : ckpt.params) g_count += p.name.rfind("g/", 0) == 0;
    if (g_count != params.entries.size()) continue;
    bool match = true;
    for (auto& p : params.entries) {
      const NamedTensor* stored = ckpt.find_param("g/" + p.name);
      if (!stored || shape_of(stored->tensor) != p.value.shape()) {
        match = false;
        break;
      }
      p.value = ckpt.param_as<float>("g/" + p.name);
    }
    if (match) return {spec, std::move(params)};
  }
  fail(ErrorKind::CorruptFile, "checkpoint generator matches neither the DCGAN nor the BoolGAN layout");
}

}  // namespace boolgan
