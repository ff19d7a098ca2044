// SPDX-License-Identifier: Apache-2.0
#include "boolgan_cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "boolgan/checkpoint.hpp"
#include "boolgan/config.hpp"
#include "boolgan/fid.hpp"
#include "boolgan/gradcheck.hpp"
#include "boolgan/grid.hpp"
#include "boolgan/training.hpp"

namespace boolgan::cli {

namespace {

namespace fs = std::filesystem;

struct ConfigArgs {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config,-c", args.config_path, "key = value config file");
  cmd->add_option("--preset", args.preset_name, "start from a named regime")
      ->check(CLI::IsMember(std::vector<std::string>(preset_names().begin(), preset_names().end())));
  cmd->add_option("--set,-s", args.overrides, "key=value override (repeatable, wins over the file)");
}

TrainConfig build_config(const ConfigArgs& args) {
  TrainConfig cfg = args.preset_name.empty() ? TrainConfig{} : preset(args.preset_name);
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) fail(ErrorKind::Config, "cannot read config '" + args.config_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str(), args.config_path);
  }
  for (const auto& o : args.overrides) {
    try {
      apply_override(cfg, o);
    } catch (const Error& e) {
      fail(ErrorKind::Config, "--set " + o + ": " + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

int cmd_train(const ConfigArgs& args, std::ostream& out) {
  const TrainConfig cfg = build_config(args);
  const fs::path out_dir = resolve_out_dir(cfg);
  out << "training " << to_string(cfg.model) << " / " << to_string(cfg.loss) << " loss into "
      << out_dir.string() << '\n';
  const RunReport report = train(cfg, [&](const MetricsRow& row) {
    if (row.fid || row.iteration % 50 == 0) out << format_metrics_row(row) << '\n' << std::flush;
  });
  out << "iterations " << report.rows.size() << ", " << report.wall_seconds << " s\n";
  if (report.best_fid) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *report.best_fid);
    out << "best proxy FID " << buf << '\n';
  }
  out << "final checkpoint " << report.final_checkpoint.string() << '\n';
  return kOk;
}

int cmd_generate(const std::string& checkpoint, std::size_t n, std::uint64_t seed,
                 const std::string& out_path, std::ostream& out) {
  const LoadedGenerator gen = load_generator(checkpoint_load(checkpoint));
  RngStream rng(seed, streams::kEvalLatent);
  const auto samples = generate_samples(gen.spec, gen.params, n, rng);
  save_png(emit_grid(samples, grid_columns(samples.size())), out_path);
  out << "wrote " << n << " samples to " << out_path << '\n';
  return kOk;
}

TensorD features_for(const std::string& path, const EmbedderSpec& embedder, std::size_t cap) {
  if (!fs::is_directory(path)) {
    TensorD f = load_features(path);
    if (cap && f.dim(0) > cap) {
      const std::size_t n = f.dim(0), d = f.dim(1);
      TensorD sel({cap, d});
      for (std::size_t k = 0; k < cap; ++k)
        std::copy_n(f.data() + (k * n / cap) * d, d, sel.data() + k * d);
      return sel;
    }
    return f;
  }
  DatasetIndex index = index_dataset(path);
  if (cap && index.size() > cap) {
    // Evenly spaced, so the same directory always yields the same subset.
    std::vector<fs::path> picked;
    for (std::size_t k = 0; k < cap; ++k) picked.push_back(index.files[k * index.size() / cap]);
    index.files = std::move(picked);
  }
  require(index.size() >= 2, ErrorKind::InvalidArgument,
          "'" + path + "' holds fewer than 2 usable images");
  const auto images = load_dataset(index, kImageSize);
  std::vector<std::size_t> all(images.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return embed_images(stack_images(images, all), embedder);
}

int cmd_fid(const std::string& a, const std::string& b, std::uint64_t embedder_seed,
            std::size_t embedder_dim, std::size_t cap, std::ostream& out) {
  const EmbedderSpec embedder{EmbedderKind::FixedRandomConv, embedder_seed, embedder_dim};
  const TensorD fa = features_for(a, embedder, cap);
  const TensorD fb = features_for(b, embedder, cap);
  require(fa.dim(0) >= 2 && fb.dim(0) >= 2, ErrorKind::InvalidArgument,
          "each side needs at least 2 items");
  require(fa.dim(1) == fb.dim(1), ErrorKind::ShapeMismatch,
          "feature dimensions differ: " + std::to_string(fa.dim(1)) + " vs " + std::to_string(fb.dim(1)));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", frechet_distance(gaussian_stats(fa), gaussian_stats(fb)));
  out << buf << '\n';
  return kOk;
}

int cmd_gradcheck(const std::string& scope, const std::string& inject, std::ostream& out) {
  GradcheckOptions opts;
  opts.scope = scope;
  opts.inject_fault = inject;
  const auto entries = run_gradcheck(opts);
  bool ok = true;
  for (const auto& e : entries) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-18s max_rel_error %.3e  %s", e.name.c_str(), e.max_rel_error,
                  e.passed ? "ok" : "FAIL");
    out << buf << '\n';
    ok = ok && e.passed;
  }
  if (!ok) {
    out << "gradcheck failed:";
    for (const auto& e : entries)
      if (!e.passed) out << ' ' << e.name;
    out << '\n';
  }
  return ok ? kOk : kRuntimeFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DCGAN / WGAN / BoolGAN training and evaluation", "boolgan"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a generator/discriminator pair");
  add_config_options(train_cmd, train_args);

  ConfigArgs dump_args;
  auto* dump_cmd = app.add_subcommand("config-dump", "print the fully resolved configuration");
  add_config_options(dump_cmd, dump_args);

  std::string checkpoint, out_path;
  std::size_t n = 64;
  std::uint64_t seed = 0;
  auto* gen_cmd = app.add_subcommand("generate", "write an n-sample grid from a checkpoint");
  gen_cmd->add_option("--checkpoint", checkpoint, "training checkpoint")->required();
  gen_cmd->add_option("--n", n, "number of samples")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", seed, "latent seed");
  gen_cmd->add_option("--out", out_path, "output PNG")->required();

  std::vector<std::string> fid_paths;
  std::uint64_t embedder_seed = 0;
  std::size_t embedder_dim = 64, cap = 0;
  auto* fid_cmd = app.add_subcommand("fid", "proxy Frechet distance between two image sets or feature files");
  fid_cmd->add_option("paths", fid_paths, "two image directories or feature files")->required()->expected(2);
  fid_cmd->add_option("--embedder-seed", embedder_seed, "seed of the random-conv embedder");
  fid_cmd->add_option("--embedder-dim", embedder_dim, "embedding width")->check(CLI::PositiveNumber);
  fid_cmd->add_option("--cap", cap, "use at most N evenly spaced items per side (0 = all)");

  std::string scope = "all", inject;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
  grad_cmd->add_option("scope", scope, "'all' or one layer/model name")
      ->check(CLI::IsMember([] {
        std::vector<std::string> s{"all"};
        for (auto v : gradcheck_scopes()) s.emplace_back(v);
        return s;
      }()));
  grad_cmd->add_option("--inject-fault", inject, "test fixture: corrupt a backward pass")
      ->check(CLI::IsMember({"conv2d"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*dump_cmd) {
      out << dump_config(build_config(dump_args));
      return kOk;
    }
    if (*gen_cmd) return cmd_generate(checkpoint, n, seed, out_path, out);
    if (*fid_cmd) return cmd_fid(fid_paths[0], fid_paths[1], embedder_seed, embedder_dim, cap, out);
    if (*grad_cmd) return cmd_gradcheck(scope, inject, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Config ? kUsageError : kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace boolgan::cli
