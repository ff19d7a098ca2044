// SPDX-License-Identifier: Apache-2.0
#include "boolgan/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "boolgan/checkpoint.hpp"

namespace boolgan {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  fail(ErrorKind::Config, "invalid value '" + std::string(value) + "' for " + std::string(key) +
                              " (expected " + std::string(expected) + ")");
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v, "a finite number");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    bad_value(key, v, "a non-negative integer");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Single table driving parsing, dumping and the key list.
struct KeyEntry {
  std::string_view name;
  void (*set)(TrainConfig&, std::string_view key, std::string_view value);
  std::string (*get)(const TrainConfig&);
};

#define BOOLGAN_DOUBLE_KEY(field)                                                                \
  KeyEntry {                                                                                     \
    #field, [](TrainConfig& c, std::string_view k, std::string_view v) { c.field = parse_double(k, v); }, \
        [](const TrainConfig& c) { return format_double(c.field); }                             \
  }
#define BOOLGAN_SIZE_KEY(field)                                                                  \
  KeyEntry {                                                                                     \
    #field, [](TrainConfig& c, std::string_view k, std::string_view v) { c.field = parse_u64(k, v); }, \
        [](const TrainConfig& c) { return std::to_string(c.field); }                            \
  }

const std::vector<KeyEntry>& key_table() {
  static const std::vector<KeyEntry> table = {
      {"model",
       [](TrainConfig& c, std::string_view k, std::string_view v) {
         if (v == "dcgan") c.model = ModelKind::Dcgan;
         else if (v == "boolgan") c.model = ModelKind::Boolgan;
         else bad_value(k, v, "dcgan or boolgan");
       },
       [](const TrainConfig& c) { return std::string(to_string(c.model)); }},
      {"loss",
       [](TrainConfig& c, std::string_view k, std::string_view v) {
         if (v == "dcgan") c.loss = LossKind::Dcgan;
         else if (v == "wgan") c.loss = LossKind::Wgan;
         else bad_value(k, v, "dcgan or wgan");
       },
       [](const TrainConfig& c) { return std::string(to_string(c.loss)); }},
      BOOLGAN_DOUBLE_KEY(dropout_p),
      {"lr_g", [](TrainConfig& c, std::string_view k, std::string_view v) { c.lr_g = parse_double(k, v); },
       [](const TrainConfig& c) { return format_double(c.resolved_lr_g()); }},
      {"lr_d", [](TrainConfig& c, std::string_view k, std::string_view v) { c.lr_d = parse_double(k, v); },
       [](const TrainConfig& c) { return format_double(c.resolved_lr_d()); }},
      BOOLGAN_DOUBLE_KEY(beta1),
      BOOLGAN_DOUBLE_KEY(beta2),
      {"optimizer",
       [](TrainConfig& c, std::string_view k, std::string_view v) {
         if (v == "adam") c.optimizer = OptimizerKind::Adam;
         else if (v == "rmsprop") c.optimizer = OptimizerKind::RmsProp;
         else bad_value(k, v, "adam or rmsprop");
       },
       [](const TrainConfig& c) { return std::string(to_string(c.optimizer)); }},
      BOOLGAN_DOUBLE_KEY(rho),
      BOOLGAN_DOUBLE_KEY(clip_c),
      BOOLGAN_SIZE_KEY(n_critic),
      BOOLGAN_SIZE_KEY(batch_size),
      {"epochs", [](TrainConfig& c, std::string_view k, std::string_view v) { c.epochs = parse_u64(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.resolved_epochs()); }},
      BOOLGAN_SIZE_KEY(z_dim),
      BOOLGAN_SIZE_KEY(base_width),
      BOOLGAN_SIZE_KEY(seed),
      BOOLGAN_SIZE_KEY(fid_every_n_iters),
      BOOLGAN_SIZE_KEY(fid_sample_count),
      {"data_dir", [](TrainConfig& c, std::string_view, std::string_view v) { c.data_dir = v; },
       [](const TrainConfig& c) { return c.data_dir; }},
      {"out_dir", [](TrainConfig& c, std::string_view, std::string_view v) { c.out_dir = v; },
       [](const TrainConfig& c) { return c.out_dir; }},
      {"drop_last",
       [](TrainConfig& c, std::string_view k, std::string_view v) { c.drop_last = parse_bool(k, v); },
       [](const TrainConfig& c) { return std::string(c.drop_last ? "true" : "false"); }},
      BOOLGAN_SIZE_KEY(embedder_seed),
      BOOLGAN_SIZE_KEY(embedder_dim),
      BOOLGAN_SIZE_KEY(lr_decay_every),
      BOOLGAN_SIZE_KEY(max_iters),
  };
  return table;
}

#undef BOOLGAN_DOUBLE_KEY
#undef BOOLGAN_SIZE_KEY

const KeyEntry* find_key(std::string_view key) {
  for (const auto& e : key_table())
    if (e.name == key) return &e;
  return nullptr;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::Dcgan ? "dcgan" : "boolgan";
}

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::Dcgan ? "dcgan" : "wgan";
}

double TrainConfig::resolved_lr_g() const noexcept {
  if (lr_g) return *lr_g;
  return model == ModelKind::Boolgan ? kBoolganLearningRate : kDefaultLearningRate;
}

double TrainConfig::resolved_lr_d() const noexcept {
  if (lr_d) return *lr_d;
  return model == ModelKind::Boolgan ? kBoolganLearningRate : kDefaultLearningRate;
}

std::size_t TrainConfig::resolved_epochs() const noexcept {
  if (epochs) return *epochs;
  return model == ModelKind::Boolgan ? kBoolganEpochs : kDefaultEpochs;
}

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> out;
    for (const auto& e : key_table()) out.push_back(e.name);
    return out;
  }();
  return keys;
}

void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value) {
  const KeyEntry* entry = find_key(key);
  if (!entry) fail(ErrorKind::Config, "unknown key '" + std::string(key) + "'");
  entry->set(cfg, key, value);
}

void apply_config_text(TrainConfig& cfg, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::Config, where + "expected key = value");
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorKind::Config, where + e.what());
    }
    if (end == text.size()) break;
  }
}

TrainConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  TrainConfig cfg;
  apply_config_text(cfg, buf.str(), path.string());
  return cfg;
}

void apply_override(TrainConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    fail(ErrorKind::Config, "override '" + std::string(assignment) + "' is not key=value");
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void validate_config(const TrainConfig& cfg) {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::Config, msg); };
  check(cfg.resolved_lr_g() > 0 && cfg.resolved_lr_d() > 0, "learning rates must be > 0");
  check(cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 && cfg.beta2 < 1,
        "beta1 and beta2 must lie in [0, 1)");
  check(cfg.rho >= 0 && cfg.rho < 1, "rho must lie in [0, 1)");
  check(cfg.dropout_p >= 0 && cfg.dropout_p < 1, "dropout_p must lie in [0, 1)");
  check(cfg.loss != LossKind::Wgan || cfg.clip_c > 0, "clip_c must be > 0 for loss=wgan");
  check(cfg.n_critic >= 1, "n_critic must be >= 1");
  check(cfg.batch_size >= 2, "batch_size must be >= 2 (batch statistics)");
  check(cfg.resolved_epochs() >= 1, "epochs must be >= 1");
  check(cfg.z_dim >= 1 && cfg.base_width >= 1, "z_dim and base_width must be >= 1");
  check(cfg.fid_every_n_iters == 0 || cfg.fid_sample_count >= 2, "fid_sample_count must be >= 2");
  check(cfg.embedder_dim >= 1, "embedder_dim must be >= 1");
}

std::string dump_config(const TrainConfig& cfg) {
  std::string out;
  for (const auto& e : key_table()) {
    out += e.name;
    out += " = ";
    out += e.get(cfg);
    out += '\n';
  }
  return out;
}

std::uint64_t config_hash(const TrainConfig& cfg) {
  TrainConfig copy = cfg;
  copy.out_dir.clear();
  return fnv1a64(dump_config(copy));
}

const std::vector<std::string_view>& preset_names() {
  static const std::vector<std::string_view> names = {"baseline", "dropout", "wgan", "wgan_dropout",
                                                      "boolgan"};
  return names;
}

TrainConfig preset(std::string_view name) {
  TrainConfig cfg;
  if (name == "baseline") return cfg;
  if (name == "dropout") {
    cfg.dropout_p = kRegimeDropout;
    return cfg;
  }
  if (name == "wgan" || name == "wgan_dropout" || name == "boolgan") {
    cfg.loss = LossKind::Wgan;
    cfg.clip_c = kDefaultClip;
    if (name != "wgan") cfg.dropout_p = kRegimeDropout;
    if (name == "boolgan") cfg.model = ModelKind::Boolgan;
    return cfg;
  }
  fail(ErrorKind::Config, "unknown preset '" + std::string(name) + "'");
}

}  // namespace boolgan
