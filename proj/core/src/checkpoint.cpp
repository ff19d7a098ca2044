// SPDX-License-Identifier: Apache-2.0
#include "boolgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace boolgan {

namespace {

constexpr std::string_view kMagic = "BOOLGAN-CKPT 1\n";

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

template <typename T>
void put_values(std::vector<std::uint8_t>& out, const Tensor<T>& t) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  for (T v : t.values()) {
    const Bits b = std::bit_cast<Bits>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(b >> (8 * i)));
  }
}

template <typename T>
Tensor<T> get_values(const std::uint8_t* p, const Shape& shape) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  Tensor<T> t(shape);
  for (std::size_t k = 0; k < t.size(); ++k) {
    Bits b = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) b |= Bits{p[k * sizeof(T) + i]} << (8 * i);
    t[k] = std::bit_cast<T>(b);
  }
  return t;
}

void check_name(const std::string& name) {
  require(!name.empty(), ErrorKind::InvalidArgument, "checkpoint: empty entry name");
  for (char c : name)
    require(c != ' ' && c != '\n' && c != '\t' && c != '\r', ErrorKind::InvalidArgument,
            "checkpoint: whitespace in entry name '" + name + "'");
}

void describe(std::ostringstream& os, std::string_view tag, const NamedTensor& entry) {
  check_name(entry.name);
  std::visit([&](const auto& t) { check_finite(t, "checkpoint entry " + entry.name); },
             entry.tensor);
  const Shape& shape = shape_of(entry.tensor);
  os << tag << ' ' << entry.name << ' ' << to_string(dtype_of(entry.tensor)) << ' '
     << shape.size();
  for (std::size_t d : shape) os << ' ' << d;
  os << '\n';
}

struct PendingTensor {
  bool is_opt;
  std::string name;
  DType dtype;
  Shape shape;
};

[[noreturn]] void corrupt(std::size_t line, const std::string& what) {
  fail(ErrorKind::CorruptFile,
       "corrupt checkpoint manifest (line " + std::to_string(line) + "): " + what);
}

std::uint64_t parse_u64(std::istringstream& is, std::size_t line, const char* field) {
  std::string token;
  if (!(is >> token)) corrupt(line, std::string("missing ") + field);
  std::uint64_t v = 0;
  std::size_t used = 0;
  try {
    v = std::stoull(token, &used, 10);
  } catch (const std::exception&) {
    corrupt(line, std::string("bad ") + field);
  }
  if (used != token.size() || token[0] == '-') corrupt(line, std::string("bad ") + field);
  return v;
}

template <typename T>
const Tensor<T>& typed(const NamedTensor* entry, std::string_view name) {
  if (!entry) fail(ErrorKind::InvalidArgument, "checkpoint has no entry '" + std::string(name) + "'");
  if (const auto* t = std::get_if<Tensor<T>>(&entry->tensor)) return *t;
  fail(ErrorKind::DtypeMismatch, "checkpoint entry '" + std::string(name) + "' is " +
                                     std::string(to_string(dtype_of(entry->tensor))) +
                                     ", expected " + std::string(to_string(dtype_of<T>())));
}

const NamedTensor* find_in(const std::vector<NamedTensor>& list, std::string_view name) noexcept {
  for (const auto& e : list)
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace

DType dtype_of(const AnyTensor& t) noexcept {
  return std::holds_alternative<TensorF>(t) ? DType::F32 : DType::F64;
}

const Shape& shape_of(const AnyTensor& t) noexcept {
  return std::visit([](const auto& x) -> const Shape& { return x.shape(); }, t);
}

const NamedTensor* Checkpoint::find_param(std::string_view name) const noexcept {
  return find_in(params, name);
}

const NamedTensor* Checkpoint::find_optimizer_state(std::string_view name) const noexcept {
  return find_in(optimizer_state, name);
}

const NamedRng* Checkpoint::find_rng(std::string_view name) const noexcept {
  for (const auto& r : rng_states)
    if (r.name == name) return &r;
  return nullptr;
}

template <typename T>
const Tensor<T>& Checkpoint::param_as(std::string_view name) const {
  return typed<T>(find_param(name), name);
}

template <typename T>
const Tensor<T>& Checkpoint::optimizer_state_as(std::string_view name) const {
  return typed<T>(find_optimizer_state(name), name);
}

template const TensorF& Checkpoint::param_as<float>(std::string_view) const;
template const TensorD& Checkpoint::param_as<double>(std::string_view) const;
template const TensorF& Checkpoint::optimizer_state_as<float>(std::string_view) const;
template const TensorD& Checkpoint::optimizer_state_as<double>(std::string_view) const;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream manifest;
  manifest << "iteration " << ckpt.iteration << '\n';
  manifest << "config_hash " << ckpt.config_hash << '\n';
  for (const auto& r : ckpt.rng_states) {
    check_name(r.name);
    manifest << "rng " << r.name << ' ' << r.state.seed() << ' ' << r.state.stream_id() << ' '
             << r.state.counter() << '\n';
  }
  for (const auto& p : ckpt.params) describe(manifest, "param", p);
  for (const auto& o : ckpt.optimizer_state) describe(manifest, "opt", o);
  const std::string text = manifest.str();

  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  auto emit = [&](const NamedTensor& e) {
    std::visit([&](const auto& t) { put_values(out, t); }, e.tensor);
  };
  for (const auto& p : ckpt.params) emit(p);
  for (const auto& o : ckpt.optimizer_state) emit(o);
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 8 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    fail(ErrorKind::CorruptFile, "not a checkpoint file (bad magic)");
  const std::uint64_t manifest_bytes = get_u64(bytes.data() + kMagic.size());
  const std::size_t manifest_begin = kMagic.size() + 8;
  if (manifest_bytes > bytes.size() - manifest_begin)
    fail(ErrorKind::CorruptFile, "checkpoint manifest extends past end of file");
  const std::string text(reinterpret_cast<const char*>(bytes.data() + manifest_begin),
                         manifest_bytes);

  Checkpoint ckpt;
  std::vector<PendingTensor> pending;
  bool saw_iteration = false, saw_hash = false;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "iteration") {
      ckpt.iteration = parse_u64(is, line_no, "iteration");
      saw_iteration = true;
    } else if (tag == "config_hash") {
      ckpt.config_hash = parse_u64(is, line_no, "config_hash");
      saw_hash = true;
    } else if (tag == "rng") {
      NamedRng r;
      if (!(is >> r.name)) corrupt(line_no, "missing rng name");
      const auto seed = parse_u64(is, line_no, "seed");
      const auto stream = parse_u64(is, line_no, "stream_id");
      const auto counter = parse_u64(is, line_no, "counter");
      r.state = RngStream(seed, stream, counter);
      ckpt.rng_states.push_back(std::move(r));
    } else if (tag == "param" || tag == "opt") {
      PendingTensor p;
      p.is_opt = tag == "opt";
      std::string dtype;
      if (!(is >> p.name >> dtype)) corrupt(line_no, "incomplete tensor record");
      if (dtype == "f32") {
        p.dtype = DType::F32;
      } else if (dtype == "f64") {
        p.dtype = DType::F64;
      } else {
        fail(ErrorKind::DtypeMismatch, "checkpoint entry '" + p.name + "' has unknown dtype '" +
                                           dtype + "'");
      }
      const auto rank = parse_u64(is, line_no, "rank");
      if (rank > 8) corrupt(line_no, "rank too large");
      for (std::uint64_t i = 0; i < rank; ++i) p.shape.push_back(parse_u64(is, line_no, "extent"));
      pending.push_back(std::move(p));
    } else {
      corrupt(line_no, "unknown record '" + tag + "'");
    }
    std::string trailing;
    if (is >> trailing) corrupt(line_no, "trailing tokens");
  }
  if (!saw_iteration || !saw_hash) fail(ErrorKind::CorruptFile, "checkpoint manifest incomplete");

  std::size_t offset = manifest_begin + manifest_bytes;
  std::uint64_t expected = 0;
  for (const auto& p : pending) {
    const std::size_t width = p.dtype == DType::F32 ? 4 : 8;
    expected += element_count(p.shape) * width;
  }
  if (expected != bytes.size() - offset)
    fail(ErrorKind::PayloadLengthMismatch,
         "payload length mismatch: manifest needs " + std::to_string(expected) +
             " bytes, file holds " + std::to_string(bytes.size() - offset));

  for (auto& p : pending) {
    NamedTensor entry{std::move(p.name), TensorF{}};
    if (p.dtype == DType::F32) {
      entry.tensor = get_values<float>(bytes.data() + offset, p.shape);
      offset += element_count(p.shape) * 4;
    } else {
      entry.tensor = get_values<double>(bytes.data() + offset, p.shape);
      offset += element_count(p.shape) * 8;
    }
    (p.is_opt ? ckpt.optimizer_state : ckpt.params).push_back(std::move(entry));
  }
  return ckpt;
}

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::UnwritablePath, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorKind::Io, "write to '" + path.string() + "' failed (disk full?)");
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace boolgan
