#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "supertc/error.hpp"
#include "supertc/model.hpp"

namespace supertc {
namespace {

constexpr char kMagic[4] = {'S', 'T', 'C', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void uint(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void f64(double value) { uint(std::bit_cast<std::uint64_t>(value)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }

  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename T>
  T uint() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return value;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

  [[noreturn]] void corrupt(const std::string& what) const {
    throw Error(ErrorCode::kCorruptCheckpoint,
                "corrupt checkpoint at byte " + std::to_string(pos_) + ": " + what, pos_);
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) corrupt("unexpected end of data");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
  KeyValues kv;
  model.config().write_key_values(kv);
  const std::string config_text = kv.to_string();

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint<std::uint32_t>(kFormatVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(config_text.size()));
  w.bytes(config_text.data(), config_text.size());
  const auto& entries = model.params().entries();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const auto& p : entries) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(p.group));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.value.rank()));
    for (auto extent : p.value.shape()) w.uint<std::uint64_t>(extent);
    for (double v : p.value.data()) w.f64(v);
  }
  return w.take();
}

Model deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(sizeof kMagic);
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::kCorruptCheckpoint, "not a checkpoint file (bad magic)", 0);
  }
  const auto version = r.uint<std::uint32_t>();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                 ", expected " + std::to_string(kFormatVersion));
  }
  const auto config_size = r.uint<std::uint32_t>();
  const auto config_bytes = r.bytes(config_size);
  ModelConfig config;
  try {
    config = ModelConfig::from_key_values(
        KeyValues::parse(std::string_view(reinterpret_cast<const char*>(config_bytes.data()), config_bytes.size())));
  } catch (const Error& e) {
    r.corrupt(std::string("embedded config: ") + e.what());
  }
  Model model = [&] {
    try {
      return Model::build(config);
    } catch (const Error& e) {
      r.corrupt(std::string("embedded config: ") + e.what());
    }
  }();

  auto& entries = model.params().entries();
  const auto count = r.uint<std::uint32_t>();
  if (count != entries.size()) r.corrupt("parameter count does not match embedded config");
  for (auto& p : entries) {
    const auto name_size = r.uint<std::uint32_t>();
    const auto name = r.bytes(name_size);
    if (std::string_view(reinterpret_cast<const char*>(name.data()), name.size()) != p.name) {
      r.corrupt("expected parameter " + p.name);
    }
    const auto group = param_group_from_byte(r.uint<std::uint8_t>());
    if (!group || *group != p.group) r.corrupt("group tag mismatch for " + p.name);
    const auto rank = r.uint<std::uint32_t>();
    if (rank != p.value.rank()) r.corrupt("rank mismatch for " + p.name);
    for (std::size_t i = 0; i < rank; ++i) {
      if (r.uint<std::uint64_t>() != p.value.dim(i)) r.corrupt("extent mismatch for " + p.name);
    }
    for (double& v : p.value.data()) v = r.f64();
  }
  if (!r.done()) r.corrupt("trailing bytes");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

Model load_checkpoint(const std::filesystem::path& path, ModelVariant expected) {
  Model model = load_checkpoint(path);
  if (model.config().variant != expected) {
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint holds a " + std::string(model_variant_name(model.config().variant)) +
                    " model, expected " + std::string(model_variant_name(expected)));
  }
  return model;
}

}  // namespace supertc
