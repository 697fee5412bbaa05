#include "supertc/params.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "supertc/error.hpp"

namespace supertc {

std::string_view param_group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::kBackbone: return "backbone";
    case ParamGroup::kTcHead: return "tc_head";
    case ParamGroup::kClsHead: return "cls_head";
  }
  return "unknown";
}

std::optional<ParamGroup> param_group_from_byte(std::uint8_t byte) {
  if (byte > 2) return std::nullopt;
  return static_cast<ParamGroup>(byte);
}

Parameter& ParamStore::add(std::string name, NdArray value, ParamGroup group) {
  if (find(name)) throw Error(ErrorCode::kInvalidConfig, "duplicate parameter name " + name);
  NdArray grad(value.shape());
  entries_.push_back({std::move(name), std::move(value), std::move(grad), group, true});
  return entries_.back();
}

Parameter* ParamStore::find(std::string_view name) {
  for (auto& p : entries_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Parameter* ParamStore::find(std::string_view name) const {
  return const_cast<ParamStore*>(this)->find(name);
}

Parameter& ParamStore::get(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw Error(ErrorCode::kInvalidConfig, "no parameter named " + std::string(name));
}

const Parameter& ParamStore::get(std::string_view name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

void ParamStore::set_trainable(ParamGroup group, bool trainable) {
  for (auto& p : entries_) {
    if (p.group == group) p.trainable = trainable;
  }
}

void ParamStore::zero_grad() {
  for (auto& p : entries_) p.grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

std::string ParamStore::group_digest(ParamGroup group) const {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  for (const auto& p : entries_) {
    if (p.group != group) continue;
    EVP_DigestUpdate(ctx.get(), p.name.data(), p.name.size() + 1);
    for (auto extent : p.value.shape()) {
      const auto e = static_cast<std::uint64_t>(extent);
      EVP_DigestUpdate(ctx.get(), &e, sizeof e);
    }
    const auto values = p.value.data();
    EVP_DigestUpdate(ctx.get(), values.data(), values.size_bytes());
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);

  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace supertc
