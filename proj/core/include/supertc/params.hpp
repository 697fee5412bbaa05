#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "supertc/ndarray.hpp"

namespace supertc {

enum class ParamGroup : std::uint8_t { kBackbone = 0, kTcHead = 1, kClsHead = 2 };

std::string_view param_group_name(ParamGroup group);
std::optional<ParamGroup> param_group_from_byte(std::uint8_t byte);

struct Parameter {
  std::string name;
  NdArray value;
  NdArray grad;  // same shape as value
  ParamGroup group = ParamGroup::kBackbone;
  bool trainable = true;
};

// Named parameters in insertion order. References returned by add() stay
// valid for the lifetime of the store.
class ParamStore {
 public:
  Parameter& add(std::string name, NdArray value, ParamGroup group);

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;

  std::deque<Parameter>& entries() noexcept { return entries_; }
  const std::deque<Parameter>& entries() const noexcept { return entries_; }

  void set_trainable(ParamGroup group, bool trainable);
  void zero_grad();
  std::size_t scalar_count() const;

  // Hex SHA-256 over names, shapes and value bytes of one group.
  std::string group_digest(ParamGroup group) const;

 private:
  std::deque<Parameter> entries_;
};

}  // namespace supertc
