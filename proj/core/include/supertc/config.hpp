#pragma once

// Human-readable `key = value` files. `#` starts a comment; blank lines are
// ignored; list values are comma separated.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace supertc {

class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::filesystem::path& path);

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  bool contains(std::string_view key) const { return values_.find(key) != values_.end(); }
  std::optional<std::string> get(std::string_view key) const;

  std::optional<std::uint64_t> get_uint(std::string_view key) const;
  std::optional<double> get_double(std::string_view key) const;
  std::optional<std::vector<std::size_t>> get_uint_list(std::string_view key) const;

  std::vector<std::string> keys() const;
  std::string to_string() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

std::string join_uint_list(const std::vector<std::size_t>& values);

}  // namespace supertc
