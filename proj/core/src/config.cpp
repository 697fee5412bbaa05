#include "supertc/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "supertc/error.hpp"
#include "supertc/numfmt.hpp"

namespace supertc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw Error(ErrorCode::kInvalidConfig, "config key '" + std::string(key) + "': expected " +
                                             expected + ", got '" + std::string(value) + "'");
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  text = trim(text);
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    bad_value(key, text, "a nonnegative integer");
  }
  return v;
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues out;
  std::size_t line_number = 0;
  while (!text.empty()) {
    ++line_number;
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text.remove_prefix(newline == std::string_view::npos ? text.size() : newline + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "config line " + std::to_string(line_number) + ": expected key = value", line_number);
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "config line " + std::to_string(line_number) + ": empty key", line_number);
    }
    if (out.contains(key)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "config line " + std::to_string(line_number) + ": duplicate key '" + std::string(key) + "'",
                  line_number);
    }
    out.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::optional<std::string> KeyValues::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint64_t> KeyValues::get_uint(std::string_view key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  return parse_uint(key, *v);
}

std::optional<double> KeyValues::get_double(std::string_view key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  double d = 0.0;
  auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), d);
  if (v->empty() || ec != std::errc() || end != v->data() + v->size() || !std::isfinite(d)) {
    bad_value(key, *v, "a number");
  }
  return d;
}

std::optional<std::vector<std::size_t>> KeyValues::get_uint_list(std::string_view key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  std::vector<std::size_t> out;
  std::string_view rest = *v;
  if (trim(rest).empty()) return out;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(static_cast<std::size_t>(parse_uint(key, rest.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<std::string> KeyValues::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::string KeyValues::to_string() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string join_uint_list(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace supertc
