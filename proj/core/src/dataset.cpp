#include "supertc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "supertc/numfmt.hpp"
#include "supertc/random.hpp"

namespace supertc {
namespace {

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r'; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void row_error(std::size_t line, const std::string& cause) {
  throw Error(ErrorCode::kParseRow, "line " + std::to_string(line) + ": " + cause, line);
}

}  // namespace

LabeledRecord LabeledRecord::make(std::string formula, double tc) {
  LabeledRecord record;
  record.composition = parse_formula(formula);
  record.formula = std::move(formula);
  record.tc = tc;
  record.label = tc > 0.0 ? 1 : 0;
  return record;
}

FeatureVector FeatureGrid::flatten() const {
  FeatureVector out;
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kGridCols; ++c) out.values[r * kGridCols + c] = values[r][c];
  }
  return out;
}

std::vector<LabeledRecord> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return parse_csv(buffer.str());
}

std::vector<LabeledRecord> parse_csv(std::string_view contents) {
  std::vector<LabeledRecord> records;
  bool seen_header = false;
  std::size_t line_number = 0;
  while (!contents.empty()) {
    ++line_number;
    const auto newline = contents.find('\n');
    std::string_view line = contents.substr(0, newline);
    contents.remove_prefix(newline == std::string_view::npos ? contents.size() : newline + 1);
    line = trim(line);
    if (line.empty()) continue;

    if (!seen_header) {
      if (line != "formula,tc") row_error(line_number, "expected header 'formula,tc'");
      seen_header = true;
      continue;
    }

    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      row_error(line_number, "expected exactly two fields");
    }
    const std::string_view formula = trim(line.substr(0, comma));
    const std::string_view tc_text = trim(line.substr(comma + 1));

    double tc = 0.0;
    const char* last = tc_text.data() + tc_text.size();
    auto [end, ec] = std::from_chars(tc_text.data(), last, tc);
    if (tc_text.empty() || ec != std::errc() || end != last || !std::isfinite(tc)) {
      row_error(line_number, "invalid tc value '" + std::string(tc_text) + "'");
    }
    if (tc < 0.0) {
      throw Error(ErrorCode::kNegativeTc,
                  "line " + std::to_string(line_number) + ": negative tc " + std::string(tc_text),
                  line_number);
    }
    try {
      records.push_back(LabeledRecord::make(std::string(formula), tc));
    } catch (const FormulaError& e) {
      row_error(line_number, std::string(e.what()) + " at offset " + std::to_string(e.offset()));
    }
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyDataset, "no data rows");
  return records;
}

FeatureVector encode_vector(const Composition& composition) {
  FeatureVector out;
  const double total = composition.total_amount();
  for (const auto& entry : composition.entries()) {
    out.values[entry.element.atomic_number() - 1] = entry.amount / total;
  }
  return out;
}

FeatureGrid encode_grid(const FeatureVector& vector) {
  FeatureGrid grid;
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kGridCols; ++c) grid.values[r][c] = vector.values[r * kGridCols + c];
  }
  return grid;
}

SplitSet split(std::size_t record_count, std::uint64_t seed, double test_fraction) {
  if (record_count == 0) throw Error(ErrorCode::kEmptyDataset, "cannot split an empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kUsage, "test fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(record_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = record_count - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }

  // Small slack so products like 0.29 * 100 still floor to 29.
  const auto test_count = static_cast<std::size_t>(
      std::floor(static_cast<double>(record_count) * test_fraction + 1e-9));

  SplitSet out;
  out.seed = seed;
  out.test_indices.assign(order.begin(), order.begin() + test_count);
  out.train_indices.assign(order.begin() + test_count, order.end());
  return out;
}

SplitSet split(std::span<const LabeledRecord> records, std::uint64_t seed, double test_fraction) {
  return split(records.size(), seed, test_fraction);
}

TcHistogram tc_histogram(std::span<const LabeledRecord> records, double bin_width) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::kUsage, "bin width must be positive");
  if (records.empty()) throw Error(ErrorCode::kEmpty, "histogram of an empty record set");

  std::map<long long, std::size_t> counts;
  double sum = 0.0;
  for (const auto& record : records) {
    ++counts[static_cast<long long>(std::floor(record.tc / bin_width))];
    sum += record.tc;
  }
  TcHistogram out;
  for (const auto& [k, count] : counts) {
    out.bins.push_back({static_cast<double>(k) * bin_width, count});
  }
  out.mean_tc = sum / static_cast<double>(records.size());
  return out;
}

std::string format_histogram_tsv(const TcHistogram& histogram) {
  std::string out;
  for (const auto& bin : histogram.bins) {
    out += shortest_decimal(bin.lower) + '\t' + std::to_string(bin.count) + '\n';
  }
  out += "# mean=" + shortest_decimal(histogram.mean_tc) + '\n';
  return out;
}

std::vector<LabeledRecord> select(std::span<const LabeledRecord> records,
                                  std::span<const std::size_t> indices) {
  std::vector<LabeledRecord> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(records[i]);
  return out;
}

}  // namespace supertc
