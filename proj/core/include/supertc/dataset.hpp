#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "supertc/formula.hpp"

namespace supertc {

inline constexpr std::size_t kFeatureLength = 120;
inline constexpr std::size_t kGridRows = 10;
inline constexpr std::size_t kGridCols = 12;
static_assert(kGridRows * kGridCols == kFeatureLength);

struct LabeledRecord {
  std::string formula;
  Composition composition;
  double tc = 0.0;  // kelvin
  int label = 0;    // 1 iff tc > 0

  static LabeledRecord make(std::string formula, double tc);
};

// values[z - 1] holds the fraction of the element with atomic number z.
// Indices 118 and 119 are padding and always zero.
struct FeatureVector {
  std::array<double, kFeatureLength> values{};
};

// Row-major 10x12 reshape of a FeatureVector.
struct FeatureGrid {
  std::array<std::array<double, kGridCols>, kGridRows> values{};

  FeatureVector flatten() const;
};

struct SplitSet {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

struct HistogramBin {
  double lower = 0.0;
  std::size_t count = 0;
};

struct TcHistogram {
  std::vector<HistogramBin> bins;  // non-empty bins only, ascending
  double mean_tc = 0.0;
};

// CSV with header `formula,tc`; LF or CRLF line endings; blank lines skipped.
std::vector<LabeledRecord> load_csv(const std::filesystem::path& path);
std::vector<LabeledRecord> parse_csv(std::string_view contents);

FeatureVector encode_vector(const Composition& composition);
FeatureGrid encode_grid(const FeatureVector& vector);

// Seeded Fisher-Yates shuffle; the test set takes floor(n * test_fraction)
// indices and the train set the rest.
SplitSet split(std::size_t record_count, std::uint64_t seed, double test_fraction = 0.2);
SplitSet split(std::span<const LabeledRecord> records, std::uint64_t seed,
               double test_fraction = 0.2);

TcHistogram tc_histogram(std::span<const LabeledRecord> records, double bin_width);

// `bin_lower<TAB>count` lines followed by `# mean=<value>`.
std::string format_histogram_tsv(const TcHistogram& histogram);

std::vector<LabeledRecord> select(std::span<const LabeledRecord> records,
                                  std::span<const std::size_t> indices);

}  // namespace supertc
