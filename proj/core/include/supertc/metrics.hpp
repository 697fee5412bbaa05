#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace supertc {

// Positive class is 1 (superconductor).
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Undefined ratios (zero denominators) are std::nullopt.
struct ClassificationMetrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels);
ClassificationMetrics classification_metrics(const ConfusionCounts& counts);
// Harmonic mean; nullopt when either input is missing or both are zero.
std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall);

// Mean |pred - true| in kelvin.
double regression_mae(std::span<const double> tc_pred, std::span<const double> tc_true);

// Constant predictor of the more frequent class (ties go to 1).
struct MajorityBaseline {
  int predicted_class = 1;
  ConfusionCounts counts;
  ClassificationMetrics metrics;
};
MajorityBaseline majority_baseline(std::span<const int> labels);

// One evaluated set (a split's train or test side).
struct MetricsReport {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double reg_mae_kelvin = 0.0;
  double mean_tc = 0.0;
  std::size_t count = 0;
};

MetricsReport evaluate_predictions(std::span<const int> predicted_labels,
                                   std::span<const double> predicted_tc,
                                   std::span<const int> labels, std::span<const double> tc);

struct MeanSd {
  std::optional<double> mean;  // absent when no split defined the value
  std::optional<double> sd;    // sample sd; absent for fewer than two values
  std::size_t n = 0;
};

MeanSd mean_sd(std::span<const double> values);

// Field name -> aggregate over splits. Fields: accuracy, precision, recall,
// f1, reg_mae_kelvin, mean_tc, class_accuracy.
using AggregateReport = std::map<std::string, MeanSd>;
AggregateReport aggregate(std::span<const MetricsReport> per_split);

// "4.497 ± 0.328", or just "4.497" when sd is absent. `scale` = 100 renders
// fractions as percentages.
std::string format_mean_sd(const MeanSd& value, int decimals, double scale = 1.0);

}  // namespace supertc
