#include "supertc/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "supertc/error.hpp"

namespace supertc {
namespace {

template <typename A, typename B>
void require_paired(std::span<A> a, std::span<B> b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::string(what) + ": " + std::to_string(a.size()) +
                                                " predictions vs " + std::to_string(b.size()) + " targets");
  }
  if (a.empty()) throw Error(ErrorCode::kEmpty, std::string(what) + ": empty input");
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
  require_paired(predictions, labels, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == 1;
    const bool truth = labels[i] == 1;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall) {
  if (!precision || !recall || *precision + *recall == 0.0) return std::nullopt;
  return 2.0 * *precision * *recall / (*precision + *recall);
}

ClassificationMetrics classification_metrics(const ConfusionCounts& counts) {
  if (counts.total() == 0) throw Error(ErrorCode::kEmpty, "classification metrics of zero records");
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
  m.precision = ratio(counts.tp, counts.tp + counts.fp);
  m.recall = ratio(counts.tp, counts.tp + counts.fn);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

double regression_mae(std::span<const double> tc_pred, std::span<const double> tc_true) {
  require_paired(tc_pred, tc_true, "regression_mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < tc_pred.size(); ++i) sum += std::abs(tc_pred[i] - tc_true[i]);
  return sum / static_cast<double>(tc_pred.size());
}

MajorityBaseline majority_baseline(std::span<const int> labels) {
  if (labels.empty()) throw Error(ErrorCode::kEmpty, "majority baseline of zero labels");
  std::size_t positives = 0;
  for (int l : labels) positives += l == 1 ? 1 : 0;
  MajorityBaseline out;
  out.predicted_class = 2 * positives >= labels.size() ? 1 : 0;
  const std::vector<int> predictions(labels.size(), out.predicted_class);
  out.counts = confusion(predictions, labels);
  out.metrics = classification_metrics(out.counts);
  return out;
}

MetricsReport evaluate_predictions(std::span<const int> predicted_labels,
                                   std::span<const double> predicted_tc,
                                   std::span<const int> labels, std::span<const double> tc) {
  const ClassificationMetrics cls = classification_metrics(confusion(predicted_labels, labels));
  MetricsReport r;
  r.accuracy = cls.accuracy;
  r.precision = cls.precision;
  r.recall = cls.recall;
  r.f1 = cls.f1;
  r.reg_mae_kelvin = regression_mae(predicted_tc, tc);
  double sum = 0.0;
  for (double t : tc) sum += t;
  r.mean_tc = sum / static_cast<double>(tc.size());
  r.count = tc.size();
  return r;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  out.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

AggregateReport aggregate(std::span<const MetricsReport> per_split) {
  if (per_split.empty()) throw Error(ErrorCode::kEmpty, "aggregate of zero reports");
  std::vector<double> accuracy, precision, recall, f1, mae, mean_tc;
  for (const auto& r : per_split) {
    accuracy.push_back(r.accuracy);
    if (r.precision) precision.push_back(*r.precision);
    if (r.recall) recall.push_back(*r.recall);
    if (r.f1) f1.push_back(*r.f1);
    mae.push_back(r.reg_mae_kelvin);
    mean_tc.push_back(r.mean_tc);
  }
  AggregateReport out;
  out["accuracy"] = mean_sd(accuracy);
  out["class_accuracy"] = out["accuracy"];
  out["precision"] = mean_sd(precision);
  out["recall"] = mean_sd(recall);
  out["f1"] = mean_sd(f1);
  out["reg_mae_kelvin"] = mean_sd(mae);
  out["mean_tc"] = mean_sd(mean_tc);
  return out;
}

std::string format_mean_sd(const MeanSd& value, int decimals, double scale) {
  if (!value.mean) return "NA";
  char buf[128];
  if (value.sd) {
    std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, *value.mean * scale, decimals, *value.sd * scale);
  } else {
    std::snprintf(buf, sizeof buf, "%.*f", decimals, *value.mean * scale);
  }
  return buf;
}

}  // namespace supertc
