#include <json.hpp>

#include "supertc/trainer.hpp"

namespace supertc {
namespace {

using nlohmann::ordered_json;

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json metrics_object(const MetricsReport& r) {
  ordered_json j;
  j["count"] = r.count;
  j["accuracy"] = r.accuracy;
  j["precision"] = optional_number(r.precision);
  j["recall"] = optional_number(r.recall);
  j["f1"] = optional_number(r.f1);
  j["reg_mae_kelvin"] = r.reg_mae_kelvin;
  j["class_accuracy"] = r.accuracy;
  j["mean_tc"] = r.mean_tc;
  return j;
}

ordered_json aggregate_object(const AggregateReport& agg) {
  ordered_json j;
  for (const char* field :
       {"accuracy", "precision", "recall", "f1", "reg_mae_kelvin", "class_accuracy", "mean_tc"}) {
    const MeanSd& v = agg.at(field);
    j[field] = {{"mean", optional_number(v.mean)}, {"sd", optional_number(v.sd)}, {"n", v.n}};
  }
  return j;
}

// Rendered like the published tables: "2.600 ± 0.194 / 17.9792", "91.95 ± 0.30%".
ordered_json summary_object(const AggregateReport& agg) {
  ordered_json j;
  j["avg_pred_diff_kelvin"] = format_mean_sd(agg.at("reg_mae_kelvin"), 3);
  j["avg_tc_kelvin"] = format_mean_sd({agg.at("mean_tc").mean, std::nullopt, agg.at("mean_tc").n}, 4);
  j["classification"] = format_mean_sd(agg.at("accuracy"), 2, 100.0) + "%";
  j["precision"] = format_mean_sd(agg.at("precision"), 1, 100.0) + "%";
  j["recall"] = format_mean_sd(agg.at("recall"), 1, 100.0) + "%";
  j["f1"] = format_mean_sd(agg.at("f1"), 1, 100.0) + "%";
  return j;
}

ordered_json key_values_object(const KeyValues& kv) {
  ordered_json j = ordered_json::object();
  for (const auto& key : kv.keys()) j[key] = *kv.get(key);
  return j;
}

}  // namespace

std::string metrics_json(const MetricsReport& report) { return metrics_object(report).dump(2) + "\n"; }

std::string report_json(const ExperimentResult& result) {
  ordered_json j;
  j["format"] = "supertc-report/1";
  KeyValues model_kv, schedule_kv;
  result.model_config.write_key_values(model_kv);
  result.schedule.write_key_values(schedule_kv);
  j["model_config"] = key_values_object(model_kv);
  j["schedule"] = key_values_object(schedule_kv);
  j["record_count"] = result.record_count;

  const auto& base = result.baseline;
  j["majority_baseline"] = {{"predicted_class", base.predicted_class},
                            {"accuracy", base.metrics.accuracy},
                            {"precision", optional_number(base.metrics.precision)},
                            {"recall", optional_number(base.metrics.recall)},
                            {"f1", optional_number(base.metrics.f1)}};

  ordered_json splits = ordered_json::array();
  for (const auto& s : result.splits) {
    ordered_json entry;
    entry["seed"] = s.seed;
    entry["train_size"] = s.train_size;
    entry["test_size"] = s.test_size;
    entry["train"] = metrics_object(s.train);
    entry["test"] = s.test_size > 0 ? metrics_object(s.test) : ordered_json(nullptr);
    splits.push_back(std::move(entry));
  }
  j["splits"] = std::move(splits);

  ordered_json aggregate = ordered_json::object();
  ordered_json summary = ordered_json::object();
  if (result.train_aggregate) {
    aggregate["train"] = aggregate_object(*result.train_aggregate);
    summary["train"] = summary_object(*result.train_aggregate);
  }
  if (result.test_aggregate) {
    aggregate["test"] = aggregate_object(*result.test_aggregate);
    summary["test"] = summary_object(*result.test_aggregate);
  }
  j["aggregate"] = std::move(aggregate);
  j["summary"] = std::move(summary);

  ordered_json failed = ordered_json::array();
  for (const auto& f : result.failed) failed.push_back({{"seed", f.seed}, {"error", f.error}});
  j["failed_splits"] = std::move(failed);
  return j.dump(2) + "\n";
}

}  // namespace supertc
