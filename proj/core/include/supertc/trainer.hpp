#pragma once

// Two-stage protocol. Stage 1 fits backbone + tc_head on Tc (MSE, kelvin)
// with cls_head outside the graph. Stage 2 freezes both and fits cls_head on
// the binary label (MSE against the sigmoid score). Each stage runs a fixed
// epoch budget with a single step decay of the learning rate.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supertc/config.hpp"
#include "supertc/dataset.hpp"
#include "supertc/metrics.hpp"
#include "supertc/model.hpp"
#include "supertc/optimizer.hpp"

namespace supertc {

struct TrainSchedule {
  std::size_t stage1_epochs = 5000;
  std::size_t stage2_epochs = 5000;
  double lr_initial = 1e-4;
  double lr_decayed = 1e-5;
  std::size_t decay_epoch = 3000;  // per stage, 0-based
  std::size_t batch_size = 0;      // 0: full batch for fcnn, 256 for cnn
  std::vector<std::uint64_t> split_seeds = {0, 1, 2, 3, 4, 5};
  double test_fraction = 0.2;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::size_t eval_every = 1;  // test-set evaluation period in epochs

  // Throws kInvalidConfig on violated invariants.
  void validate() const;
  std::size_t effective_batch_size(ModelVariant variant, std::size_t train_size) const;

  // Keys: stage1_epochs, stage2_epochs, lr_initial, lr_decayed, decay_epoch,
  // batch_size, split_seeds, test_fraction, optimizer, eval_every.
  static TrainSchedule from_key_values(const KeyValues& kv);
  static const std::vector<std::string>& keys();
  void write_key_values(KeyValues& kv) const;
};

// Learning rate used during `epoch` of either stage.
double learning_rate(const TrainSchedule& schedule, std::size_t epoch);

struct EpochLog {
  int stage = 1;
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_metric = 0.0;  // MAE in kelvin (stage 1) or accuracy (stage 2)
  std::optional<double> test_loss;
  std::optional<double> test_metric;
};

// Called after every epoch's parameter update.
using EpochObserver = std::function<void(const EpochLog&, const Model&)>;

std::vector<EpochLog> train_stage1(Model& model, std::span<const LabeledRecord> train,
                                   std::span<const LabeledRecord> test,
                                   const TrainSchedule& schedule, std::uint64_t shuffle_seed = 0,
                                   const EpochObserver& observer = {});

std::vector<EpochLog> train_stage2(Model& model, std::span<const LabeledRecord> train,
                                   std::span<const LabeledRecord> test,
                                   const TrainSchedule& schedule, std::uint64_t shuffle_seed = 0,
                                   const EpochObserver& observer = {});

MetricsReport evaluate_model(const Model& model, std::span<const LabeledRecord> records);

// `epoch,train_loss,train_metric,test_loss,test_metric`
std::string format_curve_csv(std::span<const EpochLog> curve);

struct SplitResult {
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  MetricsReport train;
  MetricsReport test;
  std::vector<EpochLog> stage1_curve;
  std::vector<EpochLog> stage2_curve;
};

struct FailedSplit {
  std::uint64_t seed = 0;
  std::string error;
};

struct ExperimentResult {
  ModelConfig model_config;
  TrainSchedule schedule;
  std::size_t record_count = 0;
  MajorityBaseline baseline;
  std::vector<SplitResult> splits;  // in split_seeds order, successful only
  std::vector<FailedSplit> failed;
  std::optional<AggregateReport> train_aggregate;
  std::optional<AggregateReport> test_aggregate;
};

struct ExperimentOptions {
  std::optional<std::filesystem::path> output_dir;
  std::size_t jobs = 1;
};

// Trains one model replica per split seed. The replica for seed s is
// initialized with model_config.seed + s. Artifacts, when an output
// directory is given:
//   splits/<seed>/checkpoint, splits/<seed>/stage1.csv,
//   splits/<seed>/stage2.csv, report.json
// If a split fails, the report still covers the finished splits and the
// first error is rethrown afterwards.
ExperimentResult run_experiment(std::span<const LabeledRecord> records, const ModelConfig& model_config,
                                const TrainSchedule& schedule, const ExperimentOptions& options = {});

std::string report_json(const ExperimentResult& result);
std::string metrics_json(const MetricsReport& report);

}  // namespace supertc
