#include "supertc/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "supertc/error.hpp"
#include "supertc/numfmt.hpp"
#include "supertc/random.hpp"

namespace supertc {
namespace {

constexpr std::size_t kDefaultCnnBatch = 256;

[[noreturn]] void invalid(const std::string& reason) { throw Error(ErrorCode::kInvalidConfig, reason); }

NdArray gather_rows(const NdArray& all, std::span<const std::size_t> rows) {
  Shape shape = all.shape();
  const std::size_t row_size = all.size() / shape[0];
  shape[0] = rows.size();
  std::vector<double> data;
  data.reserve(rows.size() * row_size);
  const auto src = all.data();
  for (auto r : rows) {
    data.insert(data.end(), src.begin() + static_cast<std::ptrdiff_t>(r * row_size),
                src.begin() + static_cast<std::ptrdiff_t>((r + 1) * row_size));
  }
  return NdArray(std::move(shape), std::move(data));
}

NdArray column(std::span<const double> values) {
  return NdArray({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

struct EncodedSet {
  NdArray inputs;
  std::vector<double> tc;
  std::vector<double> label;
};

EncodedSet encode_set(const Model& model, std::span<const LabeledRecord> records) {
  std::vector<std::size_t> all(records.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  EncodedSet out{model.encode_batch(records, all), {}, {}};
  for (const auto& r : records) {
    out.tc.push_back(r.tc);
    out.label.push_back(static_cast<double>(r.label));
  }
  return out;
}

// Loss and metric of one head over a whole set, without gradients.
std::pair<double, double> evaluate_head(const Model& model, const EncodedSet& set, int stage) {
  constexpr std::size_t kChunk = 1024;
  const std::size_t n = set.tc.size();
  double loss_sum = 0.0, metric_sum = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += kChunk) {
    rows.resize(std::min(kChunk, n - start));
    std::iota(rows.begin(), rows.end(), start);
    Tape tape;
    const auto out = model.forward_inference(tape, gather_rows(set.inputs, rows), stage == 1 ? Heads::kTc : Heads::kCls);
    const auto pred = tape.value(stage == 1 ? *out.tc : *out.sc_score).data();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double target = stage == 1 ? set.tc[rows[i]] : set.label[rows[i]];
      loss_sum += (pred[i] - target) * (pred[i] - target);
      if (stage == 1) {
        metric_sum += std::abs(pred[i] - target);
      } else {
        metric_sum += ((pred[i] >= kClassThreshold ? 1.0 : 0.0) == target) ? 1.0 : 0.0;
      }
    }
  }
  return {loss_sum / static_cast<double>(n), metric_sum / static_cast<double>(n)};
}

std::vector<EpochLog> train_stage(int stage, Model& model, std::span<const LabeledRecord> train,
                                  std::span<const LabeledRecord> test, const TrainSchedule& schedule,
                                  std::uint64_t shuffle_seed, const EpochObserver& observer) {
  schedule.validate();
  if (train.empty()) throw Error(ErrorCode::kEmptyDataset, "empty training set");

  ParamStore& params = model.params();
  params.set_trainable(ParamGroup::kBackbone, stage == 1);
  params.set_trainable(ParamGroup::kTcHead, stage == 1);
  params.set_trainable(ParamGroup::kClsHead, stage == 2);
  params.zero_grad();

  const EncodedSet train_set = encode_set(model, train);
  const std::optional<EncodedSet> test_set =
      test.empty() ? std::nullopt : std::optional<EncodedSet>(encode_set(model, test));
  const std::vector<double>& targets = stage == 1 ? train_set.tc : train_set.label;
  const Heads heads = stage == 1 ? Heads::kTc : Heads::kCls;

  const std::size_t n = train.size();
  const std::size_t batch = schedule.effective_batch_size(model.config().variant, n);
  const std::size_t epochs = stage == 1 ? schedule.stage1_epochs : schedule.stage2_epochs;
  Optimizer optimizer(schedule.optimizer);
  Rng rng(shuffle_seed * 2 + static_cast<std::uint64_t>(stage));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> batch_targets;

  std::vector<EpochLog> curve;
  curve.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const double lr = learning_rate(schedule, epoch);
    if (batch < n) {
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    }

    double loss_sum = 0.0, metric_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(batch, n - start));
      batch_targets.clear();
      for (auto r : rows) batch_targets.push_back(targets[r]);

      Tape tape;
      NdArray gathered;
      const NdArray* inputs = &train_set.inputs;
      if (batch < n) {
        gathered = gather_rows(train_set.inputs, rows);
        inputs = &gathered;
      }
      const ForwardOutputs out = model.forward(tape, *inputs, heads);
      const Var pred = stage == 1 ? *out.tc : *out.sc_score;
      const Var loss = mse_loss(tape, pred, tape.constant(column(batch_targets)));
      const double loss_value = tape.value(loss)[0];
      if (!std::isfinite(loss_value)) {
        std::string rows_text;
        for (std::size_t i = 0; i < rows.size() && i < 16; ++i) rows_text += (i ? "," : "") + std::to_string(rows[i]);
        if (rows.size() > 16) rows_text += ",...";
        throw Error(ErrorCode::kNonFiniteLoss,
                    "non-finite loss in stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) +
                        " (batch rows " + rows_text + ", lr " + shortest_decimal(lr) + ")",
                    epoch);
      }
      loss_sum += loss_value * static_cast<double>(rows.size());
      const auto p = tape.value(pred).data();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (stage == 1) {
          metric_sum += std::abs(p[i] - batch_targets[i]);
        } else {
          metric_sum += ((p[i] >= kClassThreshold ? 1.0 : 0.0) == batch_targets[i]) ? 1.0 : 0.0;
        }
      }
      tape.backward(loss);
      optimizer.step(params, lr);
    }

    EpochLog log;
    log.stage = stage;
    log.epoch = epoch;
    log.learning_rate = lr;
    log.train_loss = loss_sum / static_cast<double>(n);
    log.train_metric = metric_sum / static_cast<double>(n);
    if (test_set && ((epoch + 1) % schedule.eval_every == 0 || epoch + 1 == epochs)) {
      const auto [test_loss, test_metric] = evaluate_head(model, *test_set, stage);
      log.test_loss = test_loss;
      log.test_metric = test_metric;
    }
    curve.push_back(log);
    if (observer) observer(curve.back(), model);
  }
  return curve;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace

void TrainSchedule::validate() const {
  if (stage1_epochs == 0 || stage2_epochs == 0) invalid("stage epoch counts must be positive");
  if (decay_epoch >= stage1_epochs || decay_epoch >= stage2_epochs) {
    invalid("decay_epoch (" + std::to_string(decay_epoch) + ") must be below both stage epoch counts");
  }
  if (!(lr_initial > 0.0) || !(lr_decayed > 0.0)) invalid("learning rates must be positive");
  if (split_seeds.empty()) invalid("at least one split seed is required");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) invalid("test_fraction must lie in (0, 1)");
  if (eval_every == 0) invalid("eval_every must be positive");
}

std::size_t TrainSchedule::effective_batch_size(ModelVariant variant, std::size_t train_size) const {
  std::size_t b = batch_size;
  if (b == 0) b = variant == ModelVariant::kCnn ? kDefaultCnnBatch : train_size;
  return std::max<std::size_t>(1, std::min(b, train_size));
}

const std::vector<std::string>& TrainSchedule::keys() {
  static const std::vector<std::string> kKeys = {
      "stage1_epochs", "stage2_epochs", "lr_initial",    "lr_decayed", "decay_epoch",
      "batch_size",    "split_seeds",   "test_fraction", "optimizer",  "eval_every"};
  return kKeys;
}

TrainSchedule TrainSchedule::from_key_values(const KeyValues& kv) {
  TrainSchedule s;
  if (auto v = kv.get_uint("stage1_epochs")) s.stage1_epochs = *v;
  if (auto v = kv.get_uint("stage2_epochs")) s.stage2_epochs = *v;
  if (auto v = kv.get_double("lr_initial")) s.lr_initial = *v;
  if (auto v = kv.get_double("lr_decayed")) s.lr_decayed = *v;
  if (auto v = kv.get_uint("decay_epoch")) s.decay_epoch = *v;
  if (auto v = kv.get_uint("batch_size")) s.batch_size = *v;
  if (auto v = kv.get_uint_list("split_seeds")) s.split_seeds.assign(v->begin(), v->end());
  if (auto v = kv.get_double("test_fraction")) s.test_fraction = *v;
  if (auto v = kv.get("optimizer")) s.optimizer = optimizer_from_name(*v);
  if (auto v = kv.get_uint("eval_every")) s.eval_every = *v;
  return s;
}

void TrainSchedule::write_key_values(KeyValues& kv) const {
  kv.set("stage1_epochs", std::to_string(stage1_epochs));
  kv.set("stage2_epochs", std::to_string(stage2_epochs));
  kv.set("lr_initial", shortest_decimal(lr_initial));
  kv.set("lr_decayed", shortest_decimal(lr_decayed));
  kv.set("decay_epoch", std::to_string(decay_epoch));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("split_seeds", join_uint_list(std::vector<std::size_t>(split_seeds.begin(), split_seeds.end())));
  kv.set("test_fraction", shortest_decimal(test_fraction));
  kv.set("optimizer", std::string(optimizer_name(optimizer)));
  kv.set("eval_every", std::to_string(eval_every));
}

double learning_rate(const TrainSchedule& schedule, std::size_t epoch) {
  return epoch < schedule.decay_epoch ? schedule.lr_initial : schedule.lr_decayed;
}

std::vector<EpochLog> train_stage1(Model& model, std::span<const LabeledRecord> train,
                                   std::span<const LabeledRecord> test, const TrainSchedule& schedule,
                                   std::uint64_t shuffle_seed, const EpochObserver& observer) {
  return train_stage(1, model, train, test, schedule, shuffle_seed, observer);
}

std::vector<EpochLog> train_stage2(Model& model, std::span<const LabeledRecord> train,
                                   std::span<const LabeledRecord> test, const TrainSchedule& schedule,
                                   std::uint64_t shuffle_seed, const EpochObserver& observer) {
  return train_stage(2, model, train, test, schedule, shuffle_seed, observer);
}

MetricsReport evaluate_model(const Model& model, std::span<const LabeledRecord> records) {
  const auto predictions = model.predict(records);
  std::vector<int> predicted_labels, labels;
  std::vector<double> predicted_tc, tc;
  for (std::size_t i = 0; i < records.size(); ++i) {
    predicted_labels.push_back(predictions[i].sc_label);
    predicted_tc.push_back(predictions[i].tc_pred);
    labels.push_back(records[i].label);
    tc.push_back(records[i].tc);
  }
  return evaluate_predictions(predicted_labels, predicted_tc, labels, tc);
}

std::string format_curve_csv(std::span<const EpochLog> curve) {
  std::string out = "epoch,train_loss,train_metric,test_loss,test_metric\n";
  for (const auto& log : curve) {
    out += std::to_string(log.epoch) + ',' + shortest_decimal(log.train_loss) + ',' +
           shortest_decimal(log.train_metric) + ',' + (log.test_loss ? shortest_decimal(*log.test_loss) : "") +
           ',' + (log.test_metric ? shortest_decimal(*log.test_metric) : "") + '\n';
  }
  return out;
}

ExperimentResult run_experiment(std::span<const LabeledRecord> records, const ModelConfig& model_config,
                                const TrainSchedule& schedule, const ExperimentOptions& options) {
  schedule.validate();
  if (records.empty()) throw Error(ErrorCode::kEmptyDataset, "no records to train on");
  Model::build(model_config);  // reject bad geometry before any work

  ExperimentResult result;
  result.model_config = model_config;
  result.schedule = schedule;
  result.record_count = records.size();
  std::vector<int> labels;
  for (const auto& r : records) labels.push_back(r.label);
  result.baseline = majority_baseline(labels);

  if (options.output_dir) std::filesystem::create_directories(*options.output_dir / "splits");

  const std::size_t n_splits = schedule.split_seeds.size();
  std::vector<std::optional<SplitResult>> done(n_splits);
  std::vector<std::exception_ptr> errors(n_splits);

  const auto run_split = [&](std::size_t k) {
    try {
      const std::uint64_t seed = schedule.split_seeds[k];
      const SplitSet split_set = split(records.size(), seed, schedule.test_fraction);
      const auto train = select(records, split_set.train_indices);
      const auto test = select(records, split_set.test_indices);

      ModelConfig replica_config = model_config;
      replica_config.seed = model_config.seed + seed;
      Model model = Model::build(replica_config);

      SplitResult out;
      out.seed = seed;
      out.train_size = train.size();
      out.test_size = test.size();
      out.stage1_curve = train_stage1(model, train, test, schedule, seed);
      out.stage2_curve = train_stage2(model, train, test, schedule, seed);
      out.train = evaluate_model(model, train);
      if (!test.empty()) out.test = evaluate_model(model, test);

      if (options.output_dir) {
        const auto dir = *options.output_dir / "splits" / std::to_string(seed);
        std::filesystem::create_directories(dir);
        save_checkpoint(model, dir / "checkpoint");
        write_text(dir / "stage1.csv", format_curve_csv(out.stage1_curve));
        write_text(dir / "stage2.csv", format_curve_csv(out.stage2_curve));
      }
      done[k] = std::move(out);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, n_splits));
  if (jobs == 1) {
    for (std::size_t k = 0; k < n_splits; ++k) run_split(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < n_splits; k = next++) run_split(k);
      });
    }
    for (auto& w : workers) w.join();
  }

  std::exception_ptr first_error;
  for (std::size_t k = 0; k < n_splits; ++k) {
    if (done[k]) {
      result.splits.push_back(std::move(*done[k]));
      continue;
    }
    if (!first_error) first_error = errors[k];
    std::string message = "unknown error";
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    result.failed.push_back({schedule.split_seeds[k], message});
  }

  if (!result.splits.empty()) {
    std::vector<MetricsReport> train_reports, test_reports;
    for (const auto& s : result.splits) {
      train_reports.push_back(s.train);
      if (s.test_size > 0) test_reports.push_back(s.test);
    }
    result.train_aggregate = aggregate(train_reports);
    if (!test_reports.empty()) result.test_aggregate = aggregate(test_reports);
  }

  if (options.output_dir) write_text(*options.output_dir / "report.json", report_json(result));
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

}  // namespace supertc
