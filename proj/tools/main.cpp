// supertc: command-line driver for the composition -> Tc pipeline.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
// stdout carries only data; diagnostics go to stderr as
//   error: <category>
//   <detail>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "supertc/dataset.hpp"
#include "supertc/error.hpp"
#include "supertc/gradcheck.hpp"
#include "supertc/model.hpp"
#include "supertc/numfmt.hpp"
#include "supertc/trainer.hpp"

namespace {

using namespace supertc;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr const char* kOutDirEnv = "SUPERTC_OUT_DIR";

int exit_code_for(ErrorCode code) {
  switch (error_category(code)) {
    case ErrorCategory::kUsage: return kExitUsage;
    case ErrorCategory::kData: return kExitData;
    case ErrorCategory::kNumeric: return kExitNumeric;
  }
  return kExitData;
}

int report_error(std::string_view category, const std::string& detail, int exit_code) {
  std::cerr << "error: " << category << "\n" << detail << "\n";
  return exit_code;
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  std::string variant;
  std::optional<std::size_t> epochs, stage1_epochs, stage2_epochs, decay_epoch, batch_size, eval_every;
  std::optional<double> lr, lr_decayed;
  std::string optimizer;
  std::size_t jobs = 1;
};

int cmd_train(const TrainArgs& args) {
  KeyValues kv = args.config.empty() ? KeyValues{} : KeyValues::load(args.config);
  for (const auto& key : kv.keys()) {
    const auto& mk = ModelConfig::keys();
    const auto& sk = TrainSchedule::keys();
    if (std::find(mk.begin(), mk.end(), key) == mk.end() && std::find(sk.begin(), sk.end(), key) == sk.end()) {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    }
  }
  if (!args.variant.empty()) {
    if (kv.get("variant") && *kv.get("variant") != args.variant) {
      throw Error(ErrorCode::kInvalidConfig, "--variant " + args.variant + " conflicts with config variant " +
                                                 *kv.get("variant"));
    }
    kv.set("variant", args.variant);
  }
  const ModelConfig model_config = ModelConfig::from_key_values(kv);
  TrainSchedule schedule = TrainSchedule::from_key_values(kv);

  if (args.epochs) schedule.stage1_epochs = schedule.stage2_epochs = *args.epochs;
  if (args.stage1_epochs) schedule.stage1_epochs = *args.stage1_epochs;
  if (args.stage2_epochs) schedule.stage2_epochs = *args.stage2_epochs;
  if (args.decay_epoch) {
    schedule.decay_epoch = *args.decay_epoch;
  } else if ((args.epochs || args.stage1_epochs || args.stage2_epochs) && !kv.contains("decay_epoch")) {
    // Keep the default 3000/5000 position of the decay.
    schedule.decay_epoch = std::min(schedule.stage1_epochs, schedule.stage2_epochs) * 3 / 5;
  }
  if (args.lr) schedule.lr_initial = *args.lr;
  if (args.lr_decayed) schedule.lr_decayed = *args.lr_decayed;
  if (args.batch_size) schedule.batch_size = *args.batch_size;
  if (args.eval_every) schedule.eval_every = *args.eval_every;
  if (!args.optimizer.empty()) schedule.optimizer = optimizer_from_name(args.optimizer);
  if (!args.seeds.empty()) schedule.split_seeds = args.seeds;
  schedule.validate();
  Model::build(model_config);  // rejects bad geometry before any data is read

  std::filesystem::path out_dir = args.out;
  if (out_dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    out_dir = env != nullptr && *env != '\0' ? env : "supertc-out";
  }

  const auto records = load_csv(args.data);
  std::cerr << "loaded " << records.size() << " records from " << args.data << "\n";
  std::cerr << "training " << model_variant_name(model_config.variant) << " on " << schedule.split_seeds.size()
            << " split(s), " << schedule.stage1_epochs << "+" << schedule.stage2_epochs << " epochs\n";

  ExperimentOptions options;
  options.output_dir = out_dir;
  options.jobs = args.jobs;
  const ExperimentResult result = run_experiment(records, model_config, schedule, options);
  std::cout << report_json(result);
  std::cerr << "wrote " << (out_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data, const std::string& subset,
                 std::uint64_t seed, double test_fraction) {
  const Model model = load_checkpoint(checkpoint);
  const auto records = load_csv(data);
  std::vector<LabeledRecord> selected;
  if (subset == "all") {
    selected = records;
  } else {
    const SplitSet s = split(records, seed, test_fraction);
    selected = select(records, subset == "train" ? s.train_indices : s.test_indices);
  }
  if (selected.empty()) throw Error(ErrorCode::kEmptyDataset, "selected subset is empty");
  std::cout << metrics_json(evaluate_model(model, selected));
  return 0;
}

int cmd_predict(const std::string& checkpoint, std::vector<std::string> formulas, const std::string& formulas_file) {
  if (!formulas_file.empty()) {
    std::ifstream in(formulas_file);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + formulas_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) formulas.push_back(line);
    }
  }
  if (formulas.empty()) return report_error("usage", "no formulas given (use --formula or --formulas-file)", kExitUsage);

  std::vector<Composition> compositions;
  std::ostringstream bad;
  for (const auto& f : formulas) {
    try {
      compositions.push_back(parse_formula(f));
    } catch (const FormulaError& e) {
      bad << f << ": " << error_code_name(e.code()) << " at offset " << e.offset() << ": " << e.what() << "\n";
    }
  }
  if (!bad.str().empty()) {
    std::string detail = bad.str();
    detail.pop_back();
    return report_error("parse", detail, kExitData);
  }

  const Model model = load_checkpoint(checkpoint);
  const auto predictions = model.predict(compositions);
  std::cout << "formula,tc_pred_K,sc_score,sc_label\n";
  for (std::size_t i = 0; i < formulas.size(); ++i) {
    const auto& p = predictions[i];
    std::cout << formulas[i] << ',' << shortest_decimal(p.tc_pred) << ',' << shortest_decimal(p.sc_score) << ','
              << p.sc_label << '\n';
  }
  return 0;
}

int cmd_split(const std::string& data, std::uint64_t seed, double test_fraction, const std::string& out) {
  const auto records = load_csv(data);
  const SplitSet s = split(records, seed, test_fraction);
  const auto write_indices = [](std::ostream& os, const std::vector<std::size_t>& indices) {
    for (auto i : indices) os << i << '\n';
  };
  if (out.empty()) {
    std::cout << "set,index\n";
    for (auto i : s.train_indices) std::cout << "train," << i << '\n';
    for (auto i : s.test_indices) std::cout << "test," << i << '\n';
  } else {
    std::filesystem::create_directories(out);
    std::ofstream train(std::filesystem::path(out) / "train_indices.txt");
    std::ofstream test(std::filesystem::path(out) / "test_indices.txt");
    if (!train || !test) throw Error(ErrorCode::kIo, "cannot write index files under " + out);
    write_indices(train, s.train_indices);
    write_indices(test, s.test_indices);
  }
  std::cerr << "seed " << seed << ": train=" << s.train_indices.size() << " test=" << s.test_indices.size() << "\n";
  return 0;
}

int cmd_histogram(const std::string& data, double bin_width, const std::string& out) {
  const auto records = load_csv(data);
  const std::string tsv = format_histogram_tsv(tc_histogram(records, bin_width));
  if (out.empty()) {
    std::cout << tsv;
  } else {
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::kIo, "cannot write " + out);
    file << tsv;
  }
  return 0;
}

int cmd_gradcheck(const std::string& variant, std::uint64_t seed, std::size_t seed_count, bool corrupt) {
  GradcheckOptions options;
  options.variant = model_variant_from_name(variant);
  options.corrupt_gradient = corrupt;
  double worst = 0.0;
  std::cout << "seed\tcase\telements\tmax_rel_err\n";
  for (std::size_t k = 0; k < seed_count; ++k) {
    options.seed = seed + k;
    const GradcheckReport report = run_gradcheck(options);
    for (const auto& c : report.cases) {
      std::cout << options.seed << '\t' << c.name << '\t' << c.elements << '\t' << shortest_decimal(c.max_rel_err)
                << '\n';
    }
    worst = std::max(worst, report.max_rel_err);
  }
  const bool ok = worst < kGradcheckTolerance;
  std::cout << "# max_rel_err=" << shortest_decimal(worst) << (ok ? " < " : " >= ")
            << shortest_decimal(kGradcheckTolerance) << "\n";
  if (!ok) {
    return report_error("gradcheck", "analytic and finite-difference gradients disagree (max_rel_err " +
                                         shortest_decimal(worst) + ")",
                        kExitNumeric);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superconductor classification and Tc regression from chemical composition"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Two-stage training over seeded train/test splits");
  train_cmd->add_option("--data", train.data, "CSV with header formula,tc")->required();
  train_cmd->add_option("--config", train.config, "key = value model/schedule file");
  train_cmd->add_option("--out", train.out, std::string("Output directory (default $") + kOutDirEnv + " or ./supertc-out)");
  train_cmd->add_option("--seeds", train.seeds, "Split seeds (default 0..5)")->delimiter(',');
  train_cmd->add_option("--variant", train.variant, "fcnn or cnn")->check(CLI::IsMember({"fcnn", "cnn"}));
  train_cmd->add_option("--epochs", train.epochs, "Epochs for each stage");
  train_cmd->add_option("--stage1-epochs", train.stage1_epochs);
  train_cmd->add_option("--stage2-epochs", train.stage2_epochs);
  train_cmd->add_option("--decay-epoch", train.decay_epoch, "Epoch at which the learning rate drops");
  train_cmd->add_option("--lr", train.lr, "Initial learning rate");
  train_cmd->add_option("--lr-decayed", train.lr_decayed, "Learning rate after the decay epoch");
  train_cmd->add_option("--batch-size", train.batch_size, "0 = variant default");
  train_cmd->add_option("--eval-every", train.eval_every, "Test-set evaluation period for curves");
  train_cmd->add_option("--optimizer", train.optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  train_cmd->add_option("--jobs", train.jobs, "Splits trained concurrently")->check(CLI::PositiveNumber);

  std::string checkpoint, data, subset = "all", formulas_file, split_out, hist_out, variant = "fcnn";
  std::vector<std::string> formulas;
  std::uint64_t seed = 0;
  std::size_t seed_count = 1;
  double test_fraction = 0.2, bin_width = 1.0;
  bool corrupt = false;

  auto* eval_cmd = app.add_subcommand("evaluate", "Metrics of a checkpoint on a CSV (JSON to stdout)");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--data", data)->required();
  eval_cmd->add_option("--subset", subset, "all, train or test")->check(CLI::IsMember({"all", "train", "test"}));
  eval_cmd->add_option("--seed", seed, "Split seed for --subset train/test");
  eval_cmd->add_option("--test-fraction", test_fraction);

  auto* predict_cmd = app.add_subcommand("predict", "Predict Tc and superconductor score for formulas");
  predict_cmd->add_option("--checkpoint", checkpoint)->required();
  auto* formula_opt = predict_cmd->add_option("--formula", formulas, "Formula, repeatable");
  predict_cmd->add_option("--formulas-file", formulas_file, "One formula per line")->excludes(formula_opt);

  auto* split_cmd = app.add_subcommand("split", "Materialize a seeded train/test partition");
  split_cmd->add_option("--data", data)->required();
  split_cmd->add_option("--seed", seed);
  split_cmd->add_option("--test-fraction", test_fraction);
  split_cmd->add_option("--out", split_out, "Directory for train_indices.txt/test_indices.txt (default: CSV to stdout)");

  auto* hist_cmd = app.add_subcommand("histogram", "Tc histogram as TSV with a trailing mean line");
  hist_cmd->add_option("--data", data)->required();
  hist_cmd->add_option("--bin-width", bin_width, "Bin width in kelvin")->check(CLI::PositiveNumber);
  hist_cmd->add_option("--out", hist_out, "Output file (default stdout)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer and a tiny model");
  grad_cmd->add_option("--variant", variant)->check(CLI::IsMember({"fcnn", "cnn"}));
  grad_cmd->add_option("--seed", seed);
  grad_cmd->add_option("--seeds", seed_count, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  grad_cmd->add_flag("--corrupt-gradient", corrupt, "Test hook: perturb analytic gradients")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kExitUsage);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_evaluate(checkpoint, data, subset, seed, test_fraction);
    if (predict_cmd->parsed()) return cmd_predict(checkpoint, formulas, formulas_file);
    if (split_cmd->parsed()) return cmd_split(data, seed, test_fraction, split_out);
    if (hist_cmd->parsed()) return cmd_histogram(data, bin_width, hist_out);
    if (grad_cmd->parsed()) return cmd_gradcheck(variant, seed, seed_count, corrupt);
  } catch (const Error& e) {
    return report_error(error_code_name(e.code()), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), kExitData);
  }
  return kExitUsage;
}
