#pragma once

// Branched networks: a shared backbone feeding a Tc regression head and a
// superconductor classification head. Parameters carry a group tag so the
// trainer can freeze backbone + tc_head while fitting the classifier.
//
// fcnn: [N,120] -> dense(+ReLU) x backbone_widths -> features
// cnn:  [N,1,10,12] -> (conv + ReLU [+ maxpool]) x conv_filters -> flatten
//       -> dense(+ReLU) x dense_widths -> features
// head: features -> dense(+ReLU) x head_widths -> dense 1
//       (tc_head: raw kelvin, cls_head: sigmoid score)

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supertc/autograd.hpp"
#include "supertc/config.hpp"
#include "supertc/dataset.hpp"
#include "supertc/params.hpp"

namespace supertc {

enum class ModelVariant { kFcnn, kCnn };

std::string_view model_variant_name(ModelVariant variant);
ModelVariant model_variant_from_name(std::string_view name);

struct ModelConfig {
  ModelVariant variant = ModelVariant::kFcnn;
  // fcnn hidden widths, or dense widths after flattening for cnn.
  std::vector<std::size_t> dense_widths = {256, 128};
  std::vector<std::size_t> head_widths = {64};
  std::vector<std::size_t> conv_filters = {16, 32};
  std::size_t conv_kernel = 3;
  std::size_t conv_stride = 1;
  std::size_t conv_padding = 1;
  std::size_t pool_window = 2;
  std::uint64_t seed = 0;

  static ModelConfig defaults(ModelVariant variant);

  // Reads the model keys present in `kv`, starting from the variant's
  // defaults. Keys: variant, dense_widths, head_widths, conv_filters,
  // conv_kernel, conv_stride, conv_padding, pool_window, seed.
  static ModelConfig from_key_values(const KeyValues& kv);
  static const std::vector<std::string>& keys();
  void write_key_values(KeyValues& kv) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Prediction {
  double tc_pred = 0.0;   // kelvin, clamped at 0
  double sc_score = 0.5;  // in (0, 1)
  int sc_label = 1;       // sc_score >= 0.5
};

inline constexpr double kClassThreshold = 0.5;

struct ForwardOutputs {
  std::optional<Var> tc;        // [N,1]
  std::optional<Var> sc_score;  // [N,1]
};

enum class Heads { kTc, kCls, kBoth };

class Model {
 public:
  // Throws kInvalidConfig for geometry that does not fit the 10x12 grid or
  // for empty/zero widths.
  static Model build(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  // Input layout for the variant: [N,120] or [N,1,10,12].
  NdArray encode_batch(std::span<const Composition> compositions) const;
  NdArray encode_batch(std::span<const LabeledRecord> records,
                       std::span<const std::size_t> indices) const;

  // Records the forward pass with parameters bound as gradient-carrying
  // leaves (subject to their trainable flag).
  ForwardOutputs forward(Tape& tape, const NdArray& batch, Heads heads);
  // Same graph with parameters bound as constants.
  ForwardOutputs forward_inference(Tape& tape, const NdArray& batch, Heads heads) const;

  std::vector<Prediction> predict(std::span<const Composition> compositions) const;
  std::vector<Prediction> predict(std::span<const LabeledRecord> records) const;

  // Raw (unclamped) outputs, for tests and evaluation.
  void forward_values(const NdArray& batch, std::vector<double>& tc_raw,
                      std::vector<double>& sc_score) const;

 private:
  explicit Model(ModelConfig config) : config_(std::move(config)) {}

  using Binder = std::function<Var(const std::string& name)>;
  ForwardOutputs run(Tape& tape, const NdArray& batch, Heads heads, const Binder& bind) const;

  ModelConfig config_;
  ParamStore params_;
};

// Binary checkpoint; byte layout documented in docs/checkpoint_format.md.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);
// Also rejects a checkpoint of a different variant with kVersionMismatch.
Model load_checkpoint(const std::filesystem::path& path, ModelVariant expected);

std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace supertc
