#include "supertc/model.hpp"

#include <algorithm>
#include <cmath>

#include "supertc/error.hpp"
#include "supertc/random.hpp"

namespace supertc {
namespace {

const char* head_prefix(ParamGroup group) {
  return group == ParamGroup::kTcHead ? "tc_head" : "cls_head";
}

// Kaiming-uniform: U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)).
NdArray kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  NdArray out(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : out.data()) v = rng.uniform(-bound, bound);
  return out;
}

void add_dense(ParamStore& params, const std::string& prefix, std::size_t in, std::size_t out,
               ParamGroup group, Rng& rng) {
  params.add(prefix + ".weight", kaiming_uniform({in, out}, in, rng), group);
  params.add(prefix + ".bias", NdArray({out}), group);
}

[[noreturn]] void invalid(const std::string& reason) {
  throw Error(ErrorCode::kInvalidConfig, reason);
}

}  // namespace

std::string_view model_variant_name(ModelVariant variant) {
  return variant == ModelVariant::kFcnn ? "fcnn" : "cnn";
}

ModelVariant model_variant_from_name(std::string_view name) {
  if (name == "fcnn") return ModelVariant::kFcnn;
  if (name == "cnn") return ModelVariant::kCnn;
  invalid("unknown model variant '" + std::string(name) + "'");
}

ModelConfig ModelConfig::defaults(ModelVariant variant) {
  ModelConfig config;
  config.variant = variant;
  if (variant == ModelVariant::kCnn) config.dense_widths = {128};
  return config;
}

const std::vector<std::string>& ModelConfig::keys() {
  static const std::vector<std::string> kKeys = {
      "variant",      "dense_widths", "head_widths", "conv_filters", "conv_kernel",
      "conv_stride",  "conv_padding", "pool_window", "seed"};
  return kKeys;
}

ModelConfig ModelConfig::from_key_values(const KeyValues& kv) {
  ModelConfig config = defaults(model_variant_from_name(kv.get("variant").value_or("fcnn")));
  if (auto v = kv.get_uint_list("dense_widths")) config.dense_widths = *v;
  if (auto v = kv.get_uint_list("head_widths")) config.head_widths = *v;
  if (auto v = kv.get_uint_list("conv_filters")) config.conv_filters = *v;
  if (auto v = kv.get_uint("conv_kernel")) config.conv_kernel = *v;
  if (auto v = kv.get_uint("conv_stride")) config.conv_stride = *v;
  if (auto v = kv.get_uint("conv_padding")) config.conv_padding = *v;
  if (auto v = kv.get_uint("pool_window")) config.pool_window = *v;
  if (auto v = kv.get_uint("seed")) config.seed = *v;
  return config;
}

void ModelConfig::write_key_values(KeyValues& kv) const {
  kv.set("variant", std::string(model_variant_name(variant)));
  kv.set("dense_widths", join_uint_list(dense_widths));
  kv.set("head_widths", join_uint_list(head_widths));
  kv.set("seed", std::to_string(seed));
  if (variant == ModelVariant::kCnn) {
    kv.set("conv_filters", join_uint_list(conv_filters));
    kv.set("conv_kernel", std::to_string(conv_kernel));
    kv.set("conv_stride", std::to_string(conv_stride));
    kv.set("conv_padding", std::to_string(conv_padding));
    kv.set("pool_window", std::to_string(pool_window));
  }
}

Model Model::build(const ModelConfig& config) {
  for (auto w : config.dense_widths) if (w == 0) invalid("dense widths must be positive");
  for (auto w : config.head_widths) if (w == 0) invalid("head widths must be positive");

  Model model(config);
  Rng rng(config.seed);
  ParamStore& params = model.params_;

  std::size_t features = kFeatureLength;
  if (config.variant == ModelVariant::kCnn) {
    if (config.conv_filters.empty()) invalid("cnn needs at least one conv layer");
    std::size_t channels = 1, h = kGridRows, w = kGridCols;
    for (std::size_t i = 0; i < config.conv_filters.size(); ++i) {
      const std::size_t filters = config.conv_filters[i];
      if (filters == 0) invalid("conv filter counts must be positive");
      try {
        h = conv_output_extent(h, config.conv_kernel, config.conv_stride, config.conv_padding);
        w = conv_output_extent(w, config.conv_kernel, config.conv_stride, config.conv_padding);
        if (i + 1 < config.conv_filters.size()) {
          h = pool_output_extent(h, config.pool_window, config.pool_window);
          w = pool_output_extent(w, config.pool_window, config.pool_window);
        }
      } catch (const Error& e) {
        invalid("conv layer " + std::to_string(i) + ": " + e.what());
      }
      const std::string prefix = "backbone.conv" + std::to_string(i);
      const std::size_t fan_in = channels * config.conv_kernel * config.conv_kernel;
      params.add(prefix + ".kernel",
                 kaiming_uniform({filters, channels, config.conv_kernel, config.conv_kernel}, fan_in, rng),
                 ParamGroup::kBackbone);
      params.add(prefix + ".bias", NdArray({filters}), ParamGroup::kBackbone);
      channels = filters;
    }
    features = channels * h * w;
  }
  if (config.variant == ModelVariant::kFcnn && config.dense_widths.empty()) {
    invalid("fcnn needs at least one backbone layer");
  }
  for (std::size_t i = 0; i < config.dense_widths.size(); ++i) {
    add_dense(params, "backbone.fc" + std::to_string(i), features, config.dense_widths[i],
              ParamGroup::kBackbone, rng);
    features = config.dense_widths[i];
  }
  for (ParamGroup group : {ParamGroup::kTcHead, ParamGroup::kClsHead}) {
    std::size_t in = features;
    std::size_t layer = 0;
    for (; layer < config.head_widths.size(); ++layer) {
      add_dense(params, std::string(head_prefix(group)) + ".fc" + std::to_string(layer), in,
                config.head_widths[layer], group, rng);
      in = config.head_widths[layer];
    }
    add_dense(params, std::string(head_prefix(group)) + ".fc" + std::to_string(layer), in, 1, group, rng);
  }
  return model;
}

NdArray Model::encode_batch(std::span<const Composition> compositions) const {
  const std::size_t n = compositions.size();
  if (n == 0) throw Error(ErrorCode::kEmpty, "empty batch");
  std::vector<double> data;
  data.reserve(n * kFeatureLength);
  for (const auto& c : compositions) {
    const FeatureVector v = encode_vector(c);
    data.insert(data.end(), v.values.begin(), v.values.end());
  }
  if (config_.variant == ModelVariant::kCnn) {
    return NdArray({n, 1, kGridRows, kGridCols}, std::move(data));
  }
  return NdArray({n, kFeatureLength}, std::move(data));
}

NdArray Model::encode_batch(std::span<const LabeledRecord> records,
                            std::span<const std::size_t> indices) const {
  std::vector<Composition> compositions;
  compositions.reserve(indices.size());
  for (auto i : indices) compositions.push_back(records[i].composition);
  return encode_batch(compositions);
}

ForwardOutputs Model::forward(Tape& tape, const NdArray& batch, Heads heads) {
  return run(tape, batch, heads, [&](const std::string& name) { return tape.parameter(params_.get(name)); });
}

ForwardOutputs Model::forward_inference(Tape& tape, const NdArray& batch, Heads heads) const {
  return run(tape, batch, heads, [&](const std::string& name) { return tape.constant(params_.get(name).value); });
}

ForwardOutputs Model::run(Tape& tape, const NdArray& batch, Heads heads, const Binder& bind) const {
  const bool cnn = config_.variant == ModelVariant::kCnn;
  if (cnn) {
    if (batch.rank() != 4) {
      throw Error(ErrorCode::kShapeMismatch, "cnn input must be [N,1,10,12], got " + shape_to_string(batch.shape()));
    }
    require_shape(batch, {batch.dim(0), 1, kGridRows, kGridCols}, "cnn input");
  } else {
    if (batch.rank() != 2) {
      throw Error(ErrorCode::kShapeMismatch, "fcnn input must be [N,120], got " + shape_to_string(batch.shape()));
    }
    require_shape(batch, {batch.dim(0), kFeatureLength}, "fcnn input");
  }

  Var x = tape.constant(batch);
  if (cnn) {
    const Conv2dGeometry geometry{config_.conv_stride, config_.conv_padding};
    for (std::size_t i = 0; i < config_.conv_filters.size(); ++i) {
      const std::string prefix = "backbone.conv" + std::to_string(i);
      x = relu(tape, conv2d(tape, x, bind(prefix + ".kernel"), bind(prefix + ".bias"), geometry));
      if (i + 1 < config_.conv_filters.size()) {
        x = maxpool2d(tape, x, config_.pool_window, config_.pool_window);
      }
    }
    x = flatten(tape, x);
  }
  for (std::size_t i = 0; i < config_.dense_widths.size(); ++i) {
    const std::string prefix = "backbone.fc" + std::to_string(i);
    x = relu(tape, affine(tape, x, bind(prefix + ".weight"), bind(prefix + ".bias")));
  }

  const auto run_head = [&](ParamGroup group) {
    Var h = x;
    const std::string base = head_prefix(group);
    std::size_t layer = 0;
    for (; layer < config_.head_widths.size(); ++layer) {
      const std::string prefix = base + ".fc" + std::to_string(layer);
      h = relu(tape, affine(tape, h, bind(prefix + ".weight"), bind(prefix + ".bias")));
    }
    const std::string prefix = base + ".fc" + std::to_string(layer);
    return affine(tape, h, bind(prefix + ".weight"), bind(prefix + ".bias"));
  };

  ForwardOutputs out;
  if (heads != Heads::kCls) out.tc = run_head(ParamGroup::kTcHead);
  if (heads != Heads::kTc) out.sc_score = sigmoid(tape, run_head(ParamGroup::kClsHead));
  return out;
}

void Model::forward_values(const NdArray& batch, std::vector<double>& tc_raw,
                           std::vector<double>& sc_score) const {
  Tape tape;
  const ForwardOutputs out = forward_inference(tape, batch, Heads::kBoth);
  const auto tc = tape.value(*out.tc).data();
  const auto sc = tape.value(*out.sc_score).data();
  tc_raw.assign(tc.begin(), tc.end());
  sc_score.assign(sc.begin(), sc.end());
}

std::vector<Prediction> Model::predict(std::span<const Composition> compositions) const {
  constexpr std::size_t kChunk = 1024;
  std::vector<Prediction> out(compositions.size());
  std::vector<double> tc_raw, sc_score;
  for (std::size_t start = 0; start < compositions.size(); start += kChunk) {
    const auto chunk = compositions.subspan(start, std::min(kChunk, compositions.size() - start));
    forward_values(encode_batch(chunk), tc_raw, sc_score);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      Prediction& p = out[start + i];
      p.tc_pred = std::max(tc_raw[i], 0.0);
      p.sc_score = sc_score[i];
      p.sc_label = sc_score[i] >= kClassThreshold ? 1 : 0;
    }
  }
  return out;
}

std::vector<Prediction> Model::predict(std::span<const LabeledRecord> records) const {
  std::vector<Composition> compositions;
  compositions.reserve(records.size());
  for (const auto& r : records) compositions.push_back(r.composition);
  return predict(compositions);
}

}  // namespace supertc
