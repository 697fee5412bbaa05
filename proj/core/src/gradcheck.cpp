#include "supertc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "supertc/random.hpp"

namespace supertc {
namespace {

using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

NdArray random_array(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  NdArray out(std::move(shape));
  for (auto& v : out.data()) v = rng.uniform(lo, hi);
  return out;
}

// Values bounded away from the ReLU kink.
NdArray random_away_from_zero(Shape shape, Rng& rng) {
  NdArray out(std::move(shape));
  for (auto& v : out.data()) {
    const double mag = rng.uniform(0.05, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return out;
}

GradcheckCase check_leaves(std::string name, std::vector<NdArray> leaves, const LossFn& loss_fn,
                           bool corrupt) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& leaf : leaves) vars.push_back(tape.variable(leaf));
  tape.backward(loss_fn(tape, vars));

  const auto loss_at = [&](std::vector<NdArray>& values) {
    Tape t;
    std::vector<Var> vs;
    for (const auto& v : values) vs.push_back(t.constant(v));
    return t.value(loss_fn(t, vs))[0];
  };

  GradcheckCase result{std::move(name), 0.0, 0};
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    NdArray analytic = tape.grad(vars[l]);
    if (corrupt && l == 0) analytic[0] += 1e-2 * std::max(1.0, std::abs(analytic[0]));
    for (std::size_t i = 0; i < leaves[l].size(); ++i) {
      const double original = leaves[l][i];
      leaves[l][i] = original + kGradcheckStep;
      const double up = loss_at(leaves);
      leaves[l][i] = original - kGradcheckStep;
      const double down = loss_at(leaves);
      leaves[l][i] = original;
      const double numeric = (up - down) / (2.0 * kGradcheckStep);
      result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic[i], numeric));
      ++result.elements;
    }
  }
  return result;
}

GradcheckCase check_model(std::string name, Model model, const NdArray& batch, Heads head,
                          const NdArray& target, bool corrupt) {
  const auto pick = [head](const ForwardOutputs& out) { return head == Heads::kTc ? *out.tc : *out.sc_score; };

  ParamStore& params = model.params();
  for (ParamGroup g : {ParamGroup::kBackbone, ParamGroup::kTcHead, ParamGroup::kClsHead}) params.set_trainable(g, true);
  params.zero_grad();
  {
    Tape tape;
    const Var pred = pick(model.forward(tape, batch, head));
    tape.backward(mse_loss(tape, pred, tape.constant(target)));
  }

  const auto loss_value = [&] {
    Tape tape;
    const Var pred = pick(model.forward_inference(tape, batch, head));
    return tape.value(mse_loss(tape, pred, tape.constant(target)))[0];
  };

  GradcheckCase result{std::move(name), 0.0, 0};
  bool corrupted = false;
  for (auto& p : params.entries()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double analytic = p.grad[i];
      if (corrupt && !corrupted) {
        analytic += 1e-2 * std::max(1.0, std::abs(analytic));
        corrupted = true;
      }
      const double original = p.value[i];
      p.value[i] = original + kGradcheckStep;
      const double up = loss_value();
      p.value[i] = original - kGradcheckStep;
      const double down = loss_value();
      p.value[i] = original;
      const double numeric = (up - down) / (2.0 * kGradcheckStep);
      result.max_rel_err = std::max(result.max_rel_err, relative_error(analytic, numeric));
      ++result.elements;
    }
  }
  return result;
}

Model tiny_model(ModelVariant variant, std::uint64_t seed) {
  ModelConfig config = ModelConfig::defaults(variant);
  config.seed = seed;
  config.head_widths = {3};
  if (variant == ModelVariant::kCnn) {
    config.conv_filters = {2, 3};
    config.dense_widths = {4};
  } else {
    config.dense_widths = {6, 5};
  }
  Model model = Model::build(config);
  // Zero biases can place pre-activations exactly on the ReLU kink (a fully
  // dead layer feeds exact zeros forward), where finite differences are
  // undefined. Small positive biases move them off it.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& p : model.params().entries()) {
    if (p.value.rank() == 1) {
      for (auto& v : p.value.data()) v = rng.uniform(0.01, 0.1);
    }
  }
  return model;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
  return std::abs(analytic - numeric) / scale;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  Rng rng(options.seed);
  const bool corrupt = options.corrupt_gradient;
  const auto dim = [&rng](std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); };
  GradcheckReport report;

  {
    const std::size_t n = dim(1, 4), in = dim(1, 6), out = dim(1, 6);
    NdArray target = random_array({n, out}, rng);
    report.cases.push_back(check_leaves(
        "affine", {random_array({n, in}, rng), random_array({in, out}, rng), random_array({out}, rng)},
        [target](Tape& t, const std::vector<Var>& v) {
          return mse_loss(t, affine(t, v[0], v[1], v[2]), t.constant(target));
        },
        corrupt));
  }
  {
    const std::size_t n = dim(1, 2), c = dim(1, 3), f = dim(1, 3), kernel = dim(1, 3);
    const std::size_t stride = dim(1, 2), padding = dim(0, 1);
    // Spatial size chosen so the geometry tiles exactly: (h + 2p - k) % s == 0.
    const std::size_t span = kernel + stride * dim(1, 3);
    const std::size_t h = span > 2 * padding ? span - 2 * padding : span + stride * padding;
    const std::size_t w = h;
    const Conv2dGeometry g{stride, padding};
    const std::size_t oh = conv_output_extent(h, kernel, stride, padding);
    const std::size_t ow = conv_output_extent(w, kernel, stride, padding);
    NdArray target = random_array({n, f, oh, ow}, rng);
    report.cases.push_back(check_leaves(
        "conv2d",
        {random_array({n, c, h, w}, rng), random_array({f, c, kernel, kernel}, rng), random_array({f}, rng)},
        [target, g](Tape& t, const std::vector<Var>& v) {
          return mse_loss(t, conv2d(t, v[0], v[1], v[2], g), t.constant(target));
        },
        corrupt));
  }
  {
    const std::size_t n = dim(1, 2), c = dim(1, 2), window = dim(1, 3), steps = dim(1, 2);
    const std::size_t h = window * (steps + 1), w = window * (steps + 1);
    NdArray target = random_array({n, c, steps + 1, steps + 1}, rng);
    report.cases.push_back(check_leaves(
        "maxpool2d", {random_array({n, c, h, w}, rng)},
        [target, window](Tape& t, const std::vector<Var>& v) {
          return mse_loss(t, maxpool2d(t, v[0], window, window), t.constant(target));
        },
        corrupt));
  }
  {
    const Shape shape{dim(1, 4), dim(1, 6)};
    NdArray target = random_array(shape, rng);
    report.cases.push_back(check_leaves(
        "relu", {random_away_from_zero(shape, rng)},
        [target](Tape& t, const std::vector<Var>& v) { return mse_loss(t, relu(t, v[0]), t.constant(target)); },
        corrupt));
  }
  {
    const Shape shape{dim(1, 4), dim(1, 6)};
    NdArray target = random_array(shape, rng, 0.0, 1.0);
    report.cases.push_back(check_leaves(
        "sigmoid", {random_array(shape, rng, -4.0, 4.0)},
        [target](Tape& t, const std::vector<Var>& v) { return mse_loss(t, sigmoid(t, v[0]), t.constant(target)); },
        corrupt));
  }
  {
    const Shape shape{dim(1, 4), dim(1, 6)};
    report.cases.push_back(check_leaves(
        "mse", {random_array(shape, rng), random_array(shape, rng)},
        [](Tape& t, const std::vector<Var>& v) { return mse_loss(t, v[0], v[1]); }, corrupt));
  }
  {
    // conv -> pool -> relu -> affine
    NdArray target = random_array({2, 3}, rng);
    report.cases.push_back(check_leaves(
        "composed",
        {random_array({2, 1, 4, 4}, rng), random_array({2, 1, 3, 3}, rng), random_array({2}, rng),
         random_array({8, 3}, rng), random_array({3}, rng)},
        [target](Tape& t, const std::vector<Var>& v) {
          Var h = conv2d(t, v[0], v[1], v[2], Conv2dGeometry{1, 1});
          h = relu(t, maxpool2d(t, h, 2, 2));
          return mse_loss(t, affine(t, flatten(t, h), v[3], v[4]), t.constant(target));
        },
        corrupt));
  }
  {
    const Model model = tiny_model(options.variant, options.seed);
    const std::size_t n = 3;
    NdArray batch = options.variant == ModelVariant::kCnn ? random_array({n, 1, kGridRows, kGridCols}, rng, 0.0, 1.0)
                                                          : random_array({n, kFeatureLength}, rng, 0.0, 1.0);
    const std::string prefix = std::string("model_") + std::string(model_variant_name(options.variant));
    report.cases.push_back(check_model(prefix + "_tc", model, batch, Heads::kTc,
                                       random_array({n, 1}, rng, 0.0, 2.0), corrupt));
    report.cases.push_back(check_model(prefix + "_cls", model, batch, Heads::kCls,
                                       random_array({n, 1}, rng, 0.0, 1.0), corrupt));
  }

  for (const auto& c : report.cases) report.max_rel_err = std::max(report.max_rel_err, c.max_rel_err);
  return report;
}

}  // namespace supertc
