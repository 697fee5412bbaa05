#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "supertc/autograd.hpp"
#include "supertc/error.hpp"
#include "supertc/optimizer.hpp"
#include "supertc/params.hpp"
#include "support/oracles.hpp"

namespace supertc {
namespace {

using testing::finite_difference;
using testing::naive_conv2d;
using testing::naive_maxpool;
using testing::random_values;
using testing::rel_err;
using testing::Tensor4;

NdArray arr(Shape shape, std::vector<double> data) { return NdArray(std::move(shape), std::move(data)); }

std::vector<double> to_vec(const NdArray& a) { return {a.data().begin(), a.data().end()}; }

NdArray from_tensor(const Tensor4& t) { return arr({t.n, t.c, t.h, t.w}, t.v); }

TEST(NdArrayTest, ShapeInvariant) {
  EXPECT_THROW(arr({2, 2}, {1, 2, 3}), Error);
  EXPECT_THROW(NdArray(Shape{0, 2}), Error);
  const NdArray a({2, 3}, 1.5);
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(a.reshaped({3, 2}).shape(), (Shape{3, 2}));
  EXPECT_THROW(a.reshaped({4, 2}), Error);
}

TEST(AffineTest, IdentityWeight) {
  Tape t;
  const Var y = affine(t, t.constant(arr({1, 2}, {1, 2})), t.constant(arr({2, 2}, {1, 0, 0, 1})),
                       t.constant(arr({2}, {0, 0})));
  EXPECT_EQ(to_vec(t.value(y)), (std::vector<double>{1, 2}));
  EXPECT_EQ(t.value(y).shape(), (Shape{1, 2}));
}

TEST(AffineTest, HandArithmetic) {
  Tape t;
  const Var y = affine(t, t.constant(arr({1, 2}, {1, 1})), t.constant(arr({2, 1}, {2, 3})),
                       t.constant(arr({1}, {1})));
  EXPECT_EQ(to_vec(t.value(y)), (std::vector<double>{6}));
}

TEST(AffineTest, BiasGradientOfSumIsOnes) {
  std::mt19937_64 rng(1);
  Tape t;
  const Var x = t.constant(arr({3, 2}, random_values(6, rng)));
  const Var w = t.variable(arr({2, 4}, random_values(8, rng)));
  const Var b = t.variable(arr({4}, random_values(4, rng)));
  const Var y = affine(t, x, w, b);
  // sum node: pushes its gradient unchanged to every entry of y
  const Var s = t.record(NdArray::scalar(0.0), {y}, [y](Tape& tape, std::size_t self) {
    const double g = tape.grad(Var{self})[0];
    auto& gy = tape.grad_buffer(y);
    for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += g;
  });
  t.backward(s);
  for (double g : t.grad(b).data()) EXPECT_EQ(g, 3.0);  // three rows each contribute 1
}

TEST(AffineTest, ShapeMismatch) {
  Tape t;
  try {
    affine(t, t.constant(NdArray({1, 3})), t.constant(NdArray({2, 2})), t.constant(NdArray({2})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Conv2dTest, WindowSum) {
  Tape t;
  const Var y = conv2d(t, t.constant(NdArray({1, 1, 3, 3}, 1.0)), t.constant(NdArray({1, 1, 3, 3}, 1.0)),
                       t.constant(NdArray({1})), {1, 0});
  EXPECT_EQ(t.value(y).shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(t.value(y)[0], 9.0);
}

TEST(Conv2dTest, CenterKernelReproducesInput) {
  std::mt19937_64 rng(2);
  const NdArray x = arr({2, 1, 4, 5}, random_values(40, rng));
  NdArray k({1, 1, 3, 3});
  k.at(0, 0, 1, 1) = 1.0;
  Tape t;
  const Var y = conv2d(t, t.constant(x), t.constant(k), t.constant(NdArray({1})), {1, 1});
  EXPECT_EQ(t.value(y), x);
}

TEST(Conv2dTest, MatchesOracleOnFixedCase) {
  std::mt19937_64 rng(3);
  const Tensor4 x{1, 1, 5, 5, random_values(25, rng)};
  const Tensor4 k{2, 1, 3, 3, random_values(18, rng)};
  const std::vector<double> b{0.0, 0.0};
  const Tensor4 expected = naive_conv2d(x, k, b, 1, 0);
  Tape t;
  const Var y = conv2d(t, t.constant(from_tensor(x)), t.constant(from_tensor(k)), t.constant(arr({2}, b)), {1, 0});
  ASSERT_EQ(t.value(y).shape(), (Shape{1, 2, 3, 3}));
  for (std::size_t i = 0; i < expected.v.size(); ++i) EXPECT_NEAR(t.value(y)[i], expected.v[i], 1e-12);
}

TEST(Conv2dTest, InvalidGeometry) {
  EXPECT_EQ(conv_output_extent(10, 3, 1, 1), 10u);
  EXPECT_EQ(conv_output_extent(5, 3, 2, 0), 2u);
  try {
    conv_output_extent(6, 3, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidGeometry);
  }
  EXPECT_THROW(conv_output_extent(2, 5, 1, 0), Error);
  Tape t;
  EXPECT_THROW(conv2d(t, t.constant(NdArray({1, 1, 6, 6})), t.constant(NdArray({1, 1, 3, 3})),
                      t.constant(NdArray({1})), {2, 0}),
               Error);
  EXPECT_THROW(conv2d(t, t.constant(NdArray({1, 2, 3, 3})), t.constant(NdArray({1, 1, 3, 3})),
                      t.constant(NdArray({1})), {1, 0}),
               Error);
}

// Random geometries against the direct-summation oracle.
TEST(Conv2dProperty, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> small(1, 3);
  int checked = 0;
  while (checked < 100) {
    const std::size_t n = small(rng), c = small(rng), f = small(rng);
    const std::size_t kh = small(rng), kw = small(rng), stride = small(rng), pad = small(rng) - 1;
    const std::size_t h = kh + small(rng) * stride + 1, w = kw + small(rng) * stride + 1;
    if ((h + 2 * pad - kh) % stride != 0 || (w + 2 * pad - kw) % stride != 0) continue;
    const Tensor4 x{n, c, h, w, random_values(n * c * h * w, rng)};
    const Tensor4 k{f, c, kh, kw, random_values(f * c * kh * kw, rng)};
    const std::vector<double> b = random_values(f, rng);
    const Tensor4 expected = naive_conv2d(x, k, b, stride, pad);
    Tape t;
    const Var y = conv2d(t, t.constant(from_tensor(x)), t.constant(from_tensor(k)), t.constant(arr({f}, b)),
                         {stride, pad});
    ASSERT_EQ(t.value(y).shape(), (Shape{expected.n, expected.c, expected.h, expected.w}));
    for (std::size_t i = 0; i < expected.v.size(); ++i) ASSERT_NEAR(t.value(y)[i], expected.v[i], 1e-12);
    ++checked;
  }
}

TEST(MaxPoolTest, SingleWindow) {
  Tape t;
  const Var y = maxpool2d(t, t.constant(arr({1, 1, 2, 2}, {1, 2, 3, 4})), 2, 2);
  EXPECT_EQ(to_vec(t.value(y)), (std::vector<double>{4}));
}

TEST(MaxPoolTest, TiesRouteGradientToFirstCell) {
  Tape t;
  const Var x = t.variable(NdArray({1, 1, 4, 4}, 0.7));
  const Var y = maxpool2d(t, x, 2, 2);
  for (double v : t.value(y).data()) EXPECT_EQ(v, 0.7);
  const Var loss = mse_loss(t, y, t.constant(NdArray({1, 1, 2, 2}, 0.0)));
  t.backward(loss);
  const NdArray& g = t.grad(x);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      if (r % 2 == 0 && c % 2 == 0)
        EXPECT_DOUBLE_EQ(g.at(0, 0, r, c), 2 * 0.7 / 4) << r << "," << c;
      else
        EXPECT_EQ(g.at(0, 0, r, c), 0.0) << r << "," << c;
    }
}

TEST(MaxPoolTest, InvalidGeometry) {
  EXPECT_EQ(pool_output_extent(10, 2, 2), 5u);
  EXPECT_THROW(pool_output_extent(5, 2, 2), Error);
  EXPECT_THROW(pool_output_extent(1, 2, 2), Error);
}

TEST(MaxPoolProperty, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> small(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t window = small(rng), stride = small(rng);
    const std::size_t h = window + stride * (small(rng) - 1), w = window + stride * (small(rng) - 1);
    const Tensor4 x{small(rng), small(rng), h, w, {}};
    Tensor4 xx = x;
    xx.v = random_values(x.n * x.c * h * w, rng);
    const Tensor4 expected = naive_maxpool(xx, window, stride);
    Tape t;
    const Var y = maxpool2d(t, t.constant(from_tensor(xx)), window, stride);
    ASSERT_EQ(t.value(y).size(), expected.v.size());
    for (std::size_t i = 0; i < expected.v.size(); ++i) ASSERT_NEAR(t.value(y)[i], expected.v[i], 1e-12);
  }
}

TEST(ActivationTest, Relu) {
  Tape t;
  const Var x = t.variable(arr({3}, {-1, 0, 2}));
  const Var y = relu(t, x);
  EXPECT_EQ(to_vec(t.value(y)), (std::vector<double>{0, 0, 2}));
  t.backward(mse_loss(t, y, t.constant(arr({3}, {-1, -1, 0}))));
  // d/dx at 0 is 0 by convention; only the positive entry carries gradient.
  EXPECT_EQ(t.grad(x)[0], 0.0);
  EXPECT_EQ(t.grad(x)[1], 0.0);
  EXPECT_DOUBLE_EQ(t.grad(x)[2], 2.0 * 2.0 / 3.0);
}

TEST(ActivationTest, SigmoidValuesAndRange) {
  Tape t;
  const Var y = sigmoid(t, t.constant(arr({7}, {0, 1, -1, 40, -40, 800, -800})));
  const NdArray& v = t.value(y);
  EXPECT_EQ(v[0], 0.5);
  EXPECT_NEAR(v[1] + v[2], 1.0, 1e-15);
  for (double s : v.data()) {
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  std::mt19937_64 rng(6);
  Tape t2;
  const Var z = sigmoid(t2, t2.constant(arr({1000}, random_values(1000, rng, -30, 30))));
  for (double s : t2.value(z).data()) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(MseTest, Values) {
  Tape t;
  EXPECT_EQ(t.value(mse_loss(t, t.constant(arr({2}, {1, 2})), t.constant(arr({2}, {1, 2}))))[0], 0.0);
  EXPECT_EQ(t.value(mse_loss(t, t.constant(arr({1}, {2})), t.constant(arr({1}, {0}))))[0], 4.0);
  EXPECT_THROW(mse_loss(t, t.constant(NdArray({2})), t.constant(NdArray({3}))), Error);
}

TEST(MseTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const std::vector<double> target = random_values(6, rng);
  const std::vector<double> pred0 = random_values(6, rng);
  const auto f = [&](const std::vector<double>& p) {
    Tape t;
    return t.value(mse_loss(t, t.constant(arr({2, 3}, p)), t.constant(arr({2, 3}, target))))[0];
  };
  Tape t;
  const Var p = t.variable(arr({2, 3}, pred0));
  t.backward(mse_loss(t, p, t.constant(arr({2, 3}, target))));
  const auto numeric = finite_difference(f, pred0);
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    EXPECT_DOUBLE_EQ(t.grad(p)[i], 2.0 * (pred0[i] - target[i]) / 6.0);
    EXPECT_LT(rel_err(t.grad(p)[i], numeric[i]), 1e-6);
  }
}

TEST(BackwardTest, AffineMseMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  const auto x = random_values(4 * 3, rng);
  const auto y = random_values(4 * 2, rng);
  const auto w0 = random_values(3 * 2, rng);
  const auto b0 = random_values(2, rng);
  const auto loss_of = [&](const std::vector<double>& w, const std::vector<double>& b) {
    Tape t;
    return t.value(mse_loss(t, affine(t, t.constant(arr({4, 3}, x)), t.constant(arr({3, 2}, w)),
                                      t.constant(arr({2}, b))),
                            t.constant(arr({4, 2}, y))))[0];
  };
  Tape t;
  const Var w = t.variable(arr({3, 2}, w0));
  const Var b = t.variable(arr({2}, b0));
  t.backward(mse_loss(t, affine(t, t.constant(arr({4, 3}, x)), w, b), t.constant(arr({4, 2}, y))));
  const auto gw = finite_difference([&](const auto& v) { return loss_of(v, b0); }, w0);
  const auto gb = finite_difference([&](const auto& v) { return loss_of(w0, v); }, b0);
  for (std::size_t i = 0; i < gw.size(); ++i) EXPECT_LT(rel_err(t.grad(w)[i], gw[i]), 1e-6);
  for (std::size_t i = 0; i < gb.size(); ++i) EXPECT_LT(rel_err(t.grad(b)[i], gb[i]), 1e-6);
}

TEST(BackwardTest, ComposedPipelineMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const auto x = random_values(2 * 1 * 4 * 4, rng);
  const auto k0 = random_values(2 * 1 * 3 * 3, rng);
  const auto kb = random_values(2, rng, 0.1, 0.3);
  const auto w0 = random_values(2 * 2 * 2 * 3, rng);
  const auto wb = random_values(3, rng);
  const auto y = random_values(2 * 3, rng);
  const auto loss_of = [&](Tape& t, Var k, Var w) {
    const Var c = conv2d(t, t.constant(arr({2, 1, 4, 4}, x)), k, t.constant(arr({2}, kb)), {1, 1});
    const Var h = flatten(t, relu(t, maxpool2d(t, c, 2, 2)));
    return mse_loss(t, affine(t, h, w, t.constant(arr({3}, wb))), t.constant(arr({2, 3}, y)));
  };
  Tape t;
  const Var k = t.variable(arr({2, 1, 3, 3}, k0));
  const Var w = t.variable(arr({8, 3}, w0));
  t.backward(loss_of(t, k, w));
  const auto gk = finite_difference(
      [&](const auto& v) {
        Tape s;
        return s.value(loss_of(s, s.constant(arr({2, 1, 3, 3}, v)), s.constant(arr({8, 3}, w0))))[0];
      },
      k0);
  const auto gw = finite_difference(
      [&](const auto& v) {
        Tape s;
        return s.value(loss_of(s, s.constant(arr({2, 1, 3, 3}, k0)), s.constant(arr({8, 3}, v))))[0];
      },
      w0);
  for (std::size_t i = 0; i < gk.size(); ++i) EXPECT_LT(rel_err(t.grad(k)[i], gk[i]), 1e-4) << i;
  for (std::size_t i = 0; i < gw.size(); ++i) EXPECT_LT(rel_err(t.grad(w)[i], gw[i]), 1e-4) << i;
}

TEST(BackwardTest, FrozenParametersReceiveNoGradient) {
  ParamStore store;
  Parameter& w = store.add("w", NdArray({2, 1}, 0.5), ParamGroup::kBackbone);
  Parameter& b = store.add("b", NdArray({1}, 0.1), ParamGroup::kTcHead);
  store.set_trainable(ParamGroup::kBackbone, false);
  Tape t;
  const Var y = affine(t, t.constant(arr({1, 2}, {1, 2})), t.parameter(w), t.parameter(b));
  t.backward(mse_loss(t, y, t.constant(arr({1, 1}, {0}))));
  for (double g : w.grad.data()) EXPECT_EQ(g, 0.0);
  EXPECT_NE(b.grad[0], 0.0);
}

TEST(BackwardTest, GradientsAccumulateAcrossTapes) {
  ParamStore store;
  Parameter& b = store.add("b", NdArray({1}, 1.0), ParamGroup::kTcHead);
  for (int i = 0; i < 2; ++i) {
    Tape t;
    t.backward(mse_loss(t, t.parameter(b), t.constant(arr({1}, {0}))));
  }
  EXPECT_EQ(b.grad[0], 4.0);
}

TEST(BackwardTest, SecondBackwardIsGraphConsumed) {
  Tape t;
  const Var loss = mse_loss(t, t.variable(arr({1}, {1})), t.constant(arr({1}, {0})));
  t.backward(loss);
  try {
    t.backward(loss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGraphConsumed);
  }
}

TEST(BackwardTest, NonScalarLossRejected) {
  Tape t;
  EXPECT_THROW(t.backward(t.variable(NdArray({2}))), Error);
}

TEST(BackwardTest, DeterministicAcrossRuns) {
  const auto run = [] {
    std::mt19937_64 rng(10);
    Tape t;
    const Var x = t.constant(arr({2, 1, 4, 4}, random_values(32, rng)));
    const Var k = t.variable(arr({3, 1, 3, 3}, random_values(27, rng)));
    const Var y = flatten(t, maxpool2d(t, relu(t, conv2d(t, x, k, t.constant(NdArray({3})), {1, 1})), 2, 2));
    t.backward(mse_loss(t, y, t.constant(NdArray({2, 12}, 0.25))));
    return to_vec(t.grad(k));
  };
  EXPECT_EQ(run(), run());
}

TEST(OptimizerTest, ZeroGradientLeavesParametersUnchanged) {
  ParamStore store;
  Parameter& p = store.add("p", arr({3}, {1, -2, 3}), ParamGroup::kBackbone);
  Optimizer opt;
  for (int i = 0; i < 10; ++i) opt.step(store, 1e-2);
  EXPECT_EQ(to_vec(p.value), (std::vector<double>{1, -2, 3}));
}

TEST(OptimizerTest, ConstantPositiveGradientDecreasesMonotonically) {
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    ParamStore store;
    Parameter& p = store.add("p", NdArray::scalar(1.0), ParamGroup::kBackbone);
    Optimizer opt(kind);
    double previous = p.value[0];
    for (int i = 0; i < 200; ++i) {
      p.grad[0] = 0.3;
      opt.step(store, 1e-3);
      EXPECT_LT(p.value[0], previous);
      EXPECT_EQ(p.grad[0], 0.0);
      previous = p.value[0];
    }
  }
}

TEST(OptimizerTest, AdamFirstStepMovesByLearningRate) {
  ParamStore store;
  Parameter& p = store.add("p", NdArray::scalar(1.0), ParamGroup::kBackbone);
  p.grad[0] = 5.0;
  Optimizer opt;
  opt.step(store, 1e-4);
  // Bias-corrected first step is lr * g / (|g| + eps).
  EXPECT_NEAR(p.value[0], 1.0 - 1e-4, 1e-11);
}

TEST(OptimizerTest, FrozenGroupBitIdentical) {
  std::mt19937_64 rng(11);
  ParamStore store;
  Parameter& frozen = store.add("frozen", arr({4}, random_values(4, rng)), ParamGroup::kBackbone);
  Parameter& live = store.add("live", arr({4}, random_values(4, rng)), ParamGroup::kClsHead);
  store.set_trainable(ParamGroup::kBackbone, false);
  const std::string before = store.group_digest(ParamGroup::kBackbone);
  const NdArray frozen_before = frozen.value;
  const NdArray live_before = live.value;
  Optimizer opt;
  for (int i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      frozen.grad[j] = 1.0;
      live.grad[j] = 1.0;
    }
    opt.step(store, 1e-2);
  }
  EXPECT_EQ(frozen.value, frozen_before);
  EXPECT_EQ(store.group_digest(ParamGroup::kBackbone), before);
  EXPECT_NE(live.value, live_before);
  for (double g : frozen.grad.data()) EXPECT_EQ(g, 0.0);
}

TEST(ParamStoreTest, DuplicateNamesRejected) {
  ParamStore store;
  store.add("a", NdArray({1}), ParamGroup::kBackbone);
  EXPECT_THROW(store.add("a", NdArray({1}), ParamGroup::kBackbone), Error);
  EXPECT_EQ(store.get("a").grad.shape(), (Shape{1}));
  EXPECT_EQ(store.find("b"), nullptr);
}

TEST(ParamStoreTest, DigestTracksValues) {
  ParamStore store;
  Parameter& a = store.add("a", NdArray({2}, 1.0), ParamGroup::kTcHead);
  const std::string d = store.group_digest(ParamGroup::kTcHead);
  EXPECT_EQ(d.size(), 64u);
  a.grad[0] = 3.0;  // gradients do not count
  EXPECT_EQ(store.group_digest(ParamGroup::kTcHead), d);
  a.value[1] = std::nextafter(1.0, 2.0);
  EXPECT_NE(store.group_digest(ParamGroup::kTcHead), d);
}

}  // namespace
}  // namespace supertc
