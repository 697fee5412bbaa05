#include "supertc/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "supertc/error.hpp"

namespace supertc {

Var Tape::constant(NdArray value) {
  nodes_.push_back({std::move(value), {}, false, nullptr, {}});
  return {nodes_.size() - 1};
}

Var Tape::variable(NdArray value) {
  NdArray grad(value.shape());
  nodes_.push_back({std::move(value), std::move(grad), true, nullptr, {}});
  return {nodes_.size() - 1};
}

Var Tape::parameter(Parameter& param) {
  Node node{param.value, {}, param.trainable, &param, {}};
  if (node.requires_grad) node.grad = NdArray(param.value.shape());
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

Var Tape::record(NdArray value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_[in.index].requires_grad;
  Node node{std::move(value), {}, needs, nullptr, {}};
  if (needs) {
    node.grad = NdArray(node.value.shape());
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

NdArray& Tape::grad_buffer(Var v) { return nodes_[v.index].grad; }

void Tape::backward(Var loss) {
  if (consumed_) throw Error(ErrorCode::kGraphConsumed, "backward already ran on this tape");
  consumed_ = true;
  Node& root = nodes_.at(loss.index);
  if (root.value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward needs a scalar loss, got " + shape_to_string(root.value.shape()));
  }
  if (!root.requires_grad) return;
  root.grad[0] = 1.0;

  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad) continue;
    if (node.backward) {
      node.backward(*this, i);
    } else if (node.param != nullptr) {
      auto dst = node.param->grad.data();
      auto src = node.grad.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  const std::size_t padded = input + 2 * padding;
  if (stride == 0 || kernel == 0 || padded < kernel || (padded - kernel) % stride != 0) {
    throw Error(ErrorCode::kInvalidGeometry,
                "input " + std::to_string(input) + " with kernel " + std::to_string(kernel) +
                    ", stride " + std::to_string(stride) + ", padding " + std::to_string(padding) +
                    " has no integer output extent");
  }
  return (padded - kernel) / stride + 1;
}

std::size_t pool_output_extent(std::size_t input, std::size_t window, std::size_t stride) {
  return conv_output_extent(input, window, stride, 0);
}

Var affine(Tape& tape, Var x, Var w, Var b) {
  const NdArray& xv = tape.value(x);
  const NdArray& wv = tape.value(w);
  const NdArray& bv = tape.value(b);
  if (xv.rank() != 2 || wv.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch, "affine expects rank-2 input and weight, got " +
                                               shape_to_string(xv.shape()) + " and " +
                                               shape_to_string(wv.shape()));
  }
  const std::size_t n_rows = xv.dim(0), n_in = xv.dim(1), n_out = wv.dim(1);
  require_shape(wv, {n_in, n_out}, "affine weight");
  require_shape(bv, {n_out}, "affine bias");

  NdArray out({n_rows, n_out});
  for (std::size_t n = 0; n < n_rows; ++n) {
    double* row = out.data().data() + n * n_out;
    for (std::size_t o = 0; o < n_out; ++o) row[o] = bv[o];
    for (std::size_t i = 0; i < n_in; ++i) {
      const double xi = xv.at(n, i);
      if (xi == 0.0) continue;
      const double* wrow = wv.data().data() + i * n_out;
      for (std::size_t o = 0; o < n_out; ++o) row[o] += xi * wrow[o];
    }
  }

  return tape.record(std::move(out), {x, w, b}, [x, w, b](Tape& t, std::size_t self) {
    const NdArray& dout = t.grad(Var{self});
    const NdArray& xv = t.value(x);
    const NdArray& wv = t.value(w);
    const std::size_t n_rows = xv.dim(0), n_in = xv.dim(1), n_out = wv.dim(1);
    if (t.requires_grad(x)) {
      NdArray& dx = t.grad_buffer(x);
      for (std::size_t n = 0; n < n_rows; ++n) {
        const double* drow = dout.data().data() + n * n_out;
        for (std::size_t i = 0; i < n_in; ++i) {
          const double* wrow = wv.data().data() + i * n_out;
          double acc = 0.0;
          for (std::size_t o = 0; o < n_out; ++o) acc += drow[o] * wrow[o];
          dx.at(n, i) += acc;
        }
      }
    }
    if (t.requires_grad(w)) {
      NdArray& dw = t.grad_buffer(w);
      for (std::size_t n = 0; n < n_rows; ++n) {
        const double* drow = dout.data().data() + n * n_out;
        for (std::size_t i = 0; i < n_in; ++i) {
          const double xi = xv.at(n, i);
          if (xi == 0.0) continue;
          double* dwrow = dw.data().data() + i * n_out;
          for (std::size_t o = 0; o < n_out; ++o) dwrow[o] += xi * drow[o];
        }
      }
    }
    if (t.requires_grad(b)) {
      NdArray& db = t.grad_buffer(b);
      for (std::size_t n = 0; n < n_rows; ++n) {
        for (std::size_t o = 0; o < n_out; ++o) db[o] += dout.at(n, o);
      }
    }
  });
}

namespace {

struct ConvDims {
  std::size_t n, c, h, w, f, kh, kw, oh, ow, stride, pad;
};

ConvDims conv_dims(const NdArray& xv, const NdArray& kv, const NdArray& bv, Conv2dGeometry g) {
  if (xv.rank() != 4 || kv.rank() != 4) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d expects rank-4 input and kernel, got " +
                                               shape_to_string(xv.shape()) + " and " +
                                               shape_to_string(kv.shape()));
  }
  ConvDims d{};
  d.n = xv.dim(0);
  d.c = xv.dim(1);
  d.h = xv.dim(2);
  d.w = xv.dim(3);
  d.f = kv.dim(0);
  d.kh = kv.dim(2);
  d.kw = kv.dim(3);
  d.stride = g.stride;
  d.pad = g.padding;
  require_shape(kv, {d.f, d.c, d.kh, d.kw}, "conv2d kernel");
  require_shape(bv, {d.f}, "conv2d bias");
  d.oh = conv_output_extent(d.h, d.kh, g.stride, g.padding);
  d.ow = conv_output_extent(d.w, d.kw, g.stride, g.padding);
  return d;
}

// Unfolds one sample into columns: row (c, ky, kx), column (oy, ox).
// Taps falling in the zero padding stay 0.
void im2col(const ConvDims& d, const double* x, std::vector<double>& col) {
  const std::size_t p = d.oh * d.ow;
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t c = 0; c < d.c; ++c) {
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        double* row = col.data() + ((c * d.kh + ky) * d.kw + kx) * p;
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) - static_cast<std::ptrdiff_t>(d.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          const double* xrow = x + (c * d.h + static_cast<std::size_t>(iy)) * d.w;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) - static_cast<std::ptrdiff_t>(d.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
            row[oy * d.ow + ox] = xrow[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back onto one sample.
void col2im(const ConvDims& d, const std::vector<double>& col, double* dx) {
  const std::size_t p = d.oh * d.ow;
  for (std::size_t c = 0; c < d.c; ++c) {
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        const double* row = col.data() + ((c * d.kh + ky) * d.kw + kx) * p;
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) - static_cast<std::ptrdiff_t>(d.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          double* xrow = dx + (c * d.h + static_cast<std::size_t>(iy)) * d.w;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) - static_cast<std::ptrdiff_t>(d.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
            xrow[ix] += row[oy * d.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Tape& tape, Var x, Var k, Var b, Conv2dGeometry geometry) {
  const NdArray& xv = tape.value(x);
  const NdArray& kv = tape.value(k);
  const NdArray& bv = tape.value(b);
  const ConvDims d = conv_dims(xv, kv, bv, geometry);
  const std::size_t p = d.oh * d.ow;
  const std::size_t taps = d.c * d.kh * d.kw;
  const std::size_t x_stride = d.c * d.h * d.w;

  // Kernel viewed as [F, taps]; per sample out[F, P] = K . col + b.
  NdArray out({d.n, d.f, d.oh, d.ow});
  std::vector<double> col(taps * p);
  for (std::size_t n = 0; n < d.n; ++n) {
    im2col(d, xv.data().data() + n * x_stride, col);
    double* o = out.data().data() + n * d.f * p;
    for (std::size_t f = 0; f < d.f; ++f) {
      double* orow = o + f * p;
      std::fill(orow, orow + p, bv[f]);
      const double* krow = kv.data().data() + f * taps;
      for (std::size_t t = 0; t < taps; ++t) {
        const double kval = krow[t];
        const double* crow = col.data() + t * p;
        for (std::size_t j = 0; j < p; ++j) orow[j] += kval * crow[j];
      }
    }
  }

  return tape.record(std::move(out), {x, k, b}, [x, k, b, d](Tape& t, std::size_t self) {
    const NdArray& dout = t.grad(Var{self});
    const NdArray& xv = t.value(x);
    const NdArray& kv = t.value(k);
    const std::size_t p = d.oh * d.ow;
    const std::size_t taps = d.c * d.kh * d.kw;
    const std::size_t x_stride = d.c * d.h * d.w;
    if (t.requires_grad(b)) {
      NdArray& db = t.grad_buffer(b);
      for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t f = 0; f < d.f; ++f) {
          const double* g = dout.data().data() + (n * d.f + f) * p;
          for (std::size_t j = 0; j < p; ++j) db[f] += g[j];
        }
    }
    const bool want_x = t.requires_grad(x);
    const bool want_k = t.requires_grad(k);
    if (!want_x && !want_k) return;
    NdArray* dx = want_x ? &t.grad_buffer(x) : nullptr;
    NdArray* dk = want_k ? &t.grad_buffer(k) : nullptr;
    std::vector<double> col(taps * p);
    std::vector<double> dcol(want_x ? taps * p : 0);
    for (std::size_t n = 0; n < d.n; ++n) {
      const double* g = dout.data().data() + n * d.f * p;
      if (dk) {
        im2col(d, xv.data().data() + n * x_stride, col);
        for (std::size_t f = 0; f < d.f; ++f) {
          const double* grow = g + f * p;
          double* dkrow = dk->data().data() + f * taps;
          for (std::size_t tap = 0; tap < taps; ++tap) {
            const double* crow = col.data() + tap * p;
            double acc = 0.0;
            for (std::size_t j = 0; j < p; ++j) acc += grow[j] * crow[j];
            dkrow[tap] += acc;
          }
        }
      }
      if (dx) {
        std::fill(dcol.begin(), dcol.end(), 0.0);
        for (std::size_t f = 0; f < d.f; ++f) {
          const double* grow = g + f * p;
          const double* krow = kv.data().data() + f * taps;
          for (std::size_t tap = 0; tap < taps; ++tap) {
            const double kval = krow[tap];
            double* drow = dcol.data() + tap * p;
            for (std::size_t j = 0; j < p; ++j) drow[j] += kval * grow[j];
          }
        }
        col2im(d, dcol, dx->data().data() + n * x_stride);
      }
    }
  });
}

Var maxpool2d(Tape& tape, Var x, std::size_t window, std::size_t stride) {
  const NdArray& xv = tape.value(x);
  if (xv.rank() != 4) {
    throw Error(ErrorCode::kShapeMismatch,
                "maxpool2d expects a rank-4 input, got " + shape_to_string(xv.shape()));
  }
  const std::size_t n_batch = xv.dim(0), n_chan = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t oh = pool_output_extent(h, window, stride);
  const std::size_t ow = pool_output_extent(w, window, stride);

  NdArray out({n_batch, n_chan, oh, ow});
  std::vector<std::size_t> argmax(out.size());
  std::size_t o = 0;
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t c = 0; c < n_chan; ++c) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
          std::size_t best = ((n * n_chan + c) * h + oy * stride) * w + ox * stride;
          for (std::size_t ky = 0; ky < window; ++ky) {
            for (std::size_t kx = 0; kx < window; ++kx) {
              const std::size_t idx = ((n * n_chan + c) * h + oy * stride + ky) * w + ox * stride + kx;
              if (xv[idx] > xv[best]) best = idx;
            }
          }
          argmax[o] = best;
          out[o] = xv[best];
        }
      }
    }
  }

  return tape.record(std::move(out), {x}, [x, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const NdArray& dout = t.grad(Var{self});
    NdArray& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dout[i];
  });
}

Var relu(Tape& tape, Var x) {
  NdArray out = tape.value(x);
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return tape.record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const NdArray& dout = t.grad(Var{self});
    const NdArray& xv = t.value(x);
    NdArray& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += dout[i];
    }
  });
}

Var sigmoid(Tape& tape, Var x) {
  NdArray out = tape.value(x);
  for (auto& v : out.data()) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  return tape.record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const NdArray& dout = t.grad(Var{self});
    const NdArray& y = t.value(Var{self});
    NdArray& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dout[i] * y[i] * (1.0 - y[i]);
  });
}

Var flatten(Tape& tape, Var x) {
  const NdArray& xv = tape.value(x);
  const std::size_t rows = xv.dim(0);
  NdArray out = xv.reshaped({rows, xv.size() / rows});
  return tape.record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const NdArray& dout = t.grad(Var{self});
    NdArray& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dout[i];
  });
}

Var mse_loss(Tape& tape, Var pred, Var target) {
  const NdArray& pv = tape.value(pred);
  const NdArray& tv = tape.value(target);
  require_shape(tv, pv.shape(), "mse target");
  double sum = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double diff = pv[i] - tv[i];
    sum += diff * diff;
  }
  const double n = static_cast<double>(pv.size());
  return tape.record(NdArray::scalar(sum / n), {pred, target}, [pred, target, n](Tape& t, std::size_t self) {
    const double upstream = t.grad(Var{self})[0];
    const NdArray& pv = t.value(pred);
    const NdArray& tv = t.value(target);
    if (t.requires_grad(pred)) {
      NdArray& dp = t.grad_buffer(pred);
      for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += upstream * 2.0 * (pv[i] - tv[i]) / n;
    }
    if (t.requires_grad(target)) {
      NdArray& dt = t.grad_buffer(target);
      for (std::size_t i = 0; i < dt.size(); ++i) dt[i] -= upstream * 2.0 * (pv[i] - tv[i]) / n;
    }
  });
}

}  // namespace supertc
