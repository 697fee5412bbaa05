#pragma once

// Reverse-mode differentiation over a linear tape. Each op appends a node
// holding its output and a closure that pushes the output gradient back to
// its inputs. Nodes whose inputs carry no gradient skip their closure.

#include <cstddef>
#include <functional>
#include <vector>

#include "supertc/ndarray.hpp"
#include "supertc/params.hpp"

namespace supertc {

struct Var {
  std::size_t index = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Constant input; receives no gradient.
  Var constant(NdArray value);
  // Free leaf that collects a gradient readable through grad().
  Var variable(NdArray value);
  // Leaf bound to a stored parameter. backward() adds into its grad buffer
  // when, and only when, the parameter is trainable.
  Var parameter(Parameter& param);

  const NdArray& value(Var v) const { return nodes_[v.index].value; }
  const NdArray& grad(Var v) const { return nodes_[v.index].grad; }
  bool requires_grad(Var v) const { return nodes_[v.index].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // `loss` must hold a single value. Throws kGraphConsumed on a second call.
  void backward(Var loss);

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var record(NdArray value, std::initializer_list<Var> inputs, BackwardFn backward);
  NdArray& grad_buffer(Var v);

 private:
  struct Node {
    NdArray value;
    NdArray grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// x[N,I] . w[I,O] + b[O]
Var affine(Tape& tape, Var x, Var w, Var b);
// Cross-correlation with zero padding. x[N,C,H,W], k[F,C,Kh,Kw], b[F].
Var conv2d(Tape& tape, Var x, Var k, Var b, Conv2dGeometry geometry);
// Max over window x window cells; gradient goes to the first maximal cell.
Var maxpool2d(Tape& tape, Var x, std::size_t window, std::size_t stride);
// Subgradient at 0 is 0.
Var relu(Tape& tape, Var x);
Var sigmoid(Tape& tape, Var x);
// [N, ...] -> [N, prod(...)]
Var flatten(Tape& tape, Var x);
// Mean squared difference; returns a single-value node.
Var mse_loss(Tape& tape, Var pred, Var target);

// Output extent for one spatial axis; throws kInvalidGeometry when the
// geometry does not tile the input exactly.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                               std::size_t padding);
std::size_t pool_output_extent(std::size_t input, std::size_t window, std::size_t stride);

}  // namespace supertc
