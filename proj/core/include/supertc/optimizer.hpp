#pragma once

#include <map>
#include <string>
#include <string_view>

#include "supertc/params.hpp"

namespace supertc {

enum class OptimizerKind { kAdam, kSgd };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind optimizer_from_name(std::string_view name);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Applies one update to trainable parameters, then zeroes every gradient.
// Adam moments are keyed by parameter name and persist across steps.
class Optimizer {
 public:
  explicit Optimizer(OptimizerKind kind = OptimizerKind::kAdam, AdamSettings adam = {})
      : kind_(kind), adam_(adam) {}

  void step(ParamStore& params, double learning_rate);

  OptimizerKind kind() const noexcept { return kind_; }

 private:
  struct Moments {
    NdArray first;
    NdArray second;
    long long steps = 0;
  };

  OptimizerKind kind_;
  AdamSettings adam_;
  std::map<std::string, Moments, std::less<>> moments_;
};

}  // namespace supertc
