#include "supertc/optimizer.hpp"

#include <cmath>

#include "supertc/error.hpp"

namespace supertc {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_name(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw Error(ErrorCode::kInvalidConfig, "unknown optimizer '" + std::string(name) + "'");
}

void Optimizer::step(ParamStore& params, double learning_rate) {
  for (auto& p : params.entries()) {
    if (!p.trainable) continue;
    auto value = p.value.data();
    auto grad = p.grad.data();
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= learning_rate * grad[i];
      continue;
    }

    auto it = moments_.find(p.name);
    if (it == moments_.end()) {
      it = moments_.emplace(p.name, Moments{NdArray(p.value.shape()), NdArray(p.value.shape()), 0}).first;
    }
    Moments& m = it->second;
    ++m.steps;
    const double correction1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(m.steps));
    const double correction2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(m.steps));
    auto first = m.first.data();
    auto second = m.second.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      first[i] = adam_.beta1 * first[i] + (1.0 - adam_.beta1) * grad[i];
      second[i] = adam_.beta2 * second[i] + (1.0 - adam_.beta2) * grad[i] * grad[i];
      const double m_hat = first[i] / correction1;
      const double v_hat = second[i] / correction2;
      value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + adam_.epsilon);
    }
  }
  params.zero_grad();
}

}  // namespace supertc
