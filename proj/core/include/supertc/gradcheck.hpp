#pragma once

// Central finite-difference verification of the reverse-mode gradients for
// every layer and for a full tiny model.

#include <cstdint>
#include <string>
#include <vector>

#include "supertc/model.hpp"

namespace supertc {

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;
// Denominator floor for the relative error, so entries whose true
// derivative is exactly zero compare on an absolute scale.
inline constexpr double kGradcheckFloor = 1e-6;

struct GradcheckCase {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t elements = 0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_err = 0.0;
  bool passed() const noexcept { return max_rel_err < kGradcheckTolerance; }
};

struct GradcheckOptions {
  ModelVariant variant = ModelVariant::kFcnn;
  std::uint64_t seed = 0;
  // Test hook: perturbs one analytic gradient entry per case.
  bool corrupt_gradient = false;
};

double relative_error(double analytic, double numeric);

GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace supertc
