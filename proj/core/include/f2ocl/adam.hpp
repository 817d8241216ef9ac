#pragma once

#include <cstddef>
#include <cstdint>

#include "f2ocl/matrix.hpp"

namespace f2ocl {

struct AdamConfig {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second-moment slots for one parameter matrix, with the shared step
// counter used for bias correction.
struct AdamSlot {
  Matrix m;
  Matrix v;
  std::uint64_t t = 0;
};

// One bias-corrected Adam update of `param` in place:
//   t += 1; m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2
//   param -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// Shapes must match; slot moments are lazily sized on first use.
void adam_step(Matrix& param, const Matrix& grad, AdamSlot& slot, const AdamConfig& config);

}  // namespace f2ocl
