#include "f2ocl/adam.hpp"

#include <cmath>

#include "f2ocl/errors.hpp"

namespace f2ocl {

void adam_step(Matrix& param, const Matrix& grad, AdamSlot& slot, const AdamConfig& config) {
  if (!param.same_shape(grad)) fail(ErrorKind::input, "adam_step shape mismatch");
  if (!all_finite(grad.data)) fail(ErrorKind::numeric, "non-finite gradient in adam_step");
  if (slot.m.data.empty()) {
    slot.m = Matrix(param.rows, param.cols);
    slot.v = Matrix(param.rows, param.cols);
  } else if (!slot.m.same_shape(param)) {
    fail(ErrorKind::input, "adam_step slot shape mismatch");
  }

  slot.t += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(slot.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(slot.t));
  for (std::size_t i = 0; i < param.data.size(); ++i) {
    const double g = grad.data[i];
    slot.m.data[i] = config.beta1 * slot.m.data[i] + (1.0 - config.beta1) * g;
    slot.v.data[i] = config.beta2 * slot.v.data[i] + (1.0 - config.beta2) * g * g;
    const double mhat = slot.m.data[i] / c1;
    const double vhat = slot.v.data[i] / c2;
    param.data[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

}  // namespace f2ocl
