#pragma once

#include "snowball/layered_vector.hpp"

namespace snowball {

struct SgdState {
  double learning_rate = 0.01;
  double momentum = 0.0;      // [0, 1)
  double weight_decay = 0.0;  // >= 0
  LayeredVector velocity;     // lazily shaped on the first step when empty

  SgdState() = default;
  SgdState(double lr, double momentum, double weight_decay);
};

// v <- momentum * v + grad + weight_decay * params; params <- params - lr * v
void sgd_step(LayeredVector& params, const LayeredVector& gradient, SgdState& state);

}  // namespace snowball
