#include "snowball/sgd.hpp"

#include <cmath>

#include "snowball/error.hpp"

namespace snowball {

SgdState::SgdState(double lr, double m, double wd) : learning_rate(lr), momentum(m), weight_decay(wd) {
  if (!(lr > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(m >= 0.0 && m < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  if (!(wd >= 0.0)) throw ParameterError("weight decay must be non-negative");
}

void sgd_step(LayeredVector& params, const LayeredVector& gradient, SgdState& state) {
  if (!params.same_shape(gradient)) throw ShapeError("sgd_step: gradient shape differs from parameters");
  if (state.velocity.num_layers() == 0) state.velocity = LayeredVector::zeros_like(params);
  if (!state.velocity.same_shape(params)) throw ShapeError("sgd_step: velocity shape differs from parameters");
  if (!gradient.all_finite()) throw NumericError("sgd_step: non-finite gradient entry");

  for (std::size_t k = 0; k < params.num_layers(); ++k) {
    auto& p = params.layer(k).values;
    auto& v = state.velocity.layer(k).values;
    const auto& g = gradient.layer(k).values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = state.momentum * v[i] + g[i] + state.weight_decay * p[i];
      p[i] -= state.learning_rate * v[i];
    }
  }
}

}  // namespace snowball
