#include "snowball/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snowball/error.hpp"

namespace snowball {

MlpModel::MlpModel(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw ParameterError("MLP needs at least one layer");
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    const auto& s = specs_[k];
    if (s.in_dim == 0 || s.out_dim == 0) throw ParameterError("MLP layer with zero width");
    if (k > 0 && specs_[k - 1].out_dim != s.in_dim)
      throw ShapeError("MLP layer " + std::to_string(k) + " input does not chain with previous output");
    params_.add_layer(static_cast<LayerId>(k), std::vector<double>(s.in_dim * s.out_dim + s.out_dim, 0.0));
  }
}

MlpModel MlpModel::kaiming(std::vector<LayerSpec> specs, RngStream& rng) {
  MlpModel m(std::move(specs));
  for (std::size_t k = 0; k < m.specs_.size(); ++k) {
    const auto& s = m.specs_[k];
    const double stddev = std::sqrt(2.0 / static_cast<double>(s.in_dim));
    auto& values = m.params_.layer(k).values;
    for (std::size_t i = 0; i < s.in_dim * s.out_dim; ++i) values[i] = rng.normal(0.0, stddev);
  }
  return m;
}

void MlpModel::set_params(LayeredVector p) {
  if (!p.same_shape(params_)) throw ShapeError("parameter vector does not match MLP layout");
  params_ = std::move(p);
}

namespace {

void affine(const LayerSpec& s, std::span<const double> w, std::span<const double> x, std::vector<double>& out) {
  const double* bias = w.data() + s.in_dim * s.out_dim;
  out.resize(s.out_dim);
  for (std::size_t o = 0; o < s.out_dim; ++o) {
    const double* row = w.data() + o * s.in_dim;
    double acc = bias[o];
    for (std::size_t i = 0; i < s.in_dim; ++i) acc += row[i] * x[i];
    out[o] = acc;
  }
}

}  // namespace

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x, ForwardCache& cache) {
  const auto& specs = model.specs();
  if (x.size() != model.input_dim())
    throw ShapeError("mlp_forward: input has " + std::to_string(x.size()) + " values, expected " +
                     std::to_string(model.input_dim()));
  cache.specs = specs;
  cache.inputs.resize(specs.size());
  cache.pre_activations.resize(specs.size());
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    cache.inputs[k] = current;
    affine(specs[k], model.params().layer(k).values, current, cache.pre_activations[k]);
    current = cache.pre_activations[k];
    if (specs[k].activation == Activation::relu)
      for (auto& v : current) v = v > 0.0 ? v : 0.0;
  }
  return current;
}

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x) {
  ForwardCache cache;
  return mlp_forward(model, x, cache);
}

std::vector<double> mlp_backward_accumulate(const MlpModel& model, const ForwardCache& cache,
                                            std::span<const double> grad_output, LayeredVector& gradient) {
  const auto& specs = model.specs();
  if (cache.specs != specs || cache.inputs.size() != specs.size() || cache.pre_activations.size() != specs.size())
    throw StateError("mlp_backward: cache was not produced by a forward pass of this model");
  if (!gradient.same_shape(model.params())) throw ShapeError("mlp_backward: gradient buffer shape mismatch");
  if (grad_output.size() != model.output_dim()) throw ShapeError("mlp_backward: grad_output length mismatch");

  std::vector<double> g(grad_output.begin(), grad_output.end());
  std::vector<double> gin;
  for (std::size_t k = specs.size(); k-- > 0;) {
    const auto& s = specs[k];
    const auto& pre = cache.pre_activations[k];
    const auto& in = cache.inputs[k];
    if (pre.size() != s.out_dim || in.size() != s.in_dim) throw StateError("mlp_backward: stale cache");
    if (s.activation == Activation::relu)
      for (std::size_t o = 0; o < s.out_dim; ++o)
        if (!(pre[o] > 0.0)) g[o] = 0.0;

    const auto& w = model.params().layer(k).values;
    auto& gw = gradient.layer(k).values;
    double* gbias = gw.data() + s.in_dim * s.out_dim;
    gin.assign(s.in_dim, 0.0);
    for (std::size_t o = 0; o < s.out_dim; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      gbias[o] += go;
      double* grow = gw.data() + o * s.in_dim;
      const double* wrow = w.data() + o * s.in_dim;
      for (std::size_t i = 0; i < s.in_dim; ++i) {
        grow[i] += go * in[i];
        gin[i] += go * wrow[i];
      }
    }
    g.swap(gin);
  }
  return g;
}

BackwardResult mlp_backward(const MlpModel& model, const ForwardCache& cache, std::span<const double> grad_output) {
  BackwardResult r{LayeredVector::zeros_like(model.params()), {}};
  r.grad_input = mlp_backward_accumulate(model, cache, grad_output, r.gradient);
  return r;
}

double softmax_cross_entropy(std::span<const double> logits, int label, std::vector<double>* grad) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw ParameterError("softmax_cross_entropy: label out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double log_z = std::log(z) + mx;
  if (grad) {
    grad->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) (*grad)[i] = std::exp(logits[i] - log_z);
    (*grad)[label] -= 1.0;
  }
  return log_z - logits[label];
}

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace snowball
