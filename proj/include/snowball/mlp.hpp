#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snowball/layered_vector.hpp"
#include "snowball/rng.hpp"

namespace snowball {

enum class Activation { identity, relu };

struct LayerSpec {
  std::size_t in_dim;
  std::size_t out_dim;
  Activation activation;
  bool operator==(const LayerSpec&) const = default;
};

/// Fully-connected network. Layer k's parameters live in LayeredVector layer k
/// as the row-major (out x in) weight matrix followed by the out biases.
/// Classifiers use an identity last layer; softmax is applied by the loss.
class MlpModel {
 public:
  explicit MlpModel(std::vector<LayerSpec> specs);  // zero parameters

  // Weights ~ N(0, 2 / fan_in), biases zero.
  static MlpModel kaiming(std::vector<LayerSpec> specs, RngStream& rng);

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::size_t input_dim() const { return specs_.front().in_dim; }
  std::size_t output_dim() const { return specs_.back().out_dim; }

  const LayeredVector& params() const noexcept { return params_; }
  LayeredVector& params() noexcept { return params_; }
  void set_params(LayeredVector p);

 private:
  std::vector<LayerSpec> specs_;
  LayeredVector params_;
};

// Per-layer inputs and pre-activations recorded by a forward pass.
struct ForwardCache {
  std::vector<LayerSpec> specs;
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre_activations;
};

struct BackwardResult {
  LayeredVector gradient;
  std::vector<double> grad_input;
};

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x, ForwardCache& cache);
std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x);

BackwardResult mlp_backward(const MlpModel& model, const ForwardCache& cache, std::span<const double> grad_output);

// Adds the parameter gradient into `gradient` and returns dL/dx.
std::vector<double> mlp_backward_accumulate(const MlpModel& model, const ForwardCache& cache,
                                            std::span<const double> grad_output, LayeredVector& gradient);

// Softmax cross-entropy of one sample. Writes dL/dlogits when
// `grad` is non-null.
double softmax_cross_entropy(std::span<const double> logits, int label, std::vector<double>* grad = nullptr);

int argmax(std::span<const double> values);

}  // namespace snowball
