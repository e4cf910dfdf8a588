#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snowball/clustering.hpp"
#include "snowball/mlp.hpp"
#include "snowball/rng.hpp"

namespace snowball {

/// Variational autoencoder over flat difference vectors.
///
/// encoder: in -> hidden (relu) -> hidden (relu); two linear heads map the
/// encoding to the latent mean and log-variance. decoder: latent -> hidden
/// (relu) -> hidden (relu) -> in (linear). Encoder and decoder use Kaiming
/// init with zero biases; the two heads start at zero, so an untrained model
/// sits at the prior and in eval mode reconstructs every input as zero.
class VaeModel {
 public:
  VaeModel(std::size_t input_dim, std::size_t hidden, std::size_t latent, RngStream& rng);

  std::size_t input_dim() const { return encoder.input_dim(); }
  std::size_t latent_dim() const { return mu_head.output_dim(); }

  MlpModel encoder;
  MlpModel mu_head;
  MlpModel logvar_head;
  MlpModel decoder;
};

struct VaeForward {
  std::vector<double> reconstruction;
  std::vector<double> mu;
  std::vector<double> logvar;
  std::vector<double> z;
  std::vector<double> eps;  // empty in eval mode
  ForwardCache encoder_cache;
  ForwardCache mu_cache;
  ForwardCache logvar_cache;
  ForwardCache decoder_cache;
};

// z = mu + exp(logvar / 2) * eps with eps ~ N(0, I) drawn from `rng`; a null
// rng selects eval mode, z = mu.
VaeForward vae_forward(const VaeModel& model, std::span<const double> u, RngStream* rng);

struct VaeLoss {
  double total = 0.0;
  double kl = 0.0;     // 0.5 * sum(mu^2 + exp(logvar) - logvar - 1)
  double recon = 0.0;  // mean squared error
};

VaeLoss vae_loss(std::span<const double> reconstruction, std::span<const double> u, std::span<const double> mu,
                 std::span<const double> logvar);

double reconstruction_error(const VaeModel& model, std::span<const double> u);

struct VaeGradient {
  LayeredVector encoder;
  LayeredVector mu_head;
  LayeredVector logvar_head;
  LayeredVector decoder;

  static VaeGradient zeros_like(const VaeModel& model);
  void scale(double s);
};

// Adds dJ/dparams of one sample's loss into `gradient` and returns the loss.
VaeLoss vae_backward(const VaeModel& model, const VaeForward& forward, std::span<const double> u,
                     VaeGradient& gradient);

struct VaeTrainOptions {
  double learning_rate = 1e-3;
  double momentum = 0.0;
  std::size_t batch_size = 32;  // effective size min(batch_size, |U|)
};

/// Mini-batch SGD on the mean per-sample loss. Returns the mean training loss
/// of every epoch.
std::vector<double> train_vae(VaeModel& model, const Points& samples, std::size_t epochs,
                              const VaeTrainOptions& options, RngStream& rng);

// Mean eval-mode loss over `samples`.
double mean_vae_loss(const VaeModel& model, const Points& samples);

}  // namespace snowball
