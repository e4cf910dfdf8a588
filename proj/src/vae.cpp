#include "snowball/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snowball/error.hpp"
#include "snowball/sgd.hpp"

namespace snowball {

namespace {

std::vector<LayerSpec> encoder_specs(std::size_t in, std::size_t hidden) {
  return {{in, hidden, Activation::relu}, {hidden, hidden, Activation::relu}};
}

std::vector<LayerSpec> decoder_specs(std::size_t latent, std::size_t hidden, std::size_t out) {
  return {{latent, hidden, Activation::relu}, {hidden, hidden, Activation::relu}, {hidden, out, Activation::identity}};
}


}  // namespace

VaeModel::VaeModel(std::size_t input_dim, std::size_t hidden, std::size_t latent, RngStream& rng)
    : encoder(MlpModel::kaiming(encoder_specs(input_dim, hidden), rng)),
      mu_head({{hidden, latent, Activation::identity}}),
      logvar_head({{hidden, latent, Activation::identity}}),
      decoder(MlpModel::kaiming(decoder_specs(latent, hidden, input_dim), rng)) {}

VaeForward vae_forward(const VaeModel& model, std::span<const double> u, RngStream* rng) {
  if (u.size() != model.input_dim())
    throw ShapeError("vae_forward: input has " + std::to_string(u.size()) + " values, expected " +
                     std::to_string(model.input_dim()));
  VaeForward f;
  const auto h = mlp_forward(model.encoder, u, f.encoder_cache);
  f.mu = mlp_forward(model.mu_head, h, f.mu_cache);
  f.logvar = mlp_forward(model.logvar_head, h, f.logvar_cache);
  f.z = f.mu;
  if (rng) {
    f.eps.resize(f.mu.size());
    for (std::size_t d = 0; d < f.mu.size(); ++d) {
      f.eps[d] = rng->normal();
      f.z[d] += std::exp(0.5 * f.logvar[d]) * f.eps[d];
    }
  }
  f.reconstruction = mlp_forward(model.decoder, f.z, f.decoder_cache);
  return f;
}

VaeLoss vae_loss(std::span<const double> reconstruction, std::span<const double> u, std::span<const double> mu,
                 std::span<const double> logvar) {
  if (reconstruction.size() != u.size() || mu.size() != logvar.size() || u.empty())
    throw ShapeError("vae_loss: shape mismatch");
  VaeLoss loss;
  for (std::size_t d = 0; d < u.size(); ++d) {
    const double e = reconstruction[d] - u[d];
    loss.recon += e * e;
  }
  loss.recon /= static_cast<double>(u.size());
  for (std::size_t d = 0; d < mu.size(); ++d)
    loss.kl += 0.5 * (mu[d] * mu[d] + std::exp(logvar[d]) - logvar[d] - 1.0);
  loss.total = loss.kl + loss.recon;
  if (!std::isfinite(loss.total)) throw NumericError("vae_loss: non-finite loss");
  return loss;
}

double reconstruction_error(const VaeModel& model, std::span<const double> u) {
  const auto f = vae_forward(model, u, nullptr);
  double s = 0.0;
  for (std::size_t d = 0; d < u.size(); ++d) {
    const double e = f.reconstruction[d] - u[d];
    s += e * e;
  }
  return s / static_cast<double>(u.size());
}

VaeGradient VaeGradient::zeros_like(const VaeModel& model) {
  return {LayeredVector::zeros_like(model.encoder.params()), LayeredVector::zeros_like(model.mu_head.params()),
          LayeredVector::zeros_like(model.logvar_head.params()), LayeredVector::zeros_like(model.decoder.params())};
}

void VaeGradient::scale(double s) {
  encoder *= s;
  mu_head *= s;
  logvar_head *= s;
  decoder *= s;
}

VaeLoss vae_backward(const VaeModel& model, const VaeForward& f, std::span<const double> u, VaeGradient& gradient) {
  const auto loss = vae_loss(f.reconstruction, u, f.mu, f.logvar);
  const double inv_d = 1.0 / static_cast<double>(u.size());
  std::vector<double> g_recon(u.size());
  for (std::size_t d = 0; d < u.size(); ++d) g_recon[d] = 2.0 * (f.reconstruction[d] - u[d]) * inv_d;
  const auto g_z = mlp_backward_accumulate(model.decoder, f.decoder_cache, g_recon, gradient.decoder);

  const bool sampled = !f.eps.empty();
  std::vector<double> g_mu(f.mu.size()), g_logvar(f.mu.size());
  for (std::size_t d = 0; d < f.mu.size(); ++d) {
    const double var = std::exp(f.logvar[d]);
    g_mu[d] = g_z[d] + f.mu[d];
    g_logvar[d] = 0.5 * (var - 1.0);
    if (sampled) g_logvar[d] += g_z[d] * f.eps[d] * 0.5 * std::exp(0.5 * f.logvar[d]);
  }
  auto g_h = mlp_backward_accumulate(model.mu_head, f.mu_cache, g_mu, gradient.mu_head);
  const auto g_h2 = mlp_backward_accumulate(model.logvar_head, f.logvar_cache, g_logvar, gradient.logvar_head);
  for (std::size_t i = 0; i < g_h.size(); ++i) g_h[i] += g_h2[i];
  mlp_backward_accumulate(model.encoder, f.encoder_cache, g_h, gradient.encoder);
  return loss;
}

std::vector<double> train_vae(VaeModel& model, const Points& samples, std::size_t epochs,
                              const VaeTrainOptions& options, RngStream& rng) {
  if (samples.empty()) throw ParameterError("train_vae: empty training set");
  if (options.batch_size == 0) throw ParameterError("train_vae: batch size must be positive");
  for (const auto& s : samples)
    if (s.size() != model.input_dim()) throw ShapeError("train_vae: sample dimension differs from the model");

  SgdState enc_opt(options.learning_rate, options.momentum, 0.0);
  SgdState mu_opt = enc_opt, lv_opt = enc_opt, dec_opt = enc_opt;
  const std::size_t batch = std::min(options.batch_size, samples.size());
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> history;
  history.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      auto grad = VaeGradient::zeros_like(model);
      for (std::size_t b = begin; b < end; ++b) {
        const auto& u = samples[order[b]];
        const auto f = vae_forward(model, u, &rng);
        epoch_loss += vae_backward(model, f, u, grad).total;
      }
      grad.scale(1.0 / static_cast<double>(end - begin));
      sgd_step(model.encoder.params(), grad.encoder, enc_opt);
      sgd_step(model.mu_head.params(), grad.mu_head, mu_opt);
      sgd_step(model.logvar_head.params(), grad.logvar_head, lv_opt);
      sgd_step(model.decoder.params(), grad.decoder, dec_opt);
    }
    epoch_loss /= static_cast<double>(samples.size());
    if (!std::isfinite(epoch_loss)) throw NumericError("train_vae: loss diverged at epoch " + std::to_string(epoch));
    history.push_back(epoch_loss);
  }
  return history;
}

double mean_vae_loss(const VaeModel& model, const Points& samples) {
  if (samples.empty()) throw ParameterError("mean_vae_loss: empty sample set");
  double total = 0.0;
  for (const auto& u : samples) {
    const auto f = vae_forward(model, u, nullptr);
    total += vae_loss(f.reconstruction, u, f.mu, f.logvar).total;
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace snowball
