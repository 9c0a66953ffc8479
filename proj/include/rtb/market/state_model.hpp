#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rtb/core/adam.hpp"
#include "rtb/core/gumbel.hpp"
#include "rtb/core/mlp.hpp"
#include "rtb/core/rng.hpp"
#include "rtb/data/features.hpp"

namespace rtb::market {

using data::BidRequest;

struct WganConfig {
  double lambda = 10.0;
  std::size_t critic_steps = 5;
  std::size_t batch_size = 1024;
  double tau = 0.667;
  double learning_rate = 1e-4;
  double weight_decay = 1e-10;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  std::size_t max_iterations = 4000;
  std::size_t noise_dim = 64;
  std::vector<std::size_t> generator_hidden = {256, 256, 128};
  std::vector<std::size_t> critic_hidden = {256, 256, 128};
  // Early stopping on the validation critic gap: compare the mean over the
  // last `window` iterations with the window before it.
  std::size_t window = 50;
  double tolerance = 1e-3;
  std::size_t min_iterations = 200;
  std::size_t validation_batch = 1024;
};

// Generator (noise -> per-field logits) and critic (features -> score).
struct MarketStateModel {
  MlpParams generator;
  MlpParams critic;
  FieldLayout layout;
  double tau = 0.667;

  std::size_t noise_dim() const { return generator.input_dim(); }
  std::size_t width() const { return layout_width(layout); }
  void validate() const;
};

MarketStateModel init_state_model(const FieldLayout& layout, const WganConfig& config, Rng& rng);

// Standard-normal generator input, (batch, noise_dim).
Tensor sample_noise(std::size_t batch, std::size_t noise_dim, Rng& rng);

// Relaxed (hard = false) or per-field argmax (hard = true) samples for the
// given generator input and relaxation noise.
Tensor generator_sample(const MlpParams& generator, const FieldLayout& layout, const Tensor& z,
                        double tau, const Tensor& relax_noise, bool hard);

struct CriticLoss {
  double loss = 0.0;     // mean c(fake) - mean c(real) + lambda * mean penalty
  double gap = 0.0;      // mean c(real) - mean c(fake)
  double penalty = 0.0;  // mean (|grad c(x_hat)| - 1)^2
  MlpParams grad;
};

// Interpolation coefficients t ~ U(0,1) are drawn per row from rng.
CriticLoss critic_loss(const MlpParams& critic, const Tensor& real, const Tensor& fake,
                       double lambda, Rng& rng);

struct GeneratorLoss {
  double loss = 0.0;  // -mean c(relaxed samples)
  MlpParams grad;
};

GeneratorLoss generator_loss(const MlpParams& generator, const MlpParams& critic,
                             const FieldLayout& layout, const Tensor& z, double tau,
                             const Tensor& relax_noise);

struct StateModelDiagnostics {
  std::vector<double> critic_gap;      // training gap, mean over the critic steps
  std::vector<double> validation_gap;  // gap on validation data vs fresh samples
  std::vector<double> generator_loss;
  std::size_t iterations = 0;
  bool early_stopped = false;
};

struct TrainedStateModel {
  MarketStateModel model;
  StateModelDiagnostics diagnostics;
};

// Alternates critic_steps critic updates with one generator update. Throws
// NumericalError (with the iteration in the message) on a non-finite loss.
TrainedStateModel train_market_state_model(std::span<const BidRequest> train,
                                           std::span<const BidRequest> validation,
                                           const FieldLayout& layout, const WganConfig& config,
                                           Rng rng);

// Source of i.i.d. bid requests for the environment and for MMD checks.
class RequestSampler {
 public:
  virtual ~RequestSampler() = default;
  virtual std::vector<BidRequest> sample(std::size_t n, Rng& rng) const = 0;
};

// Uniform draw with replacement from a featurized corpus.
class EmpiricalSampler : public RequestSampler {
 public:
  explicit EmpiricalSampler(std::vector<BidRequest> corpus);
  std::vector<BidRequest> sample(std::size_t n, Rng& rng) const override;

 private:
  std::vector<BidRequest> corpus_;
};

// Hard samples from a trained generator.
class GeneratorSampler : public RequestSampler {
 public:
  explicit GeneratorSampler(MarketStateModel model);
  std::vector<BidRequest> sample(std::size_t n, Rng& rng) const override;
  const MarketStateModel& model() const { return model_; }

 private:
  MarketStateModel model_;
};

// Every one-hot field uniform over its block (OTHER included); every
// multi-hot bit on with probability 1/2.
class UniformSampler : public RequestSampler {
 public:
  explicit UniformSampler(FieldLayout layout);
  std::vector<BidRequest> sample(std::size_t n, Rng& rng) const override;

 private:
  FieldLayout layout_;
};

}  // namespace rtb::market
