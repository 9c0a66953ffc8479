#include "rtb/market/state_model.hpp"

#include <cmath>
#include <string>

#include "rtb/core/error.hpp"

namespace rtb::market {

namespace {

double mean_of(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s / static_cast<double>(t.size());
}

Tensor dense_batch(std::span<const BidRequest> pool, std::size_t n, std::size_t width, Rng& rng) {
  std::vector<BidRequest> picked;
  picked.reserve(n);
  for (std::size_t i = 0; i < n; ++i) picked.push_back(pool[rng.uniform_index(pool.size())]);
  return data::densify(picked, width);
}

AdamConfig adam_config(const WganConfig& c) {
  AdamConfig a;
  a.learning_rate = c.learning_rate;
  a.beta1 = c.adam_beta1;
  a.beta2 = c.adam_beta2;
  a.weight_decay = c.weight_decay;
  return a;
}

std::vector<BidRequest> to_requests(const Tensor& hard) {
  std::vector<BidRequest> out;
  out.reserve(hard.rows());
  for (std::size_t r = 0; r < hard.rows(); ++r) out.push_back(data::sparsify(hard.row(r)));
  return out;
}

}  // namespace

void MarketStateModel::validate() const {
  generator.validate();
  critic.validate();
  if (generator.output_dim() != width()) {
    throw ShapeError("generator emits " + std::to_string(generator.output_dim()) +
                     " logits but the feature layout has width " + std::to_string(width()));
  }
  if (critic.input_dim() != width() || critic.output_dim() != 1) {
    throw ShapeError("critic must map the feature width to a scalar");
  }
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
}

MarketStateModel init_state_model(const FieldLayout& layout, const WganConfig& config, Rng& rng) {
  const std::size_t d = layout_width(layout);
  std::vector<std::size_t> gdims = {config.noise_dim};
  gdims.insert(gdims.end(), config.generator_hidden.begin(), config.generator_hidden.end());
  gdims.push_back(d);
  std::vector<std::size_t> cdims = {d};
  cdims.insert(cdims.end(), config.critic_hidden.begin(), config.critic_hidden.end());
  cdims.push_back(1);
  MarketStateModel m;
  m.generator = make_mlp(gdims, Activation::Relu, Activation::Identity, rng);
  m.critic = make_mlp(cdims, Activation::Relu, Activation::Identity, rng);
  m.layout = layout;
  m.tau = config.tau;
  m.validate();
  return m;
}

Tensor sample_noise(std::size_t batch, std::size_t noise_dim, Rng& rng) {
  Tensor z({batch, noise_dim});
  for (auto& v : z.values()) v = rng.normal();
  return z;
}

Tensor generator_sample(const MlpParams& generator, const FieldLayout& layout, const Tensor& z,
                        double tau, const Tensor& relax_noise, bool hard) {
  if (generator.output_dim() != layout_width(layout)) {
    throw ShapeError("generator head does not match the feature dictionary");
  }
  const auto logits = mlp_forward(generator, z, false).output;
  const auto relaxed = gumbel_softmax(logits, layout, hard ? 1.0 : tau, relax_noise);
  return hard ? harden(relaxed, layout) : relaxed;
}

CriticLoss critic_loss(const MlpParams& critic, const Tensor& real, const Tensor& fake,
                       double lambda, Rng& rng) {
  if (!real.same_shape(fake)) {
    throw ShapeError("critic_loss: real " + real.shape_string() + " vs fake " + fake.shape_string());
  }
  const std::size_t n = real.rows();
  const double inv = 1.0 / static_cast<double>(n);
  auto fr = mlp_forward(critic, real, true);
  auto ff = mlp_forward(critic, fake, true);
  CriticLoss out;
  out.gap = mean_of(fr.output) - mean_of(ff.output);
  out.grad = backward(fr.trace, Tensor(fr.output.shape(), -inv)).params;
  axpy(out.grad, 1.0, backward(ff.trace, Tensor(ff.output.shape(), inv)).params);

  Tensor x_hat(real.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double t = rng.uniform();
    auto xr = real.row(r);
    auto xf = fake.row(r);
    auto xh = x_hat.row(r);
    for (std::size_t j = 0; j < xh.size(); ++j) xh[j] = t * xr[j] + (1.0 - t) * xf[j];
  }
  if (lambda != 0.0) {
    auto gp = input_gradient_norm_grad(critic, x_hat, std::vector<double>(n, lambda * inv));
    axpy(out.grad, 1.0, gp.grad);
    double s = 0.0;
    for (double p : gp.penalties) s += p;
    out.penalty = s * inv;
  } else {
    auto gp = input_gradient_norm_grad(critic, x_hat);
    out.penalty = gp.weighted_penalty;
  }
  out.loss = -out.gap + lambda * out.penalty;
  return out;
}

GeneratorLoss generator_loss(const MlpParams& generator, const MlpParams& critic,
                             const FieldLayout& layout, const Tensor& z, double tau,
                             const Tensor& relax_noise) {
  auto fg = mlp_forward(generator, z, true);
  const auto relaxed = gumbel_softmax(fg.output, layout, tau, relax_noise);
  auto fc = mlp_forward(critic, relaxed, true);
  const double inv = 1.0 / static_cast<double>(relaxed.rows());
  GeneratorLoss out;
  out.loss = -mean_of(fc.output);
  const auto gc = backward(fc.trace, Tensor(fc.output.shape(), -inv));
  const auto dlogits = gumbel_softmax_backward(relaxed, layout, tau, gc.input);
  out.grad = backward(fg.trace, dlogits).params;
  return out;
}

TrainedStateModel train_market_state_model(std::span<const BidRequest> train,
                                           std::span<const BidRequest> validation,
                                           const FieldLayout& layout, const WganConfig& config,
                                           Rng rng) {
  if (train.empty() || validation.empty()) {
    throw DataError("market state model needs non-empty train and validation data");
  }
  if (config.batch_size == 0 || config.critic_steps == 0 || config.max_iterations == 0 ||
      !(config.learning_rate > 0.0) || !(config.tau > 0.0) || config.lambda < 0.0) {
    throw ConfigError("invalid market state model configuration");
  }
  Rng init_rng = rng.split("init");
  TrainedStateModel out{init_state_model(layout, config, init_rng), {}};
  MarketStateModel& m = out.model;
  auto& diag = out.diagnostics;
  const std::size_t d = m.width();
  const AdamConfig acfg = adam_config(config);
  AdamState critic_state, generator_state;
  Rng batch_rng = rng.split("batches");
  Rng noise_rng = rng.split("noise");
  Rng penalty_rng = rng.split("penalty");
  Rng val_rng = rng.split("validation");
  const std::size_t nb = config.batch_size;
  const std::size_t nv = config.validation_batch;

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    double gap = 0.0;
    for (std::size_t k = 0; k < config.critic_steps; ++k) {
      const Tensor real = dense_batch(train, nb, d, batch_rng);
      const Tensor z = sample_noise(nb, config.noise_dim, noise_rng);
      const Tensor rn = sample_relaxation_noise(nb, layout, noise_rng);
      const Tensor fake = generator_sample(m.generator, layout, z, m.tau, rn, false);
      const auto cl = critic_loss(m.critic, real, fake, config.lambda, penalty_rng);
      if (!std::isfinite(cl.loss) || !cl.grad.all_finite()) {
        throw NumericalError("critic loss became non-finite at iteration " + std::to_string(it));
      }
      adam_step(m.critic.tensors(), std::as_const(cl.grad).tensors(), critic_state, acfg);
      gap += cl.gap / static_cast<double>(config.critic_steps);
    }
    const Tensor z = sample_noise(nb, config.noise_dim, noise_rng);
    const Tensor rn = sample_relaxation_noise(nb, layout, noise_rng);
    const auto gl = generator_loss(m.generator, m.critic, layout, z, m.tau, rn);
    if (!std::isfinite(gl.loss) || !gl.grad.all_finite()) {
      throw NumericalError("generator loss became non-finite at iteration " + std::to_string(it));
    }
    adam_step(m.generator.tensors(), std::as_const(gl.grad).tensors(), generator_state, acfg);

    const Tensor vreal = dense_batch(validation, nv, d, val_rng);
    const Tensor vz = sample_noise(nv, config.noise_dim, val_rng);
    const Tensor vrn = sample_relaxation_noise(nv, layout, val_rng);
    const Tensor vfake = generator_sample(m.generator, layout, vz, m.tau, vrn, false);
    const double vgap = mean_of(mlp_forward(m.critic, vreal, false).output) -
                        mean_of(mlp_forward(m.critic, vfake, false).output);

    diag.critic_gap.push_back(gap);
    diag.generator_loss.push_back(gl.loss);
    diag.validation_gap.push_back(vgap);
    diag.iterations = it + 1;

    const std::size_t w = config.window;
    const std::size_t done = diag.iterations;
    if (w > 0 && done >= config.min_iterations && done >= 2 * w) {
      double last = 0.0, prev = 0.0;
      for (std::size_t i = done - w; i < done; ++i) last += diag.validation_gap[i];
      for (std::size_t i = done - 2 * w; i < done - w; ++i) prev += diag.validation_gap[i];
      last /= static_cast<double>(w);
      prev /= static_cast<double>(w);
      if (std::abs(last - prev) < config.tolerance * std::max(std::abs(prev), 1e-6)) {
        diag.early_stopped = true;
        break;
      }
    }
  }
  return out;
}

EmpiricalSampler::EmpiricalSampler(std::vector<BidRequest> corpus) : corpus_(std::move(corpus)) {
  if (corpus_.empty()) throw DataError("empirical sampler needs a non-empty corpus");
}

std::vector<BidRequest> EmpiricalSampler::sample(std::size_t n, Rng& rng) const {
  std::vector<BidRequest> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(corpus_[rng.uniform_index(corpus_.size())]);
  return out;
}

GeneratorSampler::GeneratorSampler(MarketStateModel model) : model_(std::move(model)) {
  model_.validate();
}

std::vector<BidRequest> GeneratorSampler::sample(std::size_t n, Rng& rng) const {
  if (n == 0) return {};
  const Tensor z = sample_noise(n, model_.noise_dim(), rng);
  const Tensor rn = sample_relaxation_noise(n, model_.layout, rng);
  return to_requests(generator_sample(model_.generator, model_.layout, z, model_.tau, rn, true));
}

UniformSampler::UniformSampler(FieldLayout layout) : layout_(std::move(layout)) {}

std::vector<BidRequest> UniformSampler::sample(std::size_t n, Rng& rng) const {
  std::vector<BidRequest> out(n);
  for (auto& req : out) {
    for (const auto& f : layout_) {
      if (f.multi_hot) {
        for (std::size_t j = 0; j < f.width; ++j) {
          if (rng.bernoulli(0.5)) req.active.push_back(static_cast<std::uint32_t>(f.offset + j));
        }
      } else {
        req.active.push_back(static_cast<std::uint32_t>(f.offset + rng.uniform_index(f.width)));
      }
    }
  }
  return out;
}

}  // namespace rtb::market
