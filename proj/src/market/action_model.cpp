#include "rtb/market/action_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "rtb/core/adam.hpp"
#include "rtb/core/error.hpp"
#include "rtb/core/tensor.hpp"

namespace rtb::market {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double dot(const std::vector<double>& w, const BidRequest& x) {
  double s = 0.0;
  for (auto i : x.active) s += w[i];
  return s;
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double sq_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_width(const std::vector<double>& w, std::span<const MarketSample> batch) {
  for (const auto& s : batch) {
    if (!s.x.active.empty() && s.x.active.back() >= w.size()) {
      throw ShapeError("feature index beyond model width " + std::to_string(w.size()));
    }
  }
}

// Flat parameter vector used by the optimizer: [mu_w, mu_b, ls_w, ls_b].
Tensor pack(const PriceModel& m) {
  std::vector<double> v(m.mu_w);
  v.push_back(m.mu_b);
  v.insert(v.end(), m.log_sigma_w.begin(), m.log_sigma_w.end());
  v.push_back(m.log_sigma_b);
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

PriceModel unpack_price(const Tensor& t) {
  const std::size_t d = t.size() / 2 - 1;
  const auto v = t.values();
  PriceModel m;
  m.mu_w.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(d));
  m.mu_b = v[d];
  m.log_sigma_w.assign(v.begin() + static_cast<std::ptrdiff_t>(d + 1),
                       v.begin() + static_cast<std::ptrdiff_t>(2 * d + 1));
  m.log_sigma_b = v[2 * d + 1];
  return m;
}

Tensor pack(const ClickModel& m) {
  std::vector<double> v(m.w);
  v.push_back(m.b);
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

ClickModel unpack_click(const Tensor& t) {
  const auto v = t.values();
  ClickModel m;
  m.w.assign(v.begin(), v.end() - 1);
  m.b = v.back();
  return m;
}

struct RunResult {
  Tensor best;
  double best_validation = std::numeric_limits<double>::infinity();
  std::vector<double> train_curve;
  std::vector<double> validation_curve;
};

// Minibatch Adam over a fixed batch order with early stopping on the
// validation loss. loss(params, rows, l2) -> (loss, grad) as flat tensors.
template <typename LossFn>
RunResult fit_run(Tensor params, std::span<const MarketSample> train,
                  std::span<const MarketSample> validation, double lr, double l2,
                  std::size_t max_epochs, std::size_t batch_size, std::size_t patience,
                  LossFn loss) {
  AdamConfig cfg;
  cfg.learning_rate = lr;
  AdamState state;
  RunResult out;
  out.best = params;
  std::size_t since_best = 0;
  const std::size_t bs = batch_size == 0 ? train.size() : batch_size;
  for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
    for (std::size_t start = 0; start < train.size(); start += bs) {
      const auto rows = train.subspan(start, std::min(bs, train.size() - start));
      const auto [value, grad] = loss(params, rows, l2);
      if (!std::isfinite(value) || !grad.all_finite()) {
        throw NumericalError("non-finite loss while fitting a market action model");
      }
      adam_step({&params}, {&grad}, state, cfg);
    }
    out.train_curve.push_back(loss(params, train, l2).first);
    const double v = loss(params, validation, 0.0).first;
    out.validation_curve.push_back(v);
    if (v < out.best_validation) {
      out.best_validation = v;
      out.best = params;
      since_best = 0;
    } else if (++since_best >= patience) {
      break;
    }
  }
  return out;
}

std::vector<MarketSample> shuffled(std::span<const MarketSample> rows, Rng& rng) {
  std::vector<MarketSample> out(rows.begin(), rows.end());
  rng.shuffle(std::span<MarketSample>(out));
  return out;
}

}  // namespace

PriceModel PriceModel::zeros(std::size_t width) {
  PriceModel m;
  m.mu_w.assign(width, 0.0);
  m.log_sigma_w.assign(width, 0.0);
  return m;
}

double PriceModel::mu(const BidRequest& x) const { return mu_b + dot(mu_w, x); }
double PriceModel::log_sigma(const BidRequest& x) const { return log_sigma_b + dot(log_sigma_w, x); }

bool PriceModel::all_finite() const {
  return finite_all(mu_w) && finite_all(log_sigma_w) && std::isfinite(mu_b) &&
         std::isfinite(log_sigma_b);
}

double log_normal_survival(double s) {
  if (s < -5.0) return std::log1p(-0.5 * std::erfc(-s / std::numbers::sqrt2));
  if (s < 25.0) return std::log(0.5 * std::erfc(s / std::numbers::sqrt2));
  // Mills-ratio asymptotic series.
  const double s2 = s * s;
  return -0.5 * s2 - std::log(s) - kHalfLog2Pi + std::log1p(-1.0 / s2 + 3.0 / (s2 * s2));
}

PriceNll censored_nll(const PriceModel& model, std::span<const MarketSample> batch, double l2) {
  if (batch.empty()) throw DataError("censored_nll on an empty batch");
  check_width(model.mu_w, batch);
  PriceNll out;
  out.grad = PriceModel::zeros(model.width());
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& s : batch) {
    const double mu = model.mu(s.x);
    const double ls = model.log_sigma(s.x);
    const double sigma = std::exp(ls);
    double dmu = 0.0, dls = 0.0;
    if (s.win) {
      const double r = (s.price - mu) / sigma;
      total += kHalfLog2Pi + ls + 0.5 * r * r;
      dmu = -r / sigma;
      dls = 1.0 - r * r;
    } else {
      const double z = (s.bid - mu) / sigma;
      const double log_q = log_normal_survival(z);
      total -= log_q;
      const double hazard = std::exp(-0.5 * z * z - kHalfLog2Pi - log_q);
      dmu = -hazard / sigma;
      dls = -hazard * z;
    }
    dmu *= inv;
    dls *= inv;
    out.grad.mu_b += dmu;
    out.grad.log_sigma_b += dls;
    for (auto i : s.x.active) {
      out.grad.mu_w[i] += dmu;
      out.grad.log_sigma_w[i] += dls;
    }
  }
  out.loss = total * inv + l2 * (sq_norm(model.mu_w) + sq_norm(model.log_sigma_w));
  for (std::size_t i = 0; i < model.width(); ++i) {
    out.grad.mu_w[i] += 2.0 * l2 * model.mu_w[i];
    out.grad.log_sigma_w[i] += 2.0 * l2 * model.log_sigma_w[i];
  }
  return out;
}

PriceFit train_price_model(std::span<const MarketSample> train,
                           std::span<const MarketSample> validation, std::size_t width,
                           const PriceTrainConfig& config, Rng rng) {
  if (train.empty() || validation.empty()) throw DataError("price model needs train and validation rows");
  std::vector<double> won;
  for (const auto& s : train) {
    if (s.win) won.push_back(s.price);
  }
  if (won.empty()) throw DataError("every training auction is censored; the price mean is unidentifiable");
  if (config.learning_rates.empty() || config.l2_grid.empty()) {
    throw ConfigError("price model grids must be non-empty");
  }

  PriceModel init = PriceModel::zeros(width);
  if (config.init == "fixed") {
    init.mu_b = config.mu_bias_init;
    init.log_sigma_b = config.log_sigma_bias_init;
  } else if (config.init == "data") {
    const double mean = std::accumulate(won.begin(), won.end(), 0.0) / static_cast<double>(won.size());
    double var = 0.0;
    for (double w : won) var += (w - mean) * (w - mean);
    var /= static_cast<double>(won.size());
    init.mu_b = mean;
    init.log_sigma_b = std::log(std::max(std::sqrt(var), 1.0));
  } else {
    throw ConfigError("price model init must be 'data' or 'fixed'");
  }

  Rng order_rng = rng.split("order");
  const auto rows = shuffled(train, order_rng);
  auto loss = [](const Tensor& p, std::span<const MarketSample> b, double l2) {
    auto r = censored_nll(unpack_price(p), b, l2);
    return std::pair<double, Tensor>(r.loss, pack(r.grad));
  };

  PriceFit best;
  best.validation_nll = std::numeric_limits<double>::infinity();
  for (double lr : config.learning_rates) {
    for (double l2 : config.l2_grid) {
      auto run = fit_run(pack(init), rows, validation, lr, l2, config.max_epochs,
                         config.batch_size, config.patience, loss);
      if (run.best_validation < best.validation_nll) {
        best.model = unpack_price(run.best);
        best.learning_rate = lr;
        best.l2 = l2;
        best.validation_nll = run.best_validation;
        best.train_curve = std::move(run.train_curve);
        best.validation_curve = std::move(run.validation_curve);
      }
    }
  }
  if (!std::isfinite(best.validation_nll)) throw NumericalError("price model never produced a finite validation loss");
  return best;
}

double sample_market_price(const PriceModel& model, const BidRequest& x, Rng& rng) {
  const double w = model.mu(x) + std::exp(model.log_sigma(x)) * rng.normal();
  return std::max(0.0, w);
}

ClickModel ClickModel::zeros(std::size_t width) {
  ClickModel m;
  m.w.assign(width, 0.0);
  return m;
}

double ClickModel::logit(const BidRequest& x) const { return b + dot(w, x); }

double ClickModel::probability(const BidRequest& x) const {
  const double z = logit(x);
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

bool ClickModel::all_finite() const { return finite_all(w) && std::isfinite(b); }

ClickNll click_nll(const ClickModel& model, std::span<const MarketSample> batch, double l2) {
  if (batch.empty()) throw DataError("click_nll on an empty batch");
  check_width(model.w, batch);
  ClickNll out;
  out.grad = ClickModel::zeros(model.width());
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& s : batch) {
    const double z = model.logit(s.x);
    // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z).
    const double t = s.click ? -z : z;
    total += t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    const double g = (model.probability(s.x) - (s.click ? 1.0 : 0.0)) * inv;
    out.grad.b += g;
    for (auto i : s.x.active) out.grad.w[i] += g;
  }
  out.loss = total * inv + l2 * sq_norm(model.w);
  for (std::size_t i = 0; i < model.width(); ++i) out.grad.w[i] += 2.0 * l2 * model.w[i];
  return out;
}

ClickFit train_click_model(std::span<const MarketSample> train,
                           std::span<const MarketSample> validation, std::size_t width,
                           const ClickTrainConfig& config, Rng rng) {
  std::vector<MarketSample> tr, va;
  for (const auto& s : train) {
    if (s.win) tr.push_back(s);
  }
  for (const auto& s : validation) {
    if (s.win) va.push_back(s);
  }
  if (tr.empty()) throw DataError("click model needs at least one training impression");
  if (va.empty()) va = tr;

  ClickFit fit;
  std::size_t clicks = 0;
  for (const auto& s : tr) clicks += s.click;
  if (clicks == 0 || clicks == tr.size()) {
    const double rate = (static_cast<double>(clicks) + 0.5) / (static_cast<double>(tr.size()) + 1.0);
    fit.model = ClickModel::zeros(width);
    fit.model.b = std::log(rate / (1.0 - rate));
    fit.prior_only = true;
    fit.warning = "training impressions contain a single click class; using the base rate only";
    fit.validation_nll = click_nll(fit.model, va, 0.0).loss;
    return fit;
  }
  if (config.learning_rates.empty() || config.l2_grid.empty()) {
    throw ConfigError("click model grids must be non-empty");
  }

  ClickModel init = ClickModel::zeros(width);
  if (config.init == "normal") {
    Rng init_rng = rng.split("init");
    for (auto& w : init.w) w = config.init_scale * init_rng.normal();
  } else if (config.init != "zeros") {
    throw ConfigError("click model init must be 'normal' or 'zeros'");
  }
  Rng order_rng = rng.split("order");
  const auto rows = shuffled(tr, order_rng);
  auto loss = [](const Tensor& p, std::span<const MarketSample> b, double l2) {
    auto r = click_nll(unpack_click(p), b, l2);
    return std::pair<double, Tensor>(r.loss, pack(r.grad));
  };
  fit.validation_nll = std::numeric_limits<double>::infinity();
  for (double lr : config.learning_rates) {
    for (double l2 : config.l2_grid) {
      auto run = fit_run(pack(init), rows, va, lr, l2, config.max_epochs, config.batch_size,
                         config.patience, loss);
      if (run.best_validation < fit.validation_nll) {
        fit.model = unpack_click(run.best);
        fit.learning_rate = lr;
        fit.l2 = l2;
        fit.validation_nll = run.best_validation;
      }
    }
  }
  std::size_t correct = 0;
  for (const auto& s : va) correct += (fit.model.probability(s.x) > 0.5) == s.click;
  fit.validation_accuracy = static_cast<double>(correct) / static_cast<double>(va.size());
  return fit;
}

bool sample_click(const ClickModel& model, const BidRequest& x, Rng& rng) {
  return rng.bernoulli(model.probability(x));
}

}  // namespace rtb::market
