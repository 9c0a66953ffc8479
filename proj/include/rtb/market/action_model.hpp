#pragma once

#include <span>
#include <string>
#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/data/features.hpp"

namespace rtb::market {

using data::BidRequest;
using data::MarketSample;

// Censored Gaussian market price: w | x ~ N(mu(x), exp(log_sigma(x))^2), both
// heads linear in the binary features.
struct PriceModel {
  std::vector<double> mu_w;
  double mu_b = 0.0;
  std::vector<double> log_sigma_w;
  double log_sigma_b = 0.0;

  static PriceModel zeros(std::size_t width);
  std::size_t width() const { return mu_w.size(); }
  double mu(const BidRequest& x) const;
  double log_sigma(const BidRequest& x) const;
  bool all_finite() const;
};

struct PriceNll {
  double loss = 0.0;  // mean negative log-likelihood + l2 * |weights|^2
  PriceModel grad;
};

// -log N(w; mu, sigma) for won rows, -log P(w >= bid) for lost rows, averaged
// over rows. Biases are not penalised.
PriceNll censored_nll(const PriceModel& model, std::span<const MarketSample> batch, double l2);

// log(1 - Phi(s)), accurate far into both tails.
double log_normal_survival(double s);

struct PriceTrainConfig {
  std::vector<double> learning_rates = {1e-1, 1e-2};
  std::vector<double> l2_grid = {1e-2, 1e-4, 1e-6, 1e-8};
  std::size_t max_epochs = 200;
  std::size_t batch_size = 1024;
  std::size_t patience = 10;
  // "fixed" starts the biases at the values below; "data" starts them at the
  // mean and log standard deviation of the won prices.
  std::string init = "data";
  double mu_bias_init = 200.0;
  double log_sigma_bias_init = 10.0;
};

struct PriceFit {
  PriceModel model;
  double learning_rate = 0.0;
  double l2 = 0.0;
  double validation_nll = 0.0;
  std::vector<double> train_curve;       // training NLL after each epoch, best run
  std::vector<double> validation_curve;  // validation NLL after each epoch, best run
};

// Grid search over (learning rate, l2); each run uses minibatch Adam with a
// fixed shuffled batch order and early stopping on validation NLL. Throws
// DataError when the training set has no won auction.
PriceFit train_price_model(std::span<const MarketSample> train,
                           std::span<const MarketSample> validation, std::size_t width,
                           const PriceTrainConfig& config, Rng rng);

// N(mu(x), sigma(x)^2) clipped at 0.
double sample_market_price(const PriceModel& model, const BidRequest& x, Rng& rng);

struct ClickModel {
  std::vector<double> w;
  double b = 0.0;

  static ClickModel zeros(std::size_t width);
  std::size_t width() const { return w.size(); }
  double logit(const BidRequest& x) const;
  double probability(const BidRequest& x) const;
  bool all_finite() const;
};

struct ClickNll {
  double loss = 0.0;  // mean logistic NLL + l2 * |w|^2
  ClickModel grad;
};

// Rows are impressions; only x and click are read.
ClickNll click_nll(const ClickModel& model, std::span<const MarketSample> batch, double l2);

struct ClickTrainConfig {
  std::vector<double> learning_rates = {1e-1, 1e-2};
  std::vector<double> l2_grid = {1e-2, 1e-4, 1e-6, 1e-8};
  std::size_t max_epochs = 100;
  std::size_t batch_size = 1024;
  std::size_t patience = 5;
  std::string init = "normal";  // normal | zeros
  double init_scale = 1.0;
};

struct ClickFit {
  ClickModel model;
  double learning_rate = 0.0;
  double l2 = 0.0;
  double validation_nll = 0.0;
  double validation_accuracy = 0.0;
  bool prior_only = false;
  std::string warning;
};

// Filters both splits to won rows. When the training impressions contain a
// single class, returns the smoothed base rate with zero weights and sets
// prior_only plus a warning.
ClickFit train_click_model(std::span<const MarketSample> train,
                           std::span<const MarketSample> validation, std::size_t width,
                           const ClickTrainConfig& config, Rng rng);

bool sample_click(const ClickModel& model, const BidRequest& x, Rng& rng);

}  // namespace rtb::market
