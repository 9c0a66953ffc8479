#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rtb/core/mlp.hpp"
#include "rtb/core/rng.hpp"
#include "rtb/env/sim_env.hpp"
#include "rtb/market/action_model.hpp"

namespace rtb::agents {

using env::Observation;

inline constexpr std::size_t kActions = 20;

// Dueling Q-network. The request passes through a single affine unit f1, the
// trunk sees [f1(x), b~, t~].
struct QNetwork {
  Tensor f1_weight;  // (width)
  Tensor f1_bias;    // (1)
  MlpParams trunk;   // 3 -> 128, relu
  MlpParams value;   // 128 -> 64 relu -> 1
  MlpParams advantage;  // 128 -> 64 relu -> actions

  std::size_t width() const { return f1_weight.size(); }
  std::size_t actions() const { return advantage.output_dim(); }

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  QNetwork zeros_like() const;
  bool all_finite() const;
  void validate() const;

  friend bool operator==(const QNetwork&, const QNetwork&) = default;
};

struct QNetworkDims {
  std::size_t trunk = 128;
  std::size_t branch = 64;
  std::size_t actions = kActions;
};

// Xavier weights and zero biases everywhere; f1 starts at zero.
QNetwork init_qnetwork(std::size_t width, Rng& rng, QNetworkDims dims = {});

// f1 <- price-model mean head divided by the largest training price, so the
// bottleneck starts as a normalised price estimate.
void init_f1_from_price(QNetwork& net, const market::PriceModel& price, double max_price);

struct QForward {
  Tensor q;          // (n, actions)
  Tensor value;      // (n, 1)
  Tensor advantage;  // (n, actions)
  Tensor trunk_input;  // (n, 3)
  ForwardResult trunk, value_pass, advantage_pass;
};

// Keeps traces only when record is set. The traces point into net.
QForward q_forward(const QNetwork& net, std::span<const Observation> obs, bool record = false);
std::vector<double> q_values(const QNetwork& net, const Observation& obs);

// Parameter gradient of sum(seed .* q) for a recorded forward pass.
QNetwork q_backward(const QNetwork& net, std::span<const Observation> obs, const QForward& fwd,
                    const Tensor& seed);

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> values);

// 0.2 + 0.8 exp(-t / decay) with the defaults.
double epsilon_schedule(double t, double decay = 500000.0, double floor = 0.2);

std::size_t act_epsilon_greedy(const QNetwork& net, const Observation& obs, double epsilon,
                               Rng& rng);

// Discrete bids at the centres of equal bins over [0, upper].
struct ActionGrid {
  std::vector<double> bids;

  static ActionGrid centers(double upper, std::size_t k = kActions);
  // Integer prices need a bid strictly above the largest one to win it, so
  // the default grid covers [0, max_price + 1].
  static ActionGrid for_max_price(double max_price, std::size_t k = kActions);

  std::size_t size() const { return bids.size(); }
  double operator[](std::size_t i) const { return bids[i]; }
  // Index of the closest bid; a bid midway between two picks the lower.
  std::size_t nearest(double bid) const;
};

}  // namespace rtb::agents
