#include "rtb/agents/qnetwork.hpp"

#include <algorithm>
#include <cmath>

#include "rtb/core/error.hpp"

namespace rtb::agents {

std::vector<Tensor*> QNetwork::tensors() {
  std::vector<Tensor*> out = {&f1_weight, &f1_bias};
  for (auto* m : {&trunk, &value, &advantage}) {
    for (auto* t : m->tensors()) out.push_back(t);
  }
  return out;
}

std::vector<const Tensor*> QNetwork::tensors() const {
  std::vector<const Tensor*> out = {&f1_weight, &f1_bias};
  for (const auto* m : {&trunk, &value, &advantage}) {
    for (const auto* t : m->tensors()) out.push_back(t);
  }
  return out;
}

QNetwork QNetwork::zeros_like() const {
  QNetwork z;
  z.f1_weight = Tensor(f1_weight.shape());
  z.f1_bias = Tensor(f1_bias.shape());
  z.trunk = trunk.zeros_like();
  z.value = value.zeros_like();
  z.advantage = advantage.zeros_like();
  return z;
}

bool QNetwork::all_finite() const {
  for (const auto* t : tensors()) {
    if (!t->all_finite()) return false;
  }
  return true;
}

void QNetwork::validate() const {
  trunk.validate();
  value.validate();
  advantage.validate();
  if (f1_bias.size() != 1 || trunk.input_dim() != 3 || value.input_dim() != trunk.output_dim() ||
      advantage.input_dim() != trunk.output_dim() || value.output_dim() != 1) {
    throw ShapeError("Q-network parts do not compose");
  }
}

QNetwork init_qnetwork(std::size_t width, Rng& rng, QNetworkDims dims) {
  QNetwork net;
  net.f1_weight = Tensor({width});
  net.f1_bias = Tensor({1});
  net.trunk = make_mlp({3, dims.trunk}, Activation::Relu, Activation::Relu, rng);
  net.value = make_mlp({dims.trunk, dims.branch, 1}, Activation::Relu, Activation::Identity, rng);
  net.advantage =
      make_mlp({dims.trunk, dims.branch, dims.actions}, Activation::Relu, Activation::Identity, rng);
  return net;
}

void init_f1_from_price(QNetwork& net, const market::PriceModel& price, double max_price) {
  if (price.width() != net.width()) throw ShapeError("price model width differs from the Q-network");
  if (!(max_price > 0.0)) throw ConfigError("max price must be positive");
  for (std::size_t i = 0; i < net.width(); ++i) net.f1_weight[i] = price.mu_w[i] / max_price;
  net.f1_bias[0] = price.mu_b / max_price;
}

QForward q_forward(const QNetwork& net, std::span<const Observation> obs, bool record) {
  const std::size_t n = obs.size();
  QForward f;
  f.trunk_input = Tensor({n, 3});
  for (std::size_t r = 0; r < n; ++r) {
    double s = net.f1_bias[0];
    for (auto i : obs[r].x.active) {
      if (i >= net.width()) throw ShapeError("request index beyond the Q-network input width");
      s += net.f1_weight[i];
    }
    f.trunk_input.at(r, 0) = s;
    f.trunk_input.at(r, 1) = obs[r].budget_norm;
    f.trunk_input.at(r, 2) = obs[r].time_norm;
  }
  f.trunk = mlp_forward(net.trunk, f.trunk_input, record);
  f.value_pass = mlp_forward(net.value, f.trunk.output, record);
  f.advantage_pass = mlp_forward(net.advantage, f.trunk.output, record);
  f.value = f.value_pass.output;
  f.advantage = f.advantage_pass.output;
  const std::size_t k = f.advantage.cols();
  f.q = Tensor({n, k});
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0.0;
    for (std::size_t a = 0; a < k; ++a) mean += f.advantage.at(r, a);
    mean /= static_cast<double>(k);
    for (std::size_t a = 0; a < k; ++a) {
      f.q.at(r, a) = f.value.at(r, 0) + f.advantage.at(r, a) - mean;
    }
  }
  return f;
}

std::vector<double> q_values(const QNetwork& net, const Observation& obs) {
  const auto f = q_forward(net, std::span<const Observation>(&obs, 1));
  return {f.q.values().begin(), f.q.values().end()};
}

QNetwork q_backward(const QNetwork& net, std::span<const Observation> obs, const QForward& fwd,
                    const Tensor& seed) {
  const std::size_t n = seed.rows();
  const std::size_t k = seed.cols();
  Tensor dv({n, 1});
  Tensor da({n, k});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) s += seed.at(r, a);
    dv.at(r, 0) = s;
    for (std::size_t a = 0; a < k; ++a) da.at(r, a) = seed.at(r, a) - s / static_cast<double>(k);
  }
  QNetwork g;
  auto gv = backward(fwd.value_pass.trace, dv);
  auto ga = backward(fwd.advantage_pass.trace, da);
  Tensor dh = gv.input;
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += ga.input[i];
  auto gt = backward(fwd.trunk.trace, dh);
  g.value = std::move(gv.params);
  g.advantage = std::move(ga.params);
  g.trunk = std::move(gt.params);
  g.f1_weight = Tensor({net.width()});
  g.f1_bias = Tensor({1});
  for (std::size_t r = 0; r < n; ++r) {
    const double d = gt.input.at(r, 0);
    g.f1_bias[0] += d;
    for (auto i : obs[r].x.active) g.f1_weight[i] += d;
  }
  return g;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double epsilon_schedule(double t, double decay, double floor) {
  if (t < 0.0) throw ConfigError("epsilon schedule needs t >= 0");
  return floor + (1.0 - floor) * std::exp(-t / decay);
}

std::size_t act_epsilon_greedy(const QNetwork& net, const Observation& obs, double epsilon,
                               Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (rng.uniform() < epsilon) return rng.uniform_index(net.actions());
  return argmax(q_values(net, obs));
}

ActionGrid ActionGrid::centers(double upper, std::size_t k) {
  if (!(upper > 0.0) || k == 0) throw ConfigError("action grid needs a positive upper bound");
  ActionGrid g;
  const double step = upper / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) g.bids.push_back((static_cast<double>(i) + 0.5) * step);
  return g;
}

ActionGrid ActionGrid::for_max_price(double max_price, std::size_t k) {
  return centers(max_price + 1.0, k);
}

std::size_t ActionGrid::nearest(double bid) const {
  // Grid values carry rounding error, so near-ties count as ties.
  const double slack = 1e-12 * std::max(1.0, std::abs(bid));
  std::size_t best = 0;
  for (std::size_t i = 1; i < bids.size(); ++i) {
    if (std::abs(bids[i] - bid) < std::abs(bids[best] - bid) - slack) best = i;
  }
  return best;
}

}  // namespace rtb::agents
