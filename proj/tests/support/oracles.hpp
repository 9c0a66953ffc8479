#pragma once

// Independent re-implementations used as test oracles. Everything here is
// written as plain loops, without the library kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rtb/core/mlp.hpp"
#include "rtb/core/tensor.hpp"

namespace oracle {

inline double act(rtb::Activation a, double z) {
  switch (a) {
    case rtb::Activation::Relu:
      return z > 0.0 ? z : 0.0;
    case rtb::Activation::Tanh:
      return std::tanh(z);
    default:
      return z;
  }
}

// Straight-line forward pass over one example.
inline std::vector<double> forward(const rtb::MlpParams& p, std::vector<double> x) {
  for (const auto& l : p.layers) {
    const std::size_t out = l.weight.shape()[0];
    const std::size_t in = l.weight.shape()[1];
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = l.bias[o];
      for (std::size_t i = 0; i < in; ++i) z += l.weight[o * in + i] * x[i];
      y[o] = act(l.activation, z);
    }
    x = std::move(y);
  }
  return x;
}

// Pre-activation signs of every relu unit, used to detect finite-difference
// steps that cross a kink.
inline std::vector<bool> relu_pattern(const rtb::MlpParams& p, std::vector<double> x) {
  std::vector<bool> pat;
  for (const auto& l : p.layers) {
    const std::size_t out = l.weight.shape()[0];
    const std::size_t in = l.weight.shape()[1];
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = l.bias[o];
      for (std::size_t i = 0; i < in; ++i) z += l.weight[o * in + i] * x[i];
      if (l.activation == rtb::Activation::Relu) pat.push_back(z > 0.0);
      y[o] = act(l.activation, z);
    }
    x = std::move(y);
  }
  return pat;
}

// Gradient of a scalar-output network with respect to its input, by a
// hand-written backward sweep over one example.
inline std::vector<double> input_gradient(const rtb::MlpParams& p, const std::vector<double>& x) {
  std::vector<std::vector<double>> acts = {x};
  for (const auto& l : p.layers) {
    const std::size_t out = l.weight.shape()[0];
    const std::size_t in = l.weight.shape()[1];
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = l.bias[o];
      for (std::size_t i = 0; i < in; ++i) z += l.weight[o * in + i] * acts.back()[i];
      y[o] = act(l.activation, z);
    }
    acts.push_back(std::move(y));
  }
  std::vector<double> adj(acts.back().size(), 1.0);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& l = p.layers[li];
    const std::size_t out = l.weight.shape()[0];
    const std::size_t in = l.weight.shape()[1];
    const auto& a = acts[li + 1];
    for (std::size_t o = 0; o < out; ++o) {
      if (l.activation == rtb::Activation::Tanh) adj[o] *= 1.0 - a[o] * a[o];
      if (l.activation == rtb::Activation::Relu) adj[o] *= a[o] > 0.0 ? 1.0 : 0.0;
    }
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      for (std::size_t i = 0; i < in; ++i) prev[i] += l.weight[o * in + i] * adj[o];
    }
    adj = std::move(prev);
  }
  return adj;
}

inline double central_difference(const std::function<double()>& f, double& slot, double h) {
  const double saved = slot;
  slot = saved + h;
  const double up = f();
  slot = saved - h;
  const double down = f();
  slot = saved;
  return (up - down) / (2.0 * h);
}

// |a - b| relative to the larger magnitude, with a floor so that components
// that are zero up to rounding compare on an absolute scale.
inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracle
