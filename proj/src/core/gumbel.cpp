#include "rtb/core/gumbel.hpp"

#include <algorithm>
#include <cmath>

#include "rtb/core/error.hpp"

namespace rtb {

std::size_t layout_width(const FieldLayout& layout) {
  std::size_t w = 0;
  for (const auto& f : layout) w = std::max(w, f.offset + f.width);
  return w;
}

Tensor sample_relaxation_noise(std::size_t batch, const FieldLayout& layout, Rng& rng) {
  const std::size_t width = layout_width(layout);
  Tensor noise({batch, width});
  for (std::size_t r = 0; r < batch; ++r) {
    auto row = noise.row(r);
    for (const auto& f : layout) {
      for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
        row[j] = f.multi_hot ? rng.logistic() : rng.gumbel();
      }
    }
  }
  return noise;
}

Tensor gumbel_softmax(const Tensor& logits, const FieldLayout& layout, double tau,
                      const Tensor& noise) {
  if (!(tau > 0.0)) throw ConfigError("gumbel_softmax temperature must be positive");
  Tensor l = logits.rank() == 1 ? Tensor({1, logits.size()}, {logits.values().begin(), logits.values().end()}) : logits;
  if (l.cols() != layout_width(layout) || noise.size() != l.size()) {
    throw ShapeError("gumbel_softmax logits " + logits.shape_string() + " / noise " +
                     noise.shape_string() + " do not match the field layout");
  }
  Tensor out(l.shape());
  for (std::size_t r = 0; r < l.rows(); ++r) {
    auto in = l.row(r);
    auto g = noise.row(r);
    auto y = out.row(r);
    for (const auto& f : layout) {
      if (f.multi_hot) {
        for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
          const double s = (in[j] + g[j]) / tau;
          y[j] = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
        }
        continue;
      }
      double mx = -INFINITY;
      for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
        mx = std::max(mx, (in[j] + g[j]) / tau);
      }
      double sum = 0.0;
      for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
        y[j] = std::exp((in[j] + g[j]) / tau - mx);
        sum += y[j];
      }
      for (std::size_t j = f.offset; j < f.offset + f.width; ++j) y[j] /= sum;
    }
  }
  return out;
}

Tensor gumbel_softmax_backward(const Tensor& relaxed, const FieldLayout& layout, double tau,
                               const Tensor& grad_output) {
  if (!relaxed.same_shape(grad_output)) {
    throw ShapeError("gumbel_softmax_backward: gradient shape mismatch");
  }
  Tensor out(relaxed.shape());
  for (std::size_t r = 0; r < relaxed.rows(); ++r) {
    auto y = relaxed.row(r);
    auto gy = grad_output.row(r);
    auto gl = out.row(r);
    for (const auto& f : layout) {
      if (f.multi_hot) {
        for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
          gl[j] = gy[j] * y[j] * (1.0 - y[j]) / tau;
        }
        continue;
      }
      double dot = 0.0;
      for (std::size_t j = f.offset; j < f.offset + f.width; ++j) dot += y[j] * gy[j];
      for (std::size_t j = f.offset; j < f.offset + f.width; ++j) {
        gl[j] = y[j] * (gy[j] - dot) / tau;
      }
    }
  }
  return out;
}

Tensor harden(const Tensor& relaxed, const FieldLayout& layout) {
  Tensor out(relaxed.shape());
  for (std::size_t r = 0; r < relaxed.rows(); ++r) {
    auto y = relaxed.row(r);
    auto h = out.row(r);
    for (const auto& f : layout) {
      if (f.multi_hot) {
        for (std::size_t j = f.offset; j < f.offset + f.width; ++j) h[j] = y[j] > 0.5 ? 1.0 : 0.0;
        continue;
      }
      std::size_t best = f.offset;
      for (std::size_t j = f.offset + 1; j < f.offset + f.width; ++j) {
        if (y[j] > y[best]) best = j;
      }
      h[best] = 1.0;
    }
  }
  return out;
}

}  // namespace rtb
