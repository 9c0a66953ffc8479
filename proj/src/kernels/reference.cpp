#include <algorithm>
#include <cmath>

#include "rtb/kernels/kernels.hpp"

namespace rtb::kernels {

std::size_t symmetric_difference_size(const IndexSet& a, const IndexSet& b) {
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return a.size() + b.size() - 2 * common;
}

namespace detail {

// Largest integer price strictly below the bid, or -1.
long highest_winnable_price(double bid) {
  if (!(bid > 0.0)) return -1;
  return static_cast<long>(std::ceil(bid)) - 1;
}

}  // namespace detail

namespace reference {

void matmul_nt(ConstMat a, ConstMat w, std::span<const double> bias, Mat out) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < w.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) {
        s += a.data[i * a.cols + k] * w.data[j * w.cols + k];
      }
      out.data[i * out.cols + j] = s + (bias.empty() ? 0.0 : bias[j]);
    }
  }
}

void matmul_nn(ConstMat g, ConstMat w, Mat out) {
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t k = 0; k < w.cols; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < g.cols; ++j) {
        s += g.data[i * g.cols + j] * w.data[j * w.cols + k];
      }
      out.data[i * out.cols + k] = s;
    }
  }
}

void matmul_tn_acc(ConstMat g, ConstMat a, Mat out) {
  for (std::size_t j = 0; j < g.cols; ++j) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.rows; ++i) {
        s += g.data[i * g.cols + j] * a.data[i * a.cols + k];
      }
      out.data[j * out.cols + k] += s;
    }
  }
}

double gaussian_kernel_mean(std::span<const IndexSet> x, std::span<const IndexSet> y,
                            double sigma) {
  double total = 0.0;
  for (const auto& xi : x) {
    for (const auto& yj : y) {
      const double d2 = static_cast<double>(symmetric_difference_size(xi, yj));
      total += std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  return total / static_cast<double>(x.size() * y.size());
}

void bellman_row(std::span<const double> price_pmf, std::span<const double> bids,
                 std::span<const double> prev, std::span<double> value,
                 std::span<std::int32_t> policy) {
  const long n_prices = static_cast<long>(price_pmf.size());
  for (std::size_t b = 0; b < prev.size(); ++b) {
    double best = -1.0;
    std::int32_t best_k = 0;
    for (std::size_t k = 0; k < bids.size(); ++k) {
      const long c = std::min({detail::highest_winnable_price(bids[k]),
                               static_cast<long>(b) - 1, n_prices - 1});
      double win = 0.0;
      for (long d = 0; d <= c; ++d) win += price_pmf[d] * (1.0 + prev[b - d]);
      double tail = 0.0;
      for (long d = c + 1; d < n_prices; ++d) tail += price_pmf[d];
      const double v = win + tail * prev[b];
      if (v > best) {
        best = v;
        best_k = static_cast<std::int32_t>(k);
      }
    }
    value[b] = best;
    policy[b] = best_k;
  }
}

}  // namespace reference
}  // namespace rtb::kernels
