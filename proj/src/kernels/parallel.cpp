#include <omp.h>

#include <algorithm>
#include <cmath>

#include "rtb/kernels/kernels.hpp"

namespace rtb::kernels {

namespace detail {
long highest_winnable_price(double bid);
}

int max_threads() { return omp_get_max_threads(); }

namespace parallel {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 15;
}  // namespace

void matmul_nt(ConstMat a, ConstMat w, std::span<const double> bias, Mat out) {
  const std::size_t work = a.rows * w.rows * a.cols;
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* ai = a.data + i * a.cols;
    double* oi = out.data + i * out.cols;
    for (std::size_t j = 0; j < w.rows; ++j) {
      const double* wj = w.data + j * w.cols;
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * wj[k];
      oi[j] = s + (bias.empty() ? 0.0 : bias[j]);
    }
  }
}

void matmul_nn(ConstMat g, ConstMat w, Mat out) {
  const std::size_t work = g.rows * g.cols * w.cols;
  const auto rows = static_cast<std::ptrdiff_t>(g.rows);
#pragma omp parallel for schedule(static) if (work > kMinParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* oi = out.data + i * out.cols;
    std::fill(oi, oi + w.cols, 0.0);
    const double* gi = g.data + i * g.cols;
    for (std::size_t j = 0; j < g.cols; ++j) {
      const double gij = gi[j];
      if (gij == 0.0) continue;
      const double* wj = w.data + j * w.cols;
      for (std::size_t k = 0; k < w.cols; ++k) oi[k] += gij * wj[k];
    }
  }
}

void matmul_tn_acc(ConstMat g, ConstMat a, Mat out) {
  const std::size_t work = g.rows * g.cols * a.cols;
  const auto outs = static_cast<std::ptrdiff_t>(g.cols);
#pragma omp parallel if (work > kMinParallelWork)
  {
    std::vector<double> acc(a.cols);
#pragma omp for schedule(static)
    for (std::ptrdiff_t j = 0; j < outs; ++j) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t i = 0; i < g.rows; ++i) {
        const double gij = g.data[i * g.cols + j];
        if (gij == 0.0) continue;
        const double* ai = a.data + i * a.cols;
        for (std::size_t k = 0; k < a.cols; ++k) acc[k] += gij * ai[k];
      }
      double* oj = out.data + j * out.cols;
      for (std::size_t k = 0; k < a.cols; ++k) oj[k] += acc[k];
    }
  }
}

double gaussian_kernel_mean(std::span<const IndexSet> x, std::span<const IndexSet> y,
                            double sigma) {
  std::size_t max_d2 = 0;
  for (const auto& s : x) max_d2 = std::max(max_d2, s.size());
  std::size_t max_y = 0;
  for (const auto& s : y) max_y = std::max(max_y, s.size());
  max_d2 += max_y;
  std::vector<double> table(max_d2 + 1);
  for (std::size_t d = 0; d <= max_d2; ++d) {
    table[d] = std::exp(-static_cast<double>(d) / (2.0 * sigma * sigma));
  }

  std::vector<double> row_sums(x.size());
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (x.size() * y.size() > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& yj : y) s += table[symmetric_difference_size(x[i], yj)];
    row_sums[i] = s;
  }
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total / static_cast<double>(x.size() * y.size());
}

void bellman_row(std::span<const double> price_pmf, std::span<const double> bids,
                 std::span<const double> prev, std::span<double> value,
                 std::span<std::int32_t> policy) {
  const long n_prices = static_cast<long>(price_pmf.size());
  // tail[c + 1] = mass strictly above price c, summed in ascending order.
  std::vector<double> tail(n_prices + 1);
  for (long c = -1; c < n_prices; ++c) {
    double t = 0.0;
    for (long d = c + 1; d < n_prices; ++d) t += price_pmf[d];
    tail[c + 1] = t;
  }
  std::vector<long> bid_cut(bids.size());
  for (std::size_t k = 0; k < bids.size(); ++k) {
    bid_cut[k] = std::min(detail::highest_winnable_price(bids[k]), n_prices - 1);
  }

  const auto budgets = static_cast<std::ptrdiff_t>(prev.size());
#pragma omp parallel if (prev.size() * bids.size() > 4096)
  {
    std::vector<double> prefix(n_prices + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < budgets; ++b) {
      // prefix[c + 1] = expected win value over prices 0..c.
      const long reach = std::min(static_cast<long>(b) - 1, n_prices - 1);
      prefix[0] = 0.0;
      double w = 0.0;
      for (long d = 0; d <= reach; ++d) {
        w += price_pmf[d] * (1.0 + prev[b - d]);
        prefix[d + 1] = w;
      }
      double best = -1.0;
      std::int32_t best_k = 0;
      for (std::size_t k = 0; k < bids.size(); ++k) {
        const long c = std::min(bid_cut[k], reach);
        const double v = prefix[c + 1] + tail[c + 1] * prev[b];
        if (v > best) {
          best = v;
          best_k = static_cast<std::int32_t>(k);
        }
      }
      value[b] = best;
      policy[b] = best_k;
    }
  }
}

}  // namespace parallel
}  // namespace rtb::kernels
