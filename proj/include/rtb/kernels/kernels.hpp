#pragma once

// Data-parallel kernels used by the hot loops of the library. Each kernel has
// two implementations with identical signatures:
//
//   rtb::kernels::reference  plain serial loops, written for obviousness and
//                            kept as the oracle in tests and benchmarks;
//   rtb::kernels::parallel   OpenMP versions used by the library.
//
// Parallel kernels never reduce across threads: each output element is owned
// by exactly one thread and accumulated in a fixed order, so results are
// bit-identical to a single-threaded run for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rtb::kernels {

// Row-major matrix view.
struct ConstMat {
  const double* data;
  std::size_t rows;
  std::size_t cols;
};

struct Mat {
  double* data;
  std::size_t rows;
  std::size_t cols;

  operator ConstMat() const { return {data, rows, cols}; }
};

// Sorted list of active indices of a binary vector.
using IndexSet = std::vector<std::uint32_t>;

namespace reference {

// out = a * w^T (+ bias per column when bias is non-empty).
void matmul_nt(ConstMat a, ConstMat w, std::span<const double> bias, Mat out);
// out = g * w
void matmul_nn(ConstMat g, ConstMat w, Mat out);
// out += g^T * a
void matmul_tn_acc(ConstMat g, ConstMat a, Mat out);

// Mean over all pairs (i, j) of exp(-|x_i - y_j|^2 / (2 sigma^2)) for binary
// vectors given as index sets.
double gaussian_kernel_mean(std::span<const IndexSet> x, std::span<const IndexSet> y,
                            double sigma);

// One Bellman backup row for the budget-constrained auction DP with integer
// prices. prev[b] is the value with one step less at integer budget b. Bid k
// wins price d when d < min(bids[k], b). Writes the maximizing value and the
// smallest maximizing action index per budget.
void bellman_row(std::span<const double> price_pmf, std::span<const double> bids,
                 std::span<const double> prev, std::span<double> value,
                 std::span<std::int32_t> policy);

}  // namespace reference

namespace parallel {

void matmul_nt(ConstMat a, ConstMat w, std::span<const double> bias, Mat out);
void matmul_nn(ConstMat g, ConstMat w, Mat out);
void matmul_tn_acc(ConstMat g, ConstMat a, Mat out);
double gaussian_kernel_mean(std::span<const IndexSet> x, std::span<const IndexSet> y,
                            double sigma);
void bellman_row(std::span<const double> price_pmf, std::span<const double> bids,
                 std::span<const double> prev, std::span<double> value,
                 std::span<std::int32_t> policy);

}  // namespace parallel

// Squared Euclidean distance between two binary vectors: size of the
// symmetric difference of their sorted index sets.
std::size_t symmetric_difference_size(const IndexSet& a, const IndexSet& b);

// Number of threads the parallel kernels will use.
int max_threads();

}  // namespace rtb::kernels
