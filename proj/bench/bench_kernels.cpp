// Serial reference vs OpenMP kernels. Run with --benchmark_filter=... as usual.

#include <benchmark/benchmark.h>

#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/kernels/kernels.hpp"

namespace k = rtb::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  rtb::Rng rng(seed, "bench");
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

// Batch of one-hot requests over fields of the given cardinalities.
std::vector<k::IndexSet> random_requests(std::size_t n, const std::vector<std::uint32_t>& cards, std::uint64_t seed) {
  rtb::Rng rng(seed, "bench-requests");
  std::vector<k::IndexSet> out(n);
  for (auto& s : out) {
    std::uint32_t offset = 0;
    for (auto c : cards) {
      s.push_back(offset + static_cast<std::uint32_t>(rng.uniform_index(c)));
      offset += c;
    }
  }
  return out;
}

template <bool Parallel>
void BM_matmul_nt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_values(n * n, 1), w = random_values(n * n, 2), bias = random_values(n, 3);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    const k::Mat o{out.data(), n, n};
    if constexpr (Parallel) {
      k::parallel::matmul_nt({a.data(), n, n}, {w.data(), n, n}, bias, o);
    } else {
      k::reference::matmul_nt({a.data(), n, n}, {w.data(), n, n}, bias, o);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void BM_gaussian_kernel_mean(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<std::uint32_t> cards = {35, 370, 7, 24, 4, 6, 50, 30};
  const auto x = random_requests(n, cards, 1), y = random_requests(n, cards, 2);
  for (auto _ : state) {
    double v = Parallel ? k::parallel::gaussian_kernel_mean(x, y, 1.0) : k::reference::gaussian_kernel_mean(x, y, 1.0);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Parallel>
void BM_bellman_row(benchmark::State& state) {
  const auto budget = static_cast<std::size_t>(state.range(0));
  std::vector<double> pmf(301, 1.0 / 301.0);
  std::vector<double> bids(301);
  for (std::size_t i = 0; i < bids.size(); ++i) bids[i] = static_cast<double>(i);
  std::vector<double> prev = random_values(budget + 1, 4), value(budget + 1);
  std::vector<std::int32_t> policy(budget + 1);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::bellman_row(pmf, bids, prev, value, policy);
    } else {
      k::reference::bellman_row(pmf, bids, prev, value, policy);
    }
    benchmark::DoNotOptimize(value.data());
  }
}

}  // namespace

BENCHMARK(BM_matmul_nt<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_matmul_nt<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_gaussian_kernel_mean<false>)->Arg(200)->Arg(1000);
BENCHMARK(BM_gaussian_kernel_mean<true>)->Arg(200)->Arg(1000);
BENCHMARK(BM_bellman_row<false>)->Arg(2000);
BENCHMARK(BM_bellman_row<true>)->Arg(2000);

BENCHMARK_MAIN();
