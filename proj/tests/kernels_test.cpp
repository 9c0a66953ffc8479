#include <cmath>
#include <cstring>

#include "doctest.h"
#include "rtb/core/rng.hpp"
#include "rtb/kernels/kernels.hpp"

namespace k = rtb::kernels;

namespace {

std::vector<double> random_values(std::size_t n, rtb::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2, 2);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

k::IndexSet random_set(std::size_t width, double p, rtb::Rng& rng) {
  k::IndexSet s;
  for (std::uint32_t i = 0; i < width; ++i) {
    if (rng.bernoulli(p)) s.push_back(i);
  }
  return s;
}

}  // namespace

TEST_CASE("parallel matmuls are bit-identical to the serial reference") {
  rtb::Rng rng(1);
  // Large enough to cross the parallel threshold.
  const std::size_t n = 300, in = 150, out = 120;
  const auto a = random_values(n * in, rng);
  const auto w = random_values(out * in, rng);
  const auto bias = random_values(out, rng);
  const auto g = random_values(n * out, rng);

  std::vector<double> r1(n * out), p1(n * out);
  k::reference::matmul_nt({a.data(), n, in}, {w.data(), out, in}, bias, {r1.data(), n, out});
  k::parallel::matmul_nt({a.data(), n, in}, {w.data(), out, in}, bias, {p1.data(), n, out});
  CHECK(bit_equal(r1, p1));

  std::vector<double> r2(n * in), p2(n * in);
  k::reference::matmul_nn({g.data(), n, out}, {w.data(), out, in}, {r2.data(), n, in});
  k::parallel::matmul_nn({g.data(), n, out}, {w.data(), out, in}, {p2.data(), n, in});
  CHECK(bit_equal(r2, p2));

  std::vector<double> r3(out * in, 0.5), p3(out * in, 0.5);
  k::reference::matmul_tn_acc({g.data(), n, out}, {a.data(), n, in}, {r3.data(), out, in});
  k::parallel::matmul_tn_acc({g.data(), n, out}, {a.data(), n, in}, {p3.data(), out, in});
  CHECK(bit_equal(r3, p3));
}

TEST_CASE("matmul_nt on a small hand example") {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};  // 2x3
  const std::vector<double> w = {1, 0, -1, 2, 1, 0};  // 2x3
  const std::vector<double> bias = {0.5, -1};
  std::vector<double> out(4);
  k::parallel::matmul_nt({a.data(), 2, 3}, {w.data(), 2, 3}, bias, {out.data(), 2, 2});
  CHECK(out == std::vector<double>{-1.5, 3, -1.5, 12});
}

TEST_CASE("symmetric difference equals the dense squared distance") {
  rtb::Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_set(40, 0.3, rng);
    const auto b = random_set(40, 0.3, rng);
    std::vector<int> da(40, 0), db(40, 0);
    for (auto i : a) da[i] = 1;
    for (auto i : b) db[i] = 1;
    std::size_t d = 0;
    for (int i = 0; i < 40; ++i) d += static_cast<std::size_t>((da[i] - db[i]) * (da[i] - db[i]));
    CHECK(k::symmetric_difference_size(a, b) == d);
  }
}

TEST_CASE("kernel mean: parallel agrees with reference") {
  rtb::Rng rng(5);
  std::vector<k::IndexSet> x, y;
  for (int i = 0; i < 120; ++i) x.push_back(random_set(30, 0.2, rng));
  for (int i = 0; i < 90; ++i) y.push_back(random_set(30, 0.2, rng));
  for (double sigma : {0.5, 1.0, 3.0}) {
    const double r = k::reference::gaussian_kernel_mean(x, y, sigma);
    const double p = k::parallel::gaussian_kernel_mean(x, y, sigma);
    CHECK(std::abs(r - p) < 1e-12);
  }
}

TEST_CASE("bellman row: parallel is bit-identical to reference") {
  rtb::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_prices = 1 + rng.uniform_index(30);
    std::vector<double> pmf(n_prices);
    double z = 0.0;
    for (auto& p : pmf) z += (p = rng.uniform());
    for (auto& p : pmf) p /= z;
    std::vector<double> bids;
    for (int kk = 0; kk < 20; ++kk) bids.push_back(0.75 * kk + 0.25);
    const std::size_t budgets = 1 + rng.uniform_index(200);
    std::vector<double> prev(budgets);
    for (std::size_t b = 0; b < budgets; ++b) prev[b] = std::sqrt(static_cast<double>(b));
    std::vector<double> vr(budgets), vp(budgets);
    std::vector<std::int32_t> ar(budgets), ap(budgets);
    k::reference::bellman_row(pmf, bids, prev, vr, ar);
    k::parallel::bellman_row(pmf, bids, prev, vp, ap);
    CHECK(bit_equal(vr, vp));
    CHECK(ar == ap);
  }
}
