#include "rtb/harness/mmd.hpp"

#include <cmath>

#include "rtb/core/error.hpp"
#include "rtb/kernels/kernels.hpp"

namespace rtb::harness {

namespace {

std::vector<kernels::IndexSet> index_sets(std::span<const market::BidRequest> r) {
  std::vector<kernels::IndexSet> out;
  out.reserve(r.size());
  for (const auto& x : r) out.push_back(x.active);
  return out;
}

}  // namespace

double mmd_estimate(std::span<const market::BidRequest> x, std::span<const market::BidRequest> y,
                    double sigma) {
  if (x.size() != y.size()) throw ConfigError("MMD needs equal sample sizes");
  if (x.size() < 2) throw ConfigError("MMD needs at least two samples per side");
  if (!(sigma > 0.0)) throw ConfigError("MMD bandwidth must be positive");
  const auto xs = index_sets(x);
  const auto ys = index_sets(y);
  const double kxx = kernels::parallel::gaussian_kernel_mean(xs, xs, sigma);
  const double kyy = kernels::parallel::gaussian_kernel_mean(ys, ys, sigma);
  const double kxy = kernels::parallel::gaussian_kernel_mean(xs, ys, sigma);
  const double mmd2 = kxx + kyy - 2.0 * kxy;
  return std::sqrt(static_cast<double>(x.size())) * std::sqrt(std::max(mmd2, 0.0));
}

std::vector<MmdRow> mmd_benchmark(const std::vector<market::BidRequest>& test,
                                  const std::vector<NamedSampler>& samplers, std::size_t n,
                                  std::size_t repeats, double sigma, Rng rng) {
  if (test.empty()) throw DataError("MMD benchmark needs test requests");
  if (repeats == 0) throw ConfigError("MMD benchmark needs at least one repeat");
  const market::EmpiricalSampler reference(test);
  std::vector<MmdRow> rows;
  for (const auto& [name, s] : samplers) rows.push_back({name, 0.0, 0.0, {}});
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng ref_rng = rng.split("reference", r);
    const auto ref = reference.sample(n, ref_rng);
    for (std::size_t i = 0; i < samplers.size(); ++i) {
      Rng draw = rng.split(samplers[i].first, r);
      const auto sample = samplers[i].second->sample(n, draw);
      rows[i].values.push_back(mmd_estimate(ref, sample, sigma));
    }
  }
  for (auto& row : rows) {
    double sum = 0.0;
    for (double v : row.values) sum += v;
    row.mean = sum / static_cast<double>(repeats);
    double ss = 0.0;
    for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
    row.std = repeats > 1 ? std::sqrt(ss / static_cast<double>(repeats - 1)) : 0.0;
  }
  return rows;
}

}  // namespace rtb::harness
