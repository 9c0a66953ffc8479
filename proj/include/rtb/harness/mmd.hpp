#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rtb/market/state_model.hpp"

namespace rtb::harness {

// sqrt(n) * sqrt(max(MMD^2, 0)) with the biased (V-statistic) estimate and
// k(u, v) = exp(-|u - v|^2 / (2 sigma^2)). Needs equal sizes n >= 2.
double mmd_estimate(std::span<const market::BidRequest> x, std::span<const market::BidRequest> y,
                    double sigma = 1.0);

struct MmdRow {
  std::string sampler;
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> values;
};

using NamedSampler = std::pair<std::string, const market::RequestSampler*>;

// Each repeat draws a fresh reference set of n requests from `test` and
// compares it with n draws from every sampler.
std::vector<MmdRow> mmd_benchmark(const std::vector<market::BidRequest>& test,
                                  const std::vector<NamedSampler>& samplers, std::size_t n,
                                  std::size_t repeats, double sigma, Rng rng);

}  // namespace rtb::harness
