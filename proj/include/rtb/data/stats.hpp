#pragma once

#include <array>
#include <span>
#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/data/records.hpp"

namespace rtb::data {

// Empirical market-price distribution over integer prices {0..max}.
struct PriceHistogram {
  std::vector<double> pmf;

  bool empty() const { return pmf.empty(); }
  std::size_t max_price() const { return pmf.empty() ? 0 : pmf.size() - 1; }
  // Throws DataError unless nonnegative and summing to 1 within 1e-9.
  void check_normalized() const;

  // Prices are floored to integers; negative prices clamp to 0.
  static PriceHistogram from_prices(std::span<const double> prices);
};

struct DatasetStats {
  std::size_t n = 0;
  std::size_t d = 0;  // feature width, filled by the caller when a dictionary exists
  double impression_rate = 0.0;
  double cpm = 0.0;  // cost per 1000 bid requests
  double max_price = 0.0;
  PriceHistogram histogram;
  bool empty_histogram = true;
};

DatasetStats dataset_statistics(std::span<const RawRecord> records);

// KL(p || q) over the union support after adding 1e-6 to every bin and
// renormalising.
double kl_divergence(const PriceHistogram& p, const PriceHistogram& q);

struct Splits {
  std::vector<RawRecord> train;
  std::vector<RawRecord> validation;
  std::vector<RawRecord> test;
};

struct SplitFractions {
  double train = 0.60;
  double validation = 0.15;
  double test = 0.25;
};

// Whole UTC days, chronologically: train days first, then validation, then
// test. Day counts are rounded half-down and adjusted so every split gets at
// least one day. Throws DataError with fewer than 3 distinct days.
Splits split_by_day(std::span<const RawRecord> records, SplitFractions fractions = {});

// Day counts used by split_by_day for n distinct days.
std::array<std::size_t, 3> day_allocation(std::size_t n_days, SplitFractions fractions = {});

// Shuffled per-record split with the same fractions.
Splits split_random(std::span<const RawRecord> records, Rng rng, SplitFractions fractions = {});

}  // namespace rtb::data
