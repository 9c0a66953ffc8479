#include "rtb/data/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rtb/core/error.hpp"

namespace rtb::data {

namespace {

constexpr std::int64_t kMsPerDay = 86'400'000;

std::int64_t day_of(std::int64_t ts) {
  std::int64_t q = ts / kMsPerDay;
  if (ts % kMsPerDay != 0 && ts < 0) --q;
  return q;
}

std::size_t round_half_down(double x) {
  return static_cast<std::size_t>(std::max(0.0, std::ceil(x - 0.5 - 1e-9)));
}

void check_fractions(const SplitFractions& f) {
  if (f.train < 0 || f.validation < 0 || f.test < 0 ||
      std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be nonnegative and sum to 1");
  }
}

}  // namespace

void PriceHistogram::check_normalized() const {
  double s = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0)) throw DataError("price histogram has a negative or NaN bin");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DataError("price histogram is not normalized");
}

PriceHistogram PriceHistogram::from_prices(std::span<const double> prices) {
  PriceHistogram h;
  if (prices.empty()) return h;
  std::size_t top = 0;
  for (double p : prices) top = std::max(top, static_cast<std::size_t>(std::max(0.0, std::floor(p))));
  std::vector<std::size_t> counts(top + 1, 0);
  for (double p : prices) ++counts[static_cast<std::size_t>(std::max(0.0, std::floor(p)))];
  h.pmf.resize(top + 1);
  const double n = static_cast<double>(prices.size());
  for (std::size_t i = 0; i <= top; ++i) h.pmf[i] = static_cast<double>(counts[i]) / n;
  return h;
}

DatasetStats dataset_statistics(std::span<const RawRecord> records) {
  if (records.empty()) throw DataError("dataset_statistics on an empty record set");
  DatasetStats s;
  s.n = records.size();
  std::vector<double> won;
  double spend = 0.0;
  for (const auto& r : records) {
    if (!r.win) continue;
    won.push_back(r.pay_price);
    spend += r.pay_price;
    s.max_price = std::max(s.max_price, r.pay_price);
  }
  s.impression_rate = static_cast<double>(won.size()) / static_cast<double>(s.n);
  s.cpm = 1000.0 * spend / static_cast<double>(s.n);
  s.histogram = PriceHistogram::from_prices(won);
  s.empty_histogram = won.empty();
  return s;
}

double kl_divergence(const PriceHistogram& p, const PriceHistogram& q) {
  static constexpr double kSmooth = 1e-6;
  const std::size_t n = std::max(p.pmf.size(), q.pmf.size());
  if (n == 0) return 0.0;
  auto smoothed = [n](const PriceHistogram& h) {
    std::vector<double> out(n, kSmooth);
    for (std::size_t i = 0; i < h.pmf.size(); ++i) out[i] += h.pmf[i];
    const double z = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& v : out) v /= z;
    return out;
  };
  const auto ps = smoothed(p);
  const auto qs = smoothed(q);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) kl += ps[i] * std::log(ps[i] / qs[i]);
  return std::max(0.0, kl);
}

std::array<std::size_t, 3> day_allocation(std::size_t n_days, SplitFractions f) {
  check_fractions(f);
  if (n_days < 3) throw DataError("splitting by day needs at least 3 distinct days");
  std::array<std::size_t, 3> a{round_half_down(f.train * static_cast<double>(n_days)),
                               round_half_down(f.validation * static_cast<double>(n_days)), 0};
  while (a[0] + a[1] > n_days) --(a[0] >= a[1] ? a[0] : a[1]);
  a[2] = n_days - a[0] - a[1];
  for (std::size_t i = 0; i < 3; ++i) {
    while (a[i] == 0) {
      auto& largest = *std::max_element(a.begin(), a.end());
      --largest;
      ++a[i];
    }
  }
  return a;
}

Splits split_by_day(std::span<const RawRecord> records, SplitFractions fractions) {
  std::map<std::int64_t, std::size_t> day_rank;
  for (const auto& r : records) day_rank.emplace(day_of(r.timestamp_ms), 0);
  const auto alloc = day_allocation(day_rank.size(), fractions);
  std::size_t rank = 0;
  for (auto& [day, slot] : day_rank) {
    slot = rank < alloc[0] ? 0 : (rank < alloc[0] + alloc[1] ? 1 : 2);
    ++rank;
  }
  Splits out;
  for (const auto& r : records) {
    switch (day_rank[day_of(r.timestamp_ms)]) {
      case 0:
        out.train.push_back(r);
        break;
      case 1:
        out.validation.push_back(r);
        break;
      default:
        out.test.push_back(r);
    }
  }
  return out;
}

Splits split_random(std::span<const RawRecord> records, Rng rng, SplitFractions fractions) {
  check_fractions(fractions);
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(std::span<std::size_t>(idx));
  const auto n = static_cast<double>(records.size());
  const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * n));
  const auto n_val = static_cast<std::size_t>(std::floor(fractions.validation * n));
  Splits out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& r = records[idx[i]];
    if (i < n_train) {
      out.train.push_back(r);
    } else if (i < n_train + n_val) {
      out.validation.push_back(r);
    } else {
      out.test.push_back(r);
    }
  }
  return out;
}

}  // namespace rtb::data
