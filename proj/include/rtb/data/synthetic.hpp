#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/data/records.hpp"

namespace rtb::data {

// Ground-truth generative market used for desk-scale oracles.
//
//   x ~ mixture of independent per-field categoricals (+ optional Bernoulli tags)
//   w | x ~ N(mu(x), sigma(x)^2) clipped at 0, mu and log sigma linear in x
//   click | x, win ~ Bernoulli(logistic(linear in x))
//   bid ~ logging policy (constant or uniform), win iff bid > w
struct SyntheticMarketSpec {
  struct Field {
    std::string column;  // a string column of RawRecord, e.g. "region"
    std::size_t categories = 2;
  };
  struct Component {
    double weight = 1.0;
    std::vector<std::vector<double>> probs;  // [field][category]
  };
  struct Linear {
    double intercept = 0.0;
    std::vector<std::vector<double>> coefficients;  // [field][category]; empty = zeros
    std::vector<double> tag_coefficients;           // per tag; empty = zeros

    double eval(const std::vector<std::size_t>& cats, const std::vector<bool>& tags) const;
  };
  struct LoggingPolicy {
    std::string type = "constant";  // constant | uniform
    double bid = 100.0;
    double low = 0.0;
    double high = 100.0;
  };

  std::uint64_t seed = 1;
  std::size_t records = 10000;
  std::size_t days = 10;
  std::int64_t start_timestamp_ms = 1370476800000;  // a Thursday, 00:00 UTC
  std::vector<Field> fields;
  std::vector<Component> mixture;  // empty = one uniform component
  std::size_t tag_count = 0;
  double tag_prob = 0.5;
  Linear price_mean;
  Linear price_log_sigma;
  Linear click_logit;
  LoggingPolicy logging;

  static SyntheticMarketSpec from_json(const std::string& text);
  std::string to_json() const;
  std::vector<std::string> field_columns() const;
  // Throws ConfigError on inconsistent dimensions.
  void validate() const;
};

struct SyntheticTruth {
  std::vector<std::size_t> categories;  // per field
  std::vector<bool> tags;
  double mu = 0.0;
  double sigma = 0.0;
  double click_prob = 0.0;
};

struct SyntheticMarket {
  std::vector<RawRecord> records;
  std::vector<SyntheticTruth> truth;  // parallel to records
};

SyntheticMarket generate_synthetic_market(const SyntheticMarketSpec& spec, Rng rng);

// Category label written into the record column for (field column, category).
std::string synthetic_category(const std::string& column, std::size_t category);

}  // namespace rtb::data
