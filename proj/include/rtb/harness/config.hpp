#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rtb/agents/dqn.hpp"
#include "rtb/market/action_model.hpp"
#include "rtb/market/state_model.hpp"

namespace rtb::harness {

// Flat key=value settings. '#' starts a comment; blank lines are ignored.
// Every key must be one of the profile keys, so typos fail loudly.
class Config {
 public:
  // "desk" (small runs on a laptop) or "paper" (full-size runs).
  static Config profile(const std::string& name);
  // Applies the assignments in `text` on top of `base`.
  static Config parse(const std::string& text, Config base);
  static Config load(const std::filesystem::path& path, Config base);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed() const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;

  // Sorted "key=value" lines; parse(to_text(), x) reproduces the config.
  std::string to_text() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  friend bool operator==(const Config&, const Config&) = default;

 private:
  std::map<std::string, std::string> values_;
};

struct EvalConfig {
  std::size_t horizon = 1000;
  std::vector<double> alphas = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  env::Utility utility = env::Utility::Impression;
  void validate() const;
};

EvalConfig eval_config(const Config& c);
agents::DdqnConfig ddqn_config(const Config& c);
agents::FdqiConfig fdqi_config(const Config& c);
market::WganConfig wgan_config(const Config& c);
market::PriceTrainConfig price_config(const Config& c);
market::ClickTrainConfig click_config(const Config& c);

}  // namespace rtb::harness
