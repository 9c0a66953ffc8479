#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/market/action_model.hpp"
#include "rtb/market/state_model.hpp"

namespace rtb::env {

using data::BidRequest;

enum class Utility { Impression, Click };

std::string to_string(Utility u);
Utility utility_from_string(const std::string& s);

struct AdvertiserState {
  double budget = 0.0;
  std::size_t time_left = 0;
};

struct Observation {
  BidRequest x;
  double budget = 0.0;
  std::size_t time_left = 0;
  double budget_norm = 0.0;  // budget / (cpm_train * T0 / 1000)
  double time_norm = 0.0;    // time_left / T0
};

struct StepOutcome {
  Observation next;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
  double price = 0.0;  // market price drawn for the auction just played
  bool win = false;
};

struct TraceRow {
  std::size_t step = 0;
  std::uint64_t x_hash = 0;
  double bid = 0.0;
  double price = 0.0;
  bool win = false;
  double reward = 0.0;
  double cost = 0.0;
  double budget = 0.0;     // after the step
  std::size_t time_left = 0;
};

// Everything the simulator composes, each tagged with the split its
// training data came from.
struct MarketComponents {
  std::shared_ptr<const market::RequestSampler> sampler;
  market::PriceModel price;
  std::optional<market::ClickModel> click;
  std::string sampler_split;
  std::string price_split;
  std::string click_split;
  std::map<std::string, std::string> provenance;  // copied into env metadata
};

struct EnvConfig {
  Utility utility = Utility::Impression;
  double cpm_train = 1.0;  // currency per 1000 requests, used for normalisation
  std::size_t request_block = 256;
};

// Second-price auction simulator with a hard budget. Per step the price and
// click draws are taken whatever the bid, so episodes that share an rng tape
// see the same market and differ only through the agent's bids.
class SimEnv {
 public:
  SimEnv(MarketComponents components, EnvConfig config, Rng rng);

  // Starts the next episode on the stream rng.split("episode", k).
  Observation reset(double budget, std::size_t horizon);
  // Starts an episode on an explicit tape.
  Observation reset(double budget, std::size_t horizon, Rng tape);

  StepOutcome step(double bid);

  bool done() const { return done_; }
  const AdvertiserState& state() const { return state_; }
  double initial_budget() const { return initial_budget_; }
  double spend() const { return spend_; }
  double total_reward() const { return total_reward_; }
  std::size_t horizon() const { return horizon_; }
  const EnvConfig& config() const { return config_; }
  const MarketComponents& components() const { return components_; }
  std::map<std::string, std::string> metadata() const;

  void set_trace(bool on) { trace_on_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  BidRequest next_request();
  Observation observe() const;

  MarketComponents components_;
  EnvConfig config_;
  Rng rng_;
  std::uint64_t episodes_ = 0;

  Rng request_rng_, price_rng_, click_rng_;
  std::vector<BidRequest> buffer_;
  std::size_t buffer_pos_ = 0;

  AdvertiserState state_;
  BidRequest current_;
  double initial_budget_ = 0.0;
  std::size_t horizon_ = 0;
  double spend_ = 0.0;
  double total_reward_ = 0.0;
  bool done_ = true;
  bool started_ = false;

  bool trace_on_ = false;
  std::vector<TraceRow> trace_;
};

// Wiring checks: every component must carry the expected split tag unless
// allow_mixed is set. Click utility needs a click model.
SimEnv make_env(MarketComponents components, const std::string& split, EnvConfig config, Rng rng,
                bool allow_mixed = false);
SimEnv make_train_env(MarketComponents components, EnvConfig config, Rng rng,
                      bool allow_mixed = false);
SimEnv make_test_env(MarketComponents components, EnvConfig config, Rng rng,
                     bool allow_mixed = false);

std::uint64_t request_hash(const BidRequest& x);

// TSV with header step, x_hash, bid, price, win, reward, cost, budget, time_left.
void write_trace(std::ostream& out, const std::vector<TraceRow>& rows);

}  // namespace rtb::env
