#include "rtb/env/sim_env.hpp"

#include <cmath>
#include <iomanip>

#include "rtb/core/error.hpp"

namespace rtb::env {

std::string to_string(Utility u) { return u == Utility::Click ? "click" : "impression"; }

Utility utility_from_string(const std::string& s) {
  if (s == "impression") return Utility::Impression;
  if (s == "click") return Utility::Click;
  throw ConfigError("unknown utility '" + s + "' (expected impression or click)");
}

SimEnv::SimEnv(MarketComponents components, EnvConfig config, Rng rng)
    : components_(std::move(components)), config_(config), rng_(rng) {
  if (!components_.sampler) throw ConfigError("environment needs a request sampler");
  if (!components_.price.all_finite()) throw ConfigError("price model has non-finite parameters");
  if (config_.utility == Utility::Click && !components_.click) {
    throw ConfigError("click utility needs a click model");
  }
  if (!(config_.cpm_train > 0.0)) throw ConfigError("cpm_train must be positive");
  if (config_.request_block == 0) config_.request_block = 1;
}

Observation SimEnv::reset(double budget, std::size_t horizon) {
  return reset(budget, horizon, rng_.split("episode", episodes_++));
}

Observation SimEnv::reset(double budget, std::size_t horizon, Rng tape) {
  if (!(budget >= 0.0) || !std::isfinite(budget)) {
    throw ConfigError("initial budget must be finite and non-negative");
  }
  if (horizon < 1) throw ConfigError("episode horizon must be at least 1");
  request_rng_ = tape.split("requests");
  price_rng_ = tape.split("price");
  click_rng_ = tape.split("click");
  buffer_.clear();
  buffer_pos_ = 0;
  state_ = {budget, horizon};
  initial_budget_ = budget;
  horizon_ = horizon;
  spend_ = 0.0;
  total_reward_ = 0.0;
  done_ = false;
  started_ = true;
  trace_.clear();
  current_ = next_request();
  return observe();
}

BidRequest SimEnv::next_request() {
  if (buffer_pos_ == buffer_.size()) {
    buffer_ = components_.sampler->sample(config_.request_block, request_rng_);
    buffer_pos_ = 0;
  }
  return buffer_[buffer_pos_++];
}

Observation SimEnv::observe() const {
  Observation o;
  o.x = current_;
  o.budget = state_.budget;
  o.time_left = state_.time_left;
  const double t0 = static_cast<double>(horizon_);
  o.budget_norm = state_.budget / (config_.cpm_train * t0 / 1000.0);
  o.time_norm = static_cast<double>(state_.time_left) / t0;
  return o;
}

StepOutcome SimEnv::step(double bid) {
  if (!started_ || done_) throw ConfigError("step called on a finished episode; reset first");
  if (!std::isfinite(bid)) throw NumericalError("agent emitted a non-finite bid");
  const double effective = std::max(0.0, std::min(bid, state_.budget));
  const double w = market::sample_market_price(components_.price, current_, price_rng_);
  const double u = click_rng_.uniform();

  StepOutcome out;
  out.price = w;
  out.win = effective > w;
  if (out.win) {
    out.cost = w;
    state_.budget -= w;
    spend_ += w;
    if (config_.utility == Utility::Impression) {
      out.reward = 1.0;
    } else {
      out.reward = u < components_.click->probability(current_) ? 1.0 : 0.0;
    }
  }
  total_reward_ += out.reward;
  state_.time_left -= 1;
  done_ = state_.time_left == 0;
  out.done = done_;

  if (trace_on_) {
    trace_.push_back({horizon_ - state_.time_left, request_hash(current_), bid, w, out.win,
                      out.reward, out.cost, state_.budget, state_.time_left});
  }
  if (!done_) current_ = next_request();
  out.next = observe();
  return out;
}

std::map<std::string, std::string> SimEnv::metadata() const {
  auto m = components_.provenance;
  m["sampler_split"] = components_.sampler_split;
  m["price_split"] = components_.price_split;
  if (components_.click) m["click_split"] = components_.click_split;
  m["utility"] = to_string(config_.utility);
  return m;
}

SimEnv make_env(MarketComponents components, const std::string& split, EnvConfig config, Rng rng,
                bool allow_mixed) {
  if (!allow_mixed) {
    auto check = [&](const std::string& what, const std::string& tag) {
      if (tag != split) {
        throw ConfigError(what + " was trained on split '" + tag + "' but a " + split +
                          " environment was requested (pass the mixed-split override to allow)");
      }
    };
    check("request sampler", components.sampler_split);
    check("price model", components.price_split);
    if (components.click) check("click model", components.click_split);
  }
  return SimEnv(std::move(components), config, rng);
}

SimEnv make_train_env(MarketComponents components, EnvConfig config, Rng rng, bool allow_mixed) {
  return make_env(std::move(components), "train", config, rng, allow_mixed);
}

SimEnv make_test_env(MarketComponents components, EnvConfig config, Rng rng, bool allow_mixed) {
  return make_env(std::move(components), "test", config, rng, allow_mixed);
}

std::uint64_t request_hash(const BidRequest& x) {
  // FNV-1a over the active indices.
  std::uint64_t h = 1469598103934665603ULL;
  for (auto i : x.active) {
    for (int k = 0; k < 4; ++k) {
      h ^= (i >> (8 * k)) & 0xffu;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void write_trace(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "step\tx_hash\tbid\tprice\twin\treward\tcost\tbudget\ttime_left\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.step << '\t' << std::hex << std::setw(16) << std::setfill('0') << r.x_hash
        << std::dec << std::setfill(' ') << '\t' << r.bid << '\t' << r.price << '\t' << r.win
        << '\t' << r.reward << '\t' << r.cost << '\t' << r.budget << '\t' << r.time_left << '\n';
  }
}

}  // namespace rtb::env
