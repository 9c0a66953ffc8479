#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rtb/agents/policy.hpp"
#include "rtb/data/stats.hpp"
#include "rtb/env/sim_env.hpp"

namespace rtb::agents {

// Value and greedy-action tables of the budget-constrained auction DP over
// t in [0, horizon] and integer budgets [0, max_budget].
struct DpTables {
  std::size_t horizon = 0;
  std::size_t max_budget = 0;
  std::vector<double> bids;
  std::vector<double> value;         // (horizon + 1) x (max_budget + 1)
  std::vector<std::int32_t> policy;  // index into bids, same layout

  double v(std::size_t t, std::size_t b) const { return value[t * (max_budget + 1) + b]; }
  std::int32_t action(std::size_t t, std::size_t b) const {
    return policy[t * (max_budget + 1) + b];
  }
};

// Impression utility, strict wins. Throws DataError if m is not normalised.
DpTables rlb_dp_solve(const data::PriceHistogram& m, std::size_t horizon, std::size_t max_budget,
                      std::span<const double> bids, bool parallel = true);

// Segmented lookup: the remaining t steps form ceil(t / horizon) segments and
// the current one gets an equal share of the budget.
double rlb_act(const DpTables& tables, double budget, std::size_t time_left);

// Budget rows needed so that budgets up to alpha_max * cpm * horizon / 1000
// stay inside the table, with a factor two margin.
std::size_t rlb_budget_rows(double alpha_max, double cpm, std::size_t horizon);

class RlbPolicy : public Policy {
 public:
  explicit RlbPolicy(DpTables tables) : tables_(std::move(tables)) {}
  std::string name() const override { return "rlb"; }
  double bid(const Observation& obs) const override {
    return rlb_act(tables_, obs.budget, obs.time_left);
  }
  const DpTables& tables() const { return tables_; }

 private:
  DpTables tables_;
};

// bid = b0 * theta(x); theta = 1 for impressions, pCTR(x) / avg CTR for clicks.
class LinBidPolicy : public Policy {
 public:
  LinBidPolicy(double base_bid, env::Utility utility,
               std::optional<market::ClickModel> click = std::nullopt, double avg_ctr = 0.0);
  std::string name() const override { return "linbid"; }
  double bid(const Observation& obs) const override;
  double base_bid() const { return base_bid_; }

 private:
  double base_bid_;
  env::Utility utility_;
  std::optional<market::ClickModel> click_;
  double avg_ctr_;
};

// The k / n quantiles (k = 1..n) of the prices, nearest rank.
std::vector<double> price_quantiles(std::span<const double> prices, std::size_t n = 20);

struct LinBidTuning {
  double base_bid = 0.0;
  std::vector<double> grid;
  std::vector<double> mean_rewards;
};

// Every grid point plays the same episode tapes; ties go to the smaller b0.
LinBidTuning linbid_tune(env::SimEnv& train_env, std::span<const double> grid,
                         std::size_t episodes, double budget, std::size_t horizon,
                         env::Utility utility, const std::optional<market::ClickModel>& click,
                         double avg_ctr, Rng rng);

}  // namespace rtb::agents
