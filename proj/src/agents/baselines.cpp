#include "rtb/agents/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "rtb/core/error.hpp"
#include "rtb/kernels/kernels.hpp"

namespace rtb::agents {

QPolicy::QPolicy(QNetwork net, ActionGrid grid, std::string name)
    : net_(std::move(net)), grid_(std::move(grid)), name_(std::move(name)) {
  net_.validate();
  if (grid_.size() != net_.actions()) throw ConfigError("action grid and Q-network head disagree");
}

double QPolicy::bid(const Observation& obs) const { return grid_[argmax(q_values(net_, obs))]; }

DpTables rlb_dp_solve(const data::PriceHistogram& m, std::size_t horizon, std::size_t max_budget,
                      std::span<const double> bids, bool parallel) {
  m.check_normalized();
  if (bids.empty()) throw ConfigError("DP needs at least one bid");
  DpTables t;
  t.horizon = horizon;
  t.max_budget = max_budget;
  t.bids.assign(bids.begin(), bids.end());
  const std::size_t row = max_budget + 1;
  t.value.assign((horizon + 1) * row, 0.0);
  t.policy.assign((horizon + 1) * row, 0);
  for (std::size_t s = 1; s <= horizon; ++s) {
    std::span<const double> prev(t.value.data() + (s - 1) * row, row);
    std::span<double> cur(t.value.data() + s * row, row);
    std::span<std::int32_t> pol(t.policy.data() + s * row, row);
    if (parallel) {
      kernels::parallel::bellman_row(m.pmf, t.bids, prev, cur, pol);
    } else {
      kernels::reference::bellman_row(m.pmf, t.bids, prev, cur, pol);
    }
  }
  return t;
}

double rlb_act(const DpTables& tables, double budget, std::size_t time_left) {
  if (time_left == 0 || tables.horizon == 0) return 0.0;
  const std::size_t seg = tables.horizon;
  const std::size_t n = (time_left + seg - 1) / seg;
  std::size_t t = time_left % seg;
  if (t == 0) t = seg;
  const double share = std::max(0.0, budget) / static_cast<double>(n);
  const auto b = static_cast<std::size_t>(
      std::llround(std::min(share, static_cast<double>(tables.max_budget))));
  const double bid = tables.bids[static_cast<std::size_t>(tables.action(t, b))];
  return std::min(bid, std::max(0.0, budget));
}

std::size_t rlb_budget_rows(double alpha_max, double cpm, std::size_t horizon) {
  return 2 * static_cast<std::size_t>(std::ceil(alpha_max * cpm * static_cast<double>(horizon) / 1000.0));
}

LinBidPolicy::LinBidPolicy(double base_bid, env::Utility utility,
                           std::optional<market::ClickModel> click, double avg_ctr)
    : base_bid_(base_bid), utility_(utility), click_(std::move(click)), avg_ctr_(avg_ctr) {
  if (!(base_bid >= 0.0)) throw ConfigError("LinBid base bid must be non-negative");
  if (utility_ == env::Utility::Click && (!click_ || !(avg_ctr_ > 0.0))) {
    throw ConfigError("click-utility LinBid needs a click model and a positive average CTR");
  }
}

double LinBidPolicy::bid(const Observation& obs) const {
  if (utility_ == env::Utility::Impression) return base_bid_;
  return base_bid_ * click_->probability(obs.x) / avg_ctr_;
}

std::vector<double> price_quantiles(std::span<const double> prices, std::size_t n) {
  if (prices.empty() || n == 0) throw DataError("price quantiles need prices");
  std::vector<double> sorted(prices.begin(), prices.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  for (std::size_t k = 1; k <= n; ++k) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(static_cast<double>(k) * static_cast<double>(sorted.size()) / static_cast<double>(n)));
    out.push_back(sorted[std::max<std::size_t>(rank, 1) - 1]);
  }
  return out;
}

LinBidTuning linbid_tune(env::SimEnv& train_env, std::span<const double> grid,
                         std::size_t episodes, double budget, std::size_t horizon,
                         env::Utility utility, const std::optional<market::ClickModel>& click,
                         double avg_ctr, Rng rng) {
  if (grid.empty() || episodes == 0) throw ConfigError("LinBid tuning needs a grid and episodes");
  LinBidTuning out;
  out.grid.assign(grid.begin(), grid.end());
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const LinBidPolicy policy(grid[g], utility, click, avg_ctr);
    double total = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
      auto obs = train_env.reset(budget, horizon, rng.split("episode", e));
      while (!train_env.done()) obs = train_env.step(policy.bid(obs)).next;
      total += train_env.total_reward();
    }
    out.mean_rewards.push_back(total / static_cast<double>(episodes));
    const bool better = out.mean_rewards[g] > out.mean_rewards[best] ||
                        (out.mean_rewards[g] == out.mean_rewards[best] && grid[g] < grid[best]);
    if (better) best = g;
  }
  out.base_bid = grid[best];
  return out;
}

}  // namespace rtb::agents
