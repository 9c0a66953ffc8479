#pragma once

// Brute-force values for the budget-constrained auction, written directly from
// the auction rule: the bid is clipped to the budget and wins price d only
// when it is strictly above d.

#include <algorithm>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

inline bool auction_won(double bid, double budget, double price) {
  return std::min(bid, budget) > price;
}

// Best expected wins over every history-dependent policy: at each node of the
// outcome tree the bidder may pick any bid after seeing the whole past.
inline double expectimax(const std::vector<double>& pmf, const std::vector<double>& bids, int t,
                         double budget) {
  if (t == 0) return 0.0;
  double best = -1.0;
  for (double a : bids) {
    double v = 0.0;
    for (std::size_t d = 0; d < pmf.size(); ++d) {
      if (pmf[d] == 0.0) continue;
      const double price = static_cast<double>(d);
      if (auction_won(a, budget, price)) {
        v += pmf[d] * (1.0 + expectimax(pmf, bids, t - 1, budget - price));
      } else {
        v += pmf[d] * expectimax(pmf, bids, t - 1, budget);
      }
    }
    best = std::max(best, v);
  }
  return best;
}

// Literal search over deterministic Markov policies: every assignment of a
// bid index to each reachable (t, budget) state is evaluated.
inline double policy_enumeration(const std::vector<double>& pmf, const std::vector<double>& bids,
                                 int horizon, int budget) {
  // Reachable states with integer budgets.
  std::vector<std::pair<int, int>> states;
  std::vector<std::vector<bool>> seen(horizon + 1, std::vector<bool>(budget + 1, false));
  std::function<void(int, int)> visit = [&](int t, int b) {
    if (t == 0 || seen[t][b]) return;
    seen[t][b] = true;
    states.emplace_back(t, b);
    for (double a : bids) {
      for (std::size_t d = 0; d < pmf.size(); ++d) {
        if (pmf[d] == 0.0) continue;
        const int price = static_cast<int>(d);
        visit(t - 1, auction_won(a, b, price) ? b - price : b);
      }
    }
  };
  visit(horizon, budget);
  // Children ordered before parents so one forward sweep evaluates a policy.
  std::sort(states.begin(), states.end());
  std::map<std::pair<int, int>, std::size_t> slot;
  for (std::size_t i = 0; i < states.size(); ++i) slot[states[i]] = i;
  struct Branch {
    double p;
    double reward;
    long next;  // -1 when t - 1 == 0
  };
  std::vector<std::vector<std::vector<Branch>>> branches(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto [t, b] = states[i];
    for (double a : bids) {
      std::vector<Branch> out;
      for (std::size_t d = 0; d < pmf.size(); ++d) {
        if (pmf[d] == 0.0) continue;
        const int price = static_cast<int>(d);
        const bool won = auction_won(a, b, price);
        const int nb = won ? b - price : b;
        out.push_back({pmf[d], won ? 1.0 : 0.0, t == 1 ? -1L : static_cast<long>(slot.at({t - 1, nb}))});
      }
      branches[i].push_back(std::move(out));
    }
  }

  std::vector<std::size_t> choice(states.size(), 0);
  std::vector<double> value(states.size());
  double best = -1.0;
  while (true) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      double v = 0.0;
      for (const auto& br : branches[i][choice[i]]) {
        v += br.p * (br.reward + (br.next < 0 ? 0.0 : value[static_cast<std::size_t>(br.next)]));
      }
      value[i] = v;
    }
    best = std::max(best, value[slot.at({horizon, budget})]);
    std::size_t i = 0;
    while (i < choice.size() && ++choice[i] == bids.size()) choice[i++] = 0;
    if (i == choice.size()) break;
  }
  return best;
}

}  // namespace oracle
