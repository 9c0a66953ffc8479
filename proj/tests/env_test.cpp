#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rtb/core/error.hpp"
#include "rtb/env/sim_env.hpp"
#include "support/toy_market.hpp"

using namespace rtb;
using namespace rtb::env;
using toy::point_market;

namespace {

MarketComponents noisy_market(std::size_t types, const std::string& split = "train") {
  auto c = point_market(std::vector<double>(types, 0.0), split);
  for (std::size_t i = 0; i < types; ++i) c.price.mu_w[i] = 5.0 + 3.0 * static_cast<double>(i);
  c.price.log_sigma_b = std::log(4.0);
  c.click = market::ClickModel::zeros(types);
  c.click->b = -1.0;
  return c;
}

}  // namespace

TEST_SUITE("env_reset") {
  TEST_CASE("observation is normalised by the training cpm and horizon") {
    EnvConfig cfg;
    cfg.cpm_train = 20.7;
    SimEnv env(point_market({7.0}), cfg, Rng(1));
    const auto o = env.reset(2070.0, 100000);
    CHECK(o.budget == 2070.0);
    CHECK(o.time_left == 100000);
    CHECK(o.budget_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(o.time_norm == 1.0);
  }

  TEST_CASE("horizon one gives a single step") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.reset(10.0, 1);
    const auto out = env.step(3.0);
    CHECK(out.done);
    CHECK(out.next.time_left == 0);
    CHECK_THROWS_AS(env.step(3.0), ConfigError);
  }

  TEST_CASE("same seed gives the same first request") {
    SimEnv a(point_market({1, 2, 3, 4, 5}), {}, Rng(9));
    SimEnv b(point_market({1, 2, 3, 4, 5}), {}, Rng(9));
    CHECK(a.reset(10, 10).x == b.reset(10, 10).x);
  }

  TEST_CASE("invalid constraints are rejected") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    CHECK_THROWS_AS(env.reset(-1.0, 10), ConfigError);
    CHECK_THROWS_AS(env.reset(10.0, 0), ConfigError);
    CHECK_THROWS_AS(env.step(1.0), ConfigError);
  }
}

TEST_SUITE("env_step") {
  TEST_CASE("zero bid loses") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.reset(100.0, 5);
    const auto out = env.step(0.0);
    CHECK_FALSE(out.win);
    CHECK(out.reward == 0.0);
    CHECK(out.cost == 0.0);
    CHECK(out.next.budget == 100.0);
    CHECK(out.next.time_left == 4);
  }

  TEST_CASE("bid above a deterministic price wins and pays the price") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.reset(100.0, 5);
    const auto out = env.step(10.0);
    CHECK(out.price == 7.0);
    CHECK(out.win);
    CHECK(out.reward == 1.0);
    CHECK(out.cost == 7.0);
    CHECK(out.next.budget == 93.0);
  }

  TEST_CASE("bid is clipped to the remaining budget") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.reset(5.0, 5);
    const auto out = env.step(10.0);
    CHECK_FALSE(out.win);
    CHECK(out.cost == 0.0);
    CHECK(out.next.budget == 5.0);
  }

  TEST_CASE("a tie loses") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.reset(100.0, 5);
    CHECK_FALSE(env.step(7.0).win);
  }

  TEST_CASE("non-finite bids are numerical errors") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.reset(100.0, 5);
    CHECK_THROWS_AS(env.step(std::nan("")), NumericalError);
  }

  TEST_CASE("bankrupt advertiser keeps receiving requests until the horizon") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.reset(8.0, 4);
    std::size_t steps = 0, wins = 0;
    while (!env.done()) {
      wins += env.step(1e9).win;
      ++steps;
    }
    CHECK(steps == 4);
    CHECK(wins == 1);
  }
}

TEST_SUITE("env_invariants") {
  TEST_CASE("random episodes conserve budget and respect the step rules") {
    Rng bids(3);
    EnvConfig cfg;
    cfg.utility = Utility::Click;
    SimEnv env(noisy_market(4), cfg, Rng(4));
    for (int ep = 0; ep < 300; ++ep) {
      const double b0 = bids.uniform(0, 200);
      const std::size_t t0 = 1 + bids.uniform_index(50);
      env.reset(b0, t0);
      double costs = 0.0, rewards = 0.0;
      std::size_t steps = 0;
      while (!env.done()) {
        const auto out = env.step(bids.uniform(0, 25));
        costs += out.cost;
        rewards += out.reward;
        ++steps;
        CHECK(out.next.budget >= 0.0);
        CHECK(out.reward <= (out.win ? 1.0 : 0.0));
        CHECK(out.cost == (out.win ? out.price : 0.0));
      }
      CHECK(steps == t0);
      CHECK(std::abs(costs + env.state().budget - b0) <= 1e-9);
      CHECK(rewards <= static_cast<double>(t0));
      CHECK(env.spend() == doctest::Approx(costs));
    }
  }

  TEST_CASE("higher bids on a shared tape win a superset of auctions") {
    SimEnv env(noisy_market(3), {}, Rng(5));
    Rng bids(6);
    for (int ep = 0; ep < 50; ++ep) {
      const Rng tape = Rng(7).split("tape", static_cast<std::uint64_t>(ep));
      std::vector<double> low(40), high(40);
      for (std::size_t i = 0; i < 40; ++i) {
        low[i] = bids.uniform(0, 15);
        high[i] = low[i] + bids.uniform(0, 5);
      }
      // Unlimited budget so clipping cannot reorder the two runs.
      std::vector<bool> win_low, win_high;
      env.reset(1e12, 40, tape);
      for (double b : low) win_low.push_back(env.step(b).win);
      env.reset(1e12, 40, tape);
      for (double b : high) win_high.push_back(env.step(b).win);
      for (std::size_t i = 0; i < 40; ++i) CHECK((!win_low[i] || win_high[i]));
    }
  }

  TEST_CASE("consecutive requests are uncorrelated") {
    SimEnv env(point_market({1, 2, 3, 4, 5, 6}), {}, Rng(8));
    const std::size_t n = 10000;
    auto feature = [](const Observation& o) { return o.x.active[0] < 3 ? 1.0 : 0.0; };
    std::vector<double> f = {feature(env.reset(0.0, n))};
    while (f.size() < n) f.push_back(feature(env.step(0.0).next));
    double mean = 0.0;
    for (double v : f) mean += v / static_cast<double>(f.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      den += (f[i] - mean) * (f[i] - mean);
      if (i + 1 < f.size()) num += (f[i] - mean) * (f[i + 1] - mean);
    }
    CHECK(std::abs(num / den) < 3.0 / std::sqrt(static_cast<double>(f.size())));
  }
}

TEST_SUITE("env_wiring") {
  TEST_CASE("matching tags build, mismatched tags need the override") {
    CHECK_NOTHROW(make_train_env(point_market({7.0}, "train"), {}, Rng(1)));
    CHECK_NOTHROW(make_test_env(point_market({7.0}, "test"), {}, Rng(1)));
    auto mixed = point_market({7.0}, "train");
    mixed.price_split = "test";
    CHECK_THROWS_AS(make_train_env(mixed, {}, Rng(1)), ConfigError);
    CHECK_THROWS_AS(make_test_env(mixed, {}, Rng(1)), ConfigError);
    CHECK_NOTHROW(make_train_env(mixed, {}, Rng(1), true));
  }

  TEST_CASE("metadata carries the split tags and provenance") {
    auto c = point_market({7.0}, "test");
    c.provenance["data_hash"] = "abc";
    const auto env = make_test_env(c, {}, Rng(1));
    const auto m = env.metadata();
    CHECK(m.at("sampler_split") == "test");
    CHECK(m.at("price_split") == "test");
    CHECK(m.at("data_hash") == "abc");
  }

  TEST_CASE("click utility without a click model is a config error") {
    EnvConfig cfg;
    cfg.utility = Utility::Click;
    CHECK_THROWS_AS(SimEnv(point_market({7.0}), cfg, Rng(1)), ConfigError);
  }
}

TEST_SUITE("env_trace") {
  TEST_CASE("trace export has a header and one row per step") {
    SimEnv env(point_market({7.0}), {}, Rng(1));
    env.set_trace(true);
    env.reset(20.0, 3);
    env.step(10.0);
    env.step(0.0);
    env.step(10.0);
    std::ostringstream out;
    write_trace(out, env.trace());
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "step\tx_hash\tbid\tprice\twin\treward\tcost\tbudget\ttime_left");
    CHECK(lines[1].rfind("1\t", 0) == 0);
    CHECK(env.trace()[2].budget == 6.0);
    CHECK(env.trace()[2].time_left == 0);
  }
}
