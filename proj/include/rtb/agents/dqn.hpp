#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rtb/agents/qnetwork.hpp"
#include "rtb/env/sim_env.hpp"

namespace rtb::agents {

struct Transition {
  Observation state;
  std::size_t action = 0;
  double reward = 0.0;
  Observation next;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 2500000);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  // Distinct slots, uniformly. Throws ConfigError when n exceeds size().
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

struct TdLoss {
  double loss = 0.0;  // mean squared TD error
  std::vector<double> targets;
  QNetwork grad;
};

// Double-DQN target r + gamma * Q_target(s', argmax_a Q_online(s', a)); done
// rows use r. Rewards are multiplied by reward_scale first.
TdLoss ddqn_loss(const QNetwork& online, const QNetwork& target, std::span<const Transition> batch,
                 double gamma = 1.0, double reward_scale = 1.0);

// Mean squared error of Q(s, a) against fixed targets, with gradient.
TdLoss regression_loss(const QNetwork& net, std::span<const Transition> batch,
                       std::span<const double> targets);

struct DdqnConfig {
  std::size_t total_steps = 200000;  // environment transitions over all workers
  std::size_t workers = 16;
  std::size_t warmup = 2000;
  std::size_t target_sync = 5000;  // optimizer updates between target copies
  std::size_t batch_size = 32;
  std::size_t capacity = 2500000;
  double learning_rate = 1e-4;
  double gamma = 1.0;
  double epsilon_decay = 500000.0;
  double epsilon_floor = 0.2;
  std::size_t horizon = 1000;
  double cpm_train = 1.0;
  // Episode budget alpha * cpm_train * horizon / 1000 with alpha drawn as
  // 2^U(lo, hi) ("log2"), U(lo, hi) clipped at 0 ("linear"), or alpha_fixed.
  std::string alpha_mode = "log2";
  double alpha_low = -2.0;
  double alpha_high = 2.0;
  double alpha_fixed = 1.0;
  double reward_scale = 1.0;
};

struct DdqnResult {
  QNetwork net;
  std::vector<double> losses;           // one per update
  std::vector<double> episode_rewards;  // finished episodes, worker order per round
  std::size_t updates = 0;
  std::size_t steps = 0;
  bool diverged = false;  // net then holds the last finite parameters
  std::string message;
};

using EnvFactory = std::function<env::SimEnv(std::size_t worker)>;

double draw_alpha(const DdqnConfig& config, Rng& rng);

// Synchronous rounds: every worker steps once with the current parameters,
// transitions are appended in worker order, then one optimizer update.
DdqnResult train_ddqn(const EnvFactory& make_env, const ActionGrid& grid, QNetwork init,
                      const DdqnConfig& config, Rng rng);

struct TransitionSet {
  std::vector<Transition> transitions;
  std::size_t episodes = 0;
  std::vector<double> final_budgets;  // replayed budget left at the end of each episode
  std::string warning;
};

// Logged auctions, time ordered, cut into consecutive horizon-length episodes.
// Each episode's budget is its realised spend; the logged bid maps to the
// nearest grid action.
TransitionSet fdqi_build_transitions(std::span<const data::MarketSample> records,
                                     const ActionGrid& grid, std::size_t horizon, double cpm_train,
                                     env::Utility utility = env::Utility::Impression);

struct FdqiConfig {
  std::size_t iterations = 10;
  std::size_t epochs = 20;  // regression passes per iteration
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double gamma = 1.0;
  double holdout = 0.1;  // fraction kept aside for the TD-error model choice
  double reward_scale = 1.0;
};

struct FdqiResult {
  QNetwork net;
  std::vector<double> holdout_td;  // after each iteration
  std::size_t best_iteration = 0;
  bool diverged = false;
};

FdqiResult fdqi_train(std::span<const Transition> transitions, QNetwork init,
                      const FdqiConfig& config, Rng rng);

}  // namespace rtb::agents
