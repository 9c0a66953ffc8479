#include "rtb/agents/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "rtb/core/adam.hpp"
#include "rtb/core/error.hpp"

namespace rtb::agents {

namespace {

std::vector<Observation> states_of(std::span<const Transition> batch, bool next) {
  std::vector<Observation> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back(next ? t.next : t.state);
  return out;
}

AdamConfig adam_with(double lr) {
  AdamConfig c;
  c.learning_rate = lr;
  return c;
}

// Bellman targets r + gamma * max_a Q(s', a) under one network.
std::vector<double> max_targets(const QNetwork& net, std::span<const Transition> batch,
                                double gamma, double reward_scale) {
  const auto next = states_of(batch, true);
  const auto fq = q_forward(net, next);
  std::vector<double> y(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    y[r] = reward_scale * batch[r].reward;
    if (!batch[r].done) {
      const auto row = fq.q.row(r);
      y[r] += gamma * *std::max_element(row.begin(), row.end());
    }
  }
  return y;
}

double residual(const QNetwork& net, std::span<const Transition> batch, double gamma,
                double reward_scale) {
  if (batch.empty()) return 0.0;
  const auto y = max_targets(net, batch, gamma, reward_scale);
  const auto fq = q_forward(net, states_of(batch, false));
  double s = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const double d = fq.q.at(r, batch[r].action) - y[r];
    s += d * d;
  }
  return s / static_cast<double>(batch.size());
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (n > items_.size()) throw ConfigError("replay batch larger than the buffer");
  std::vector<std::size_t> out;
  out.reserve(n);
  if (2 * n > items_.size()) {
    std::vector<std::size_t> all(items_.size());
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(std::span<std::size_t>(all));
    all.resize(n);
    return all;
  }
  std::unordered_set<std::size_t> seen;
  while (out.size() < n) {
    const std::size_t i = rng.uniform_index(items_.size());
    if (seen.insert(i).second) out.push_back(i);
  }
  return out;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  std::vector<Transition> out;
  for (auto i : sample_indices(n, rng)) out.push_back(items_[i]);
  return out;
}

TdLoss regression_loss(const QNetwork& net, std::span<const Transition> batch,
                       std::span<const double> targets) {
  const auto states = states_of(batch, false);
  const auto fq = q_forward(net, states, true);
  const std::size_t n = batch.size();
  Tensor seed(fq.q.shape());
  TdLoss out;
  for (std::size_t r = 0; r < n; ++r) {
    const double d = fq.q.at(r, batch[r].action) - targets[r];
    out.loss += d * d / static_cast<double>(n);
    seed.at(r, batch[r].action) = 2.0 * d / static_cast<double>(n);
  }
  out.targets.assign(targets.begin(), targets.end());
  out.grad = q_backward(net, states, fq, seed);
  return out;
}

TdLoss ddqn_loss(const QNetwork& online, const QNetwork& target, std::span<const Transition> batch,
                 double gamma, double reward_scale) {
  const auto next = states_of(batch, true);
  const auto f_online = q_forward(online, next);
  const auto f_target = q_forward(target, next);
  std::vector<double> y(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    y[r] = reward_scale * batch[r].reward;
    if (!batch[r].done) y[r] += gamma * f_target.q.at(r, argmax(f_online.q.row(r)));
  }
  return regression_loss(online, batch, y);
}

double draw_alpha(const DdqnConfig& c, Rng& rng) {
  if (c.alpha_mode == "log2") return std::exp2(rng.uniform(c.alpha_low, c.alpha_high));
  if (c.alpha_mode == "linear") return std::max(0.0, rng.uniform(c.alpha_low, c.alpha_high));
  if (c.alpha_mode == "fixed") return c.alpha_fixed;
  throw ConfigError("unknown alpha_mode '" + c.alpha_mode + "'");
}

DdqnResult train_ddqn(const EnvFactory& make_env, const ActionGrid& grid, QNetwork init,
                      const DdqnConfig& config, Rng rng) {
  if (config.workers == 0 || config.batch_size == 0 || config.target_sync == 0 ||
      config.horizon == 0 || !(config.learning_rate > 0.0)) {
    throw ConfigError("invalid DDQN configuration");
  }
  if (grid.size() != init.actions()) throw ConfigError("action grid and Q-network head disagree");
  init.validate();

  DdqnResult out;
  out.net = std::move(init);
  QNetwork target = out.net;
  QNetwork last_good = out.net;
  AdamState adam;
  const AdamConfig acfg = adam_with(config.learning_rate);
  ReplayBuffer buffer(config.capacity);
  Rng batch_rng = rng.split("replay");

  const std::size_t w = config.workers;
  std::vector<env::SimEnv> envs;
  std::vector<Rng> explore, alpha_rng;
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < w; ++i) {
    envs.push_back(make_env(i));
    if (envs.back().config().cpm_train != config.cpm_train) {
      throw ConfigError("worker environment normalises with a different cpm than the training budget");
    }
    explore.push_back(rng.split("explore", i));
    alpha_rng.push_back(rng.split("alpha", i));
  }
  auto budget_for = [&](std::size_t i) {
    return draw_alpha(config, alpha_rng[i]) * config.cpm_train *
           static_cast<double>(config.horizon) / 1000.0;
  };
  for (std::size_t i = 0; i < w; ++i) obs.push_back(envs[i].reset(budget_for(i), config.horizon));

  while (out.steps < config.total_steps) {
    const double eps =
        epsilon_schedule(static_cast<double>(out.steps), config.epsilon_decay, config.epsilon_floor);
    const auto fq = q_forward(out.net, obs);
    for (std::size_t i = 0; i < w; ++i) {
      std::size_t a;
      if (explore[i].uniform() < eps) {
        a = explore[i].uniform_index(grid.size());
      } else {
        a = argmax(fq.q.row(i));
      }
      const auto step = envs[i].step(grid[a]);
      buffer.push({obs[i], a, step.reward, step.next, step.done});
      if (step.done) {
        out.episode_rewards.push_back(envs[i].total_reward());
        obs[i] = envs[i].reset(budget_for(i), config.horizon);
      } else {
        obs[i] = step.next;
      }
    }
    out.steps += w;

    if (buffer.size() >= std::max(config.warmup, config.batch_size)) {
      const auto batch = buffer.sample(config.batch_size, batch_rng);
      const auto td = ddqn_loss(out.net, target, batch, config.gamma, config.reward_scale);
      if (!std::isfinite(td.loss) || !td.grad.all_finite()) {
        out.net = last_good;
        out.diverged = true;
        out.message = "TD loss became non-finite after " + std::to_string(out.updates) + " updates";
        return out;
      }
      last_good = out.net;
      adam_step(out.net.tensors(), std::as_const(td.grad).tensors(), adam, acfg);
      out.losses.push_back(td.loss);
      ++out.updates;
      if (out.updates % config.target_sync == 0) target = out.net;
    }
  }
  return out;
}

TransitionSet fdqi_build_transitions(std::span<const data::MarketSample> records,
                                     const ActionGrid& grid, std::size_t horizon, double cpm_train,
                                     env::Utility utility) {
  if (records.empty()) throw DataError("no logged auctions to build transitions from");
  if (horizon == 0) throw ConfigError("episode horizon must be positive");
  TransitionSet out;
  std::size_t length = horizon;
  std::size_t chunks = records.size() / horizon;
  if (chunks == 0) {
    length = records.size();
    chunks = 1;
    out.warning = "only " + std::to_string(records.size()) +
                  " logged auctions; using one episode shorter than the horizon";
  }
  const double t0 = static_cast<double>(length);
  for (std::size_t c = 0; c < chunks; ++c) {
    const auto chunk = records.subspan(c * length, length);
    double budget = 0.0;
    for (const auto& s : chunk) budget += s.win ? s.price : 0.0;
    auto observe = [&](std::size_t i, double b) {
      Observation o;
      o.x = chunk[std::min(i, length - 1)].x;
      o.budget = b;
      o.time_left = length - i;
      o.budget_norm = b / (cpm_train * t0 / 1000.0);
      o.time_norm = static_cast<double>(length - i) / t0;
      return o;
    };
    double b = budget;
    for (std::size_t i = 0; i < length; ++i) {
      const auto& s = chunk[i];
      Transition t;
      t.state = observe(i, b);
      t.action = grid.nearest(s.bid);
      const bool won = s.win;
      t.reward = won && (utility == env::Utility::Impression || s.click) ? 1.0 : 0.0;
      if (won) b -= s.price;
      t.done = i + 1 == length;
      t.next = observe(i + 1, b);
      out.transitions.push_back(std::move(t));
    }
    out.final_budgets.push_back(b);
  }
  out.episodes = chunks;
  return out;
}

FdqiResult fdqi_train(std::span<const Transition> transitions, QNetwork init,
                      const FdqiConfig& config, Rng rng) {
  if (transitions.empty()) throw DataError("fitted Q-iteration needs at least one transition");
  if (config.iterations == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw ConfigError("invalid fitted Q-iteration configuration");
  }
  init.validate();
  std::vector<std::size_t> order(transitions.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = rng.split("holdout");
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto n_hold = static_cast<std::size_t>(config.holdout * static_cast<double>(order.size()));
  std::vector<Transition> train, hold;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_hold ? hold : train).push_back(transitions[order[i]]);
  }
  const std::vector<Transition>& judge = hold.empty() ? train : hold;

  FdqiResult out;
  out.net = init;
  QNetwork net = std::move(init);
  double best = INFINITY;
  Rng batch_rng = rng.split("batches");
  const AdamConfig acfg = adam_with(config.learning_rate);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const auto y = max_targets(net, train, config.gamma, config.reward_scale);
    AdamState adam;
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), 0);
    bool finite = true;
    for (std::size_t e = 0; e < config.epochs && finite; ++e) {
      batch_rng.shuffle(std::span<std::size_t>(idx));
      for (std::size_t start = 0; start < idx.size(); start += config.batch_size) {
        const std::size_t end = std::min(idx.size(), start + config.batch_size);
        std::vector<Transition> b;
        std::vector<double> yb;
        for (std::size_t k = start; k < end; ++k) {
          b.push_back(train[idx[k]]);
          yb.push_back(y[idx[k]]);
        }
        const auto loss = regression_loss(net, b, yb);
        if (!std::isfinite(loss.loss) || !loss.grad.all_finite()) {
          finite = false;
          break;
        }
        adam_step(net.tensors(), std::as_const(loss.grad).tensors(), adam, acfg);
      }
    }
    const double td = finite ? residual(net, judge, config.gamma, config.reward_scale) : NAN;
    out.holdout_td.push_back(td);
    if (!std::isfinite(td) || !net.all_finite()) {
      out.diverged = true;
      break;
    }
    if (td < best) {
      best = td;
      out.net = net;
      out.best_iteration = it;
    }
  }
  return out;
}

}  // namespace rtb::agents
