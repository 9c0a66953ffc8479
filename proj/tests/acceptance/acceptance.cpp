// End-to-end acceptance run: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance            run everything
//   acceptance --only 5   run a subset

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "rtb/agents/baselines.hpp"
#include "rtb/agents/dqn.hpp"
#include "rtb/core/error.hpp"
#include "rtb/data/synthetic.hpp"
#include "rtb/harness/pipeline.hpp"
#include "support/dp_oracle.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_market.hpp"

using namespace rtb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- 1

// 1 for every relu unit that is on, per row, over all hidden layers.
std::vector<bool> relu_mask(const MlpParams& p, const Tensor& x) {
  const auto fwd = mlp_forward(p, x, true);
  std::vector<bool> mask;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (p.layers[l].activation != Activation::Relu) continue;
    for (double v : fwd.trace.activations[l].values()) mask.push_back(v > 0.0);
  }
  return mask;
}

// Five-point central difference; false when a relu flips inside the stencil.
bool five_point(const std::function<double()>& f, double& slot, double h,
                const std::function<std::vector<bool>()>& mask, double& out) {
  const double saved = slot;
  const auto base = mask();
  double v[4];
  const double offsets[4] = {2 * h, h, -h, -2 * h};
  for (int i = 0; i < 4; ++i) {
    slot = saved + offsets[i];
    if (mask() != base) {
      slot = saved;
      return false;
    }
    v[i] = f();
  }
  slot = saved;
  out = (-v[0] + 8 * v[1] - 8 * v[2] + v[3]) / (12 * h);
  return true;
}

Outcome criterion_autodiff() {
  std::size_t checked = 0, skipped = 0, gp_checked = 0;
  double worst = 0.0, worst_gp = 0.0;
  const Activation acts[3] = {Activation::Relu, Activation::Tanh, Activation::Identity};
  for (std::uint64_t c = 0; c < 200; ++c) {
    Rng rng(c, "autodiff");
    const std::size_t layers = 1 + rng.uniform_index(3);
    std::vector<std::size_t> dims = {1 + rng.uniform_index(32)};
    for (std::size_t l = 0; l + 1 < layers; ++l) dims.push_back(1 + rng.uniform_index(32));
    const std::size_t batch = 1 + rng.uniform_index(3);
    auto build = [&](std::size_t out) {
      auto d = dims;
      d.push_back(out);
      auto p = make_mlp(d, Activation::Tanh, Activation::Identity, rng);
      for (auto& layer : p.layers) {
        for (auto& b : layer.bias.values()) b = rng.uniform(-0.5, 0.5);
      }
      for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) p.layers[l].activation = acts[rng.uniform_index(3)];
      if (rng.bernoulli(0.3)) p.layers.back().activation = Activation::Tanh;
      return p;
    };
    Tensor x({batch, dims[0]});
    for (auto& v : x.values()) v = rng.uniform(-1, 1);

    // Parameter and input gradients of seed . output.
    auto p = build(1 + rng.uniform_index(4));
    Tensor seed({batch, p.output_dim()});
    for (auto& v : seed.values()) v = rng.uniform(-1, 1);
    auto objective = [&] {
      const auto out = mlp_forward(p, x, false).output;
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += seed[i] * out[i];
      return s;
    };
    auto mask = [&] { return relu_mask(p, x); };
    const auto g = backward(mlp_forward(p, x, true).trace, seed);
    auto params = p.tensors();
    auto grads = g.params.tensors();
    auto check = [&](double analytic, double& slot, const std::function<double()>& f, double& worst_out,
                     std::size_t& count) {
      double fd = 0.0;
      if (!five_point(f, slot, 1e-3, mask, fd)) {
        ++skipped;
        return;
      }
      ++count;
      worst_out = std::max(worst_out, oracle::relative_error(analytic, fd));
    };
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t j = 0; j < params[t]->size(); ++j) check((*grads[t])[j], (*params[t])[j], objective, worst, checked);
    }
    for (std::size_t j = 0; j < x.size(); ++j) check(g.input[j], x[j], objective, worst, checked);

    // Gradient-penalty gradients of a scalar critic.
    p = build(1);
    const auto gp = input_gradient_norm_grad(p, x);
    auto penalty = [&] { return input_gradient_norm_grad(p, x).weighted_penalty; };
    params = p.tensors();
    grads = gp.grad.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t j = 0; j < params[t]->size(); ++j) check((*grads[t])[j], (*params[t])[j], penalty, worst_gp, gp_checked);
    }
  }
  const bool enough = skipped * 100 < checked + gp_checked;
  return {worst < 1e-6 && worst_gp < 1e-4 && enough,
          fmt("max rel err %.2e over %zu grads, penalty %.2e over %zu, %zu skipped at relu kinks", worst, checked,
              worst_gp, gp_checked, skipped)};
}

// ---------------------------------------------------------------- 2

Outcome criterion_dp() {
  std::size_t instances = 0, enumerated = 0;
  double worst = 0.0;
  for (std::size_t dmax = 1; dmax <= 3; ++dmax) {
    Rng rng(dmax, "dp-pmf");
    std::vector<std::vector<double>> pmfs;
    pmfs.emplace_back(dmax + 1, 1.0 / static_cast<double>(dmax + 1));
    std::vector<double> skew(dmax + 1);
    double total = 0.0;
    for (auto& p : skew) total += (p = rng.uniform(0.05, 1.0));
    for (auto& p : skew) p /= total;
    pmfs.push_back(skew);
    const std::vector<std::vector<double>> bid_sets = {
        {static_cast<double>(dmax) + 0.5}, {0.0, 1.5, static_cast<double>(dmax) + 1.0}, {0.5, 1.0, 1.5, 2.5, 3.5}};
    for (const auto& pmf : pmfs) {
      const data::PriceHistogram hist{pmf};
      for (const auto& bids : bid_sets) {
        for (std::size_t T = 1; T <= 4; ++T) {
          const auto tables = agents::rlb_dp_solve(hist, T, 6, bids);
          for (std::size_t B = 0; B <= 6; ++B) {
            ++instances;
            const double brute = oracle::expectimax(pmf, bids, static_cast<int>(T), static_cast<double>(B));
            worst = std::max(worst, std::abs(tables.v(T, B) - brute));
            if (T <= 2 || bids.size() == 1) {
              ++enumerated;
              const double markov = oracle::policy_enumeration(pmf, bids, static_cast<int>(T), static_cast<int>(B));
              worst = std::max(worst, std::abs(tables.v(T, B) - markov));
            }
          }
        }
      }
    }
  }
  return {worst < 1e-9 && instances >= 500,
          fmt("%zu instances vs exhaustive search (%zu also by Markov policy enumeration), max diff %.1e",
              instances, enumerated, worst)};
}

// ---------------------------------------------------------------- 3

Outcome criterion_tobit() {
  double worst = 0.0;
  std::string per_seed;
  bool censoring_ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    data::SyntheticMarketSpec spec;
    spec.records = 10000;
    spec.fields = {{"region", 5}};
    spec.price_mean.intercept = 40;
    spec.price_mean.coefficients = {{0, 8, 16, 24, 32}};
    spec.price_log_sigma.intercept = std::log(10.0);
    spec.logging = {"uniform", 0.0, 30.0, 118.0};
    const auto market = data::generate_synthetic_market(spec, Rng(seed, "tobit"));
    const auto dict = data::FeatureDict::build(market.records, 1, spec.field_columns());
    const auto samples = data::to_samples(market.records, dict);
    double censored = 0;
    for (const auto& s : samples) censored += !s.win;
    censored /= static_cast<double>(samples.size());
    censoring_ok = censoring_ok && std::abs(censored - 0.3) < 0.05;
    const std::span<const data::MarketSample> all(samples);
    market::PriceTrainConfig cfg;
    cfg.learning_rates = {0.1};
    cfg.l2_grid = {1e-8};
    const auto fit = market::train_price_model(all.first(8000), all.subspan(8000), dict.width(), cfg, Rng(seed, "fit"));
    double sk = 0, sm = 0, skk = 0, skm = 0, sigma = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      const data::BidRequest x{{dict.index_of(0, data::synthetic_category("region", k))}};
      const double mu = fit.model.mu(x);
      sk += static_cast<double>(k);
      sm += mu;
      skk += static_cast<double>(k * k);
      skm += static_cast<double>(k) * mu;
      sigma += std::exp(fit.model.log_sigma(x)) / 5.0;
    }
    const double slope = (5 * skm - sk * sm) / (5 * skk - sk * sk);
    const double intercept = (sm - slope * sk) / 5;
    const double err = std::max({std::abs(slope - 8) / 8, std::abs(intercept - 40) / 40, std::abs(sigma - 10) / 10});
    worst = std::max(worst, err);
    per_seed += fmt(" %.1f%%/%.3f", 100 * censored, err);
  }
  return {worst < 0.05 && censoring_ok,
          fmt("worst relative error %.3f (censored/error per seed:%s)", worst, per_seed.c_str())};
}

// ---------------------------------------------------------------- 4

Outcome criterion_market_model() {
  const auto spec = data::SyntheticMarketSpec::from_json(slurp(fs::path(RTB_SOURCE_DIR) / "configs/toy_market.json"));
  auto market = data::generate_synthetic_market(spec, Rng(spec.seed, "synth"));
  data::IngestOptions opts;
  opts.min_count = 20;
  opts.fields = spec.field_columns();
  const auto ds = data::build_dataset(std::move(market.records), opts);
  auto featurize = [&](const std::vector<data::RawRecord>& rs) {
    std::vector<data::BidRequest> out;
    for (const auto& r : rs) out.push_back(data::featurize(r, ds.dict));
    return out;
  };
  const auto train = featurize(ds.train), val = featurize(ds.validation), test = featurize(ds.test);
  market::WganConfig w;
  w.max_iterations = 3000;
  w.min_iterations = 3000;
  w.learning_rate = 2e-4;
  w.batch_size = 256;
  w.noise_dim = 16;
  w.generator_hidden = {32, 32};
  w.critic_hidden = {32, 32};
  const auto trained = market::train_market_state_model(train, val, ds.dict.layout(), w, Rng(1));
  const market::EmpiricalSampler held_out(test);
  const market::GeneratorSampler model(trained.model);
  const market::UniformSampler uniform(ds.dict.layout());
  const auto rows = harness::mmd_benchmark(test, {{"test", &held_out}, {"model", &model}, {"uniform", &uniform}},
                                           200, 100, 1.0, Rng(2));
  const double t = rows[0].mean, m = rows[1].mean, u = rows[2].mean;
  return {m <= 2 * t && m <= 0.2 * u,
          fmt("test %.3f, model %.3f, uniform %.3f after %zu iterations: model/test %.2f (<= 2), model/uniform %.3f (<= 0.2)",
              t, m, u, trained.diagnostics.iterations, m / t, m / u)};
}

// ---------------------------------------------------------------- 5, 7

// Two request types clearing at 3 and 7, 100 steps. cpm 3000 puts alpha = 1
// at a budget of 300.
constexpr double kToyCpm = 3000.0;
constexpr std::size_t kToyHorizon = 100;

env::SimEnv toy_env(Rng rng) {
  env::EnvConfig ec;
  ec.cpm_train = kToyCpm;
  return env::SimEnv(toy::point_market({3.0, 7.0}), ec, rng);
}

struct ToyAgent {
  agents::QNetwork net;
  agents::ActionGrid grid;
  double seconds = 0.0;
};

const ToyAgent& toy_agent() {
  static const ToyAgent agent = [] {
    const auto t0 = std::chrono::steady_clock::now();
    ToyAgent a;
    a.grid = agents::ActionGrid::for_max_price(7.0);
    agents::DdqnConfig c;
    c.total_steps = 200000;
    c.workers = 16;
    c.warmup = 2000;
    c.target_sync = 500;
    c.batch_size = 64;
    c.learning_rate = 1e-3;
    c.horizon = kToyHorizon;
    c.cpm_train = kToyCpm;
    c.epsilon_decay = 20000;
    c.reward_scale = 0.1;
    Rng init_rng(1);
    auto init = agents::init_qnetwork(2, init_rng);
    agents::init_f1_from_price(init, toy::point_market({3.0, 7.0}).price, 7.0);
    const auto out = agents::train_ddqn([](std::size_t w) { return toy_env(Rng(10).split("worker", w)); }, a.grid,
                                        init, c, Rng(5));
    if (out.diverged) throw NumericalError("toy Ex-DDQN diverged: " + out.message);
    a.net = out.net;
    a.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return a;
  }();
  return agent;
}

Outcome criterion_exddqn() {
  const auto& a = toy_agent();
  const agents::QPolicy policy(a.net, a.grid);
  const auto grid = agents::ActionGrid::for_max_price(7.0);
  const auto dp = agents::rlb_dp_solve(toy::point_histogram({3.0, 7.0}), kToyHorizon, 1200, grid.bids);
  const double budget = harness::budget_for(1.0, kToyCpm, kToyHorizon);
  const auto s = harness::evaluate_policy(toy_env(Rng(99)), policy, budget, kToyHorizon, 100, Rng(7));
  const double optimum = dp.v(kToyHorizon, static_cast<std::size_t>(budget));
  const double ratio = s.mean / optimum;
  return {ratio >= 0.95 && s.aborted.empty(),
          fmt("alpha 1 (budget %.0f): mean %.2f over 100 episodes vs DP %.3f, ratio %.3f (training %.0f s)", budget,
              s.mean, optimum, ratio, a.seconds)};
}

Outcome criterion_monotone() {
  const auto& a = toy_agent();
  const agents::QPolicy policy(a.net, a.grid);
  harness::EvalConfig cfg;
  cfg.horizon = kToyHorizon;
  cfg.repeats = 100;
  cfg.seed = 7;
  const auto table = harness::budget_sweep({&policy}, cfg, kToyCpm, toy_env(Rng(99)));
  bool ok = true;
  std::string series;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    series += fmt(" %.2f", table.rows[i].reward_pct);
    if (i && table.rows[i].reward_pct < table.rows[i - 1].reward_pct) ok = false;
  }
  return {ok, "reward % at alpha 1/4..4:" + series};
}

// ---------------------------------------------------------------- 6

Outcome criterion_env_invariants() {
  std::size_t steps = 0, violations = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (!violations++) first = what;
  };
  for (std::uint64_t e = 0; e < 10000; ++e) {
    Rng rng(e, "invariants");
    const std::size_t types = 1 + rng.uniform_index(4);
    auto mc = toy::point_market(std::vector<double>(types, 0.0));
    for (auto& mu : mc.price.mu_w) mu = rng.uniform(-2, 20);
    mc.price.log_sigma_b = rng.uniform(-3, 2);
    mc.click = market::ClickModel::zeros(types);
    mc.click->b = rng.uniform(-3, 1);
    env::EnvConfig ec;
    ec.cpm_train = rng.uniform(100, 5000);
    ec.utility = rng.bernoulli(0.5) ? env::Utility::Click : env::Utility::Impression;
    env::SimEnv env(mc, ec, rng.split("env"));
    const std::size_t horizon = 1 + rng.uniform_index(60);
    const double b0 = rng.bernoulli(0.1) ? 0.0 : rng.uniform(0, 300);
    auto obs = env.reset(b0, horizon);
    double spent = 0.0;
    std::size_t t = 0;
    while (!env.done()) {
      const double bid = rng.bernoulli(0.1) ? 1e9 : rng.uniform(0, 25);
      const double before = env.state().budget;
      const auto out = env.step(bid);
      ++t;
      spent += out.cost;
      if (out.reward > (out.win ? 1.0 : 0.0)) fail(fmt("episode %llu: reward without a win", (unsigned long long)e));
      if (env.state().budget < 0.0 || out.next.budget < 0.0) fail(fmt("episode %llu: negative budget", (unsigned long long)e));
      if (out.win && out.cost > before) fail(fmt("episode %llu: spent more than the budget", (unsigned long long)e));
      if (out.done != (t == horizon)) fail(fmt("episode %llu: done at step %zu of %zu", (unsigned long long)e, t, horizon));
      obs = out.next;
    }
    steps += t;
    if (t != horizon) fail(fmt("episode %llu: length %zu, expected %zu", (unsigned long long)e, t, horizon));
    if (std::abs(b0 - spent - env.state().budget) > 1e-9) fail(fmt("episode %llu: budget not conserved", (unsigned long long)e));
    if (std::abs(env.spend() - spent) > 1e-9) fail(fmt("episode %llu: spend mismatch", (unsigned long long)e));
  }
  return {violations == 0, fmt("10000 episodes, %zu steps, %zu violations%s%s", steps, violations,
                               violations ? ", first: " : "", first.c_str())};
}

// ---------------------------------------------------------------- 8

Outcome criterion_formulas() {
  // 0.2 + 0.8 * exp(-t / 500000)
  const double e0 = agents::epsilon_schedule(0.0);
  const double e1 = agents::epsilon_schedule(5e5);
  const double e2 = agents::epsilon_schedule(1e9);
  const double b0 = harness::budget_for(1.0, 20.7, 100000);
  const bool ok = std::abs(e0 - 1.0) < 1e-6 && std::abs(e1 - 0.4943035529371539) < 1e-6 &&
                  std::abs(e2 - 0.2) < 1e-6 && std::abs(b0 - 2070.0) < 1e-9;
  return {ok, fmt("epsilon %.6f, %.6f, %.6f; budget %.6f", e0, e1, e2, b0)};
}

// ---------------------------------------------------------------- 9

void run_pipeline(const fs::path& dir) {
  namespace h = harness;
  const auto cfg = h::Config::load(fs::path(RTB_SOURCE_DIR) / "configs/smoke.conf", h::Config::profile("desk"));
  data::IngestOptions opts;
  opts.min_count = 20;
  h::run_synth(fs::path(RTB_SOURCE_DIR) / "configs/toy_market.json", dir / "data", opts);
  for (auto split : {data::Split::Train, data::Split::Test}) {
    const std::string tag = data::to_string(split);
    h::run_train_market(dir / "data", split, dir / ("market-" + tag + ".ckpt"), cfg);
    h::run_train_price(dir / "data", split, dir / ("price-" + tag + ".ckpt"), cfg);
    h::run_train_click(dir / "data", split, dir / ("click-" + tag + ".ckpt"), cfg);
  }
  const std::vector<fs::path> train_env = {dir / "market-train.ckpt", dir / "price-train.ckpt"};
  const std::vector<fs::path> test_env = {dir / "market-test.ckpt", dir / "price-test.ckpt"};
  h::run_train_exddqn(train_env, dir / "exddqn.ckpt", cfg);
  h::run_train_fdqi(dir / "data", dir / "fdqi.ckpt", cfg);
  h::run_tune_linbid(dir / "data", train_env, dir / "linbid.ckpt", cfg);
  h::run_solve_rlb(dir / "data", dir / "rlb.ckpt", cfg);
  const std::vector<fs::path> agents = {dir / "exddqn.ckpt", dir / "fdqi.ckpt", dir / "linbid.ckpt", dir / "rlb.ckpt"};
  h::run_evaluate(test_env, agents, cfg, dir / "report.tsv", h::ReportFormat::Tsv);
  h::run_evaluate(test_env, agents, cfg, dir / "report.txt", h::ReportFormat::Text);
}

Outcome criterion_determinism() {
  TempDir a("rtb-accept-a"), b("rtb-accept-b");
  run_pipeline(a.path());
  run_pipeline(b.path());
  std::size_t files = 0, differing = 0, checkpoints = 0, unstable = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), a.path());
    const auto bytes = slurp(entry.path());
    if (bytes != slurp(b.path() / rel)) ++differing;
    if (entry.path().extension() == ".ckpt") {
      ++checkpoints;
      if (harness::serialize_checkpoint(harness::load_checkpoint(entry.path())) != bytes) ++unstable;
    }
  }
  const bool reports_equal = slurp(a / "report.tsv") == slurp(b / "report.tsv") &&
                             slurp(a / "report.txt") == slurp(b / "report.txt") &&
                             !slurp(a / "report.tsv").empty();
  return {reports_equal && differing == 0 && unstable == 0 && checkpoints == 10,
          fmt("two runs: %zu files, %zu differ, reports %s; %zu checkpoints, %zu not byte-stable on reload", files,
              differing, reports_equal ? "identical" : "DIFFER", checkpoints, unstable)};
}

// ---------------------------------------------------------------- 10

Outcome criterion_ipinyou() {
  const char* dir = std::getenv("RTB_IPINYOU_2997");
  if (!dir) return {false, "set RTB_IPINYOU_2997 to an ingested advertiser 2997 dataset directory", true};
  const auto ds = data::load_dataset(dir);
  const auto train = ds.stats(data::Split::Train);
  const auto test = ds.stats(data::Split::Test);
  // iPinYou quotes pay prices per thousand impressions.
  const double cpm_train = train.cpm / 1000.0, cpm_test = test.cpm / 1000.0;
  const double kl = data::kl_divergence(train.histogram, test.histogram);
  auto within = [](double v, double ref) { return std::abs(v - ref) <= 0.01 * ref; };
  const bool ok = within(train.impression_rate, 0.359) && within(cpm_train, 21.4) &&
                  within(test.impression_rate, 0.301) && within(cpm_test, 19.0) && std::abs(kl - 0.012) <= 0.005;
  return {ok, fmt("train imp %.3f cpm %.2f, test imp %.3f cpm %.2f, KL %.4f", train.impression_rate, cpm_train,
                  test.impression_rate, cpm_test, kl)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "criterion numbers to run");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* title;
    double limit_seconds;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "autodiff gradients match finite differences", 60, criterion_autodiff},
      {2, "DP value equals brute force on small instances", 30, criterion_dp},
      {3, "censored regression recovers the Tobit market", 120, criterion_tobit},
      {4, "generated requests: model <= 2x test, <= 0.2x uniform", 600, criterion_market_model},
      {5, "Ex-DDQN reaches 95% of the DP optimum on the toy", 600, criterion_exddqn},
      {6, "environment invariants over 10^4 episodes", 60, criterion_env_invariants},
      {7, "reward nondecreasing in alpha on shared tapes", 120, criterion_monotone},
      {8, "epsilon schedule and budget formula", 0, criterion_formulas},
      {9, "pipeline determinism and checkpoint persistence", 0, criterion_determinism},
      {10, "iPinYou advertiser 2997 statistics (dataset-gated)", 0, criterion_ipinyou},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_seconds == 0 || secs < c.limit_seconds;
    const char* verdict = o.skipped ? "SKIP" : (o.pass && in_time) ? "PASS" : "FAIL";
    std::string timing = fmt("%.1f s", secs);
    if (c.limit_seconds > 0) timing += fmt(" of %.0f s", c.limit_seconds);
    std::printf("%s  [%d] %s: %s (%s)\n", verdict, c.id, c.title, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    if (!o.skipped && !(o.pass && in_time)) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
