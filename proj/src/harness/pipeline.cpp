#include "rtb/harness/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rtb/agents/baselines.hpp"
#include "rtb/core/error.hpp"
#include "rtb/data/synthetic.hpp"

namespace rtb::harness {

namespace {

std::string num_text(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double meta_number(const Checkpoint& c, const std::string& key) {
  try {
    return std::stod(c.meta_value(key));
  } catch (const std::logic_error&) {
    throw DataError("checkpoint meta." + key + " is not a number");
  }
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shared manifest fields of everything trained from a dataset split.
void stamp(Checkpoint& c, const data::Dataset& ds, data::Split split, const Config& config) {
  c.seed = config.seed();
  c.data_hash = ds.split_hash(split);
  c.config = config.to_text();
  c.meta["split"] = data::to_string(split);
  c.meta["dict_hash"] = ds.dict.hash();
  c.meta["cpm_train"] = num_text(ds.stats(data::Split::Train).cpm);
  c.meta["cpm"] = num_text(ds.stats(split).cpm);
  c.meta["max_price"] = num_text(ds.max_train_price());
  c.dims["width"] = std::to_string(ds.dict.width());
}

std::vector<data::BidRequest> requests_of(const std::vector<data::MarketSample>& s) {
  std::vector<data::BidRequest> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.x);
  return out;
}

std::vector<double> won_prices(const std::vector<data::RawRecord>& records) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.win) out.push_back(r.pay_price);
  }
  return out;
}

std::uint64_t split_index(data::Split s) { return static_cast<std::uint64_t>(s); }

struct LoadedEnv {
  std::vector<Checkpoint> checkpoints;
  long state_at = -1, price_at = -1, click_at = -1;

  const Checkpoint& state() const { return checkpoints[static_cast<std::size_t>(state_at)]; }
  const Checkpoint& price() const { return checkpoints[static_cast<std::size_t>(price_at)]; }
  const Checkpoint* click() const {
    return click_at < 0 ? nullptr : &checkpoints[static_cast<std::size_t>(click_at)];
  }
};

LoadedEnv load_env_checkpoints(const std::vector<fs::path>& paths) {
  LoadedEnv e;
  for (const auto& p : paths) e.checkpoints.push_back(load_checkpoint(p));
  for (std::size_t i = 0; i < e.checkpoints.size(); ++i) {
    const auto& type = e.checkpoints[i].type;
    long* slot = type == "market-state" ? &e.state_at
                 : type == "price"      ? &e.price_at
                 : type == "click"      ? &e.click_at
                                        : nullptr;
    if (!slot) throw ConfigError("'" + type + "' checkpoint is not an environment component");
    if (*slot >= 0) throw ConfigError("two " + type + " checkpoints given");
    *slot = static_cast<long>(i);
  }
  if (e.state_at < 0 || e.price_at < 0) {
    throw ConfigError("an environment needs a market-state and a price checkpoint");
  }
  return e;
}

}  // namespace

std::string run_ingest(const fs::path& logs, const fs::path& schema, const fs::path& out,
                       const data::IngestOptions& options) {
  const auto parsed = data::parse_log(logs, data::Schema::load(schema));
  const auto ds = data::build_dataset(parsed.records, options);
  data::save_dataset(out, ds);
  std::ostringstream msg;
  msg << "parsed " << parsed.stats.lines << " lines, kept " << parsed.stats.records << ", skipped "
      << parsed.stats.skipped << "\n"
      << data::describe_dataset(ds);
  return msg.str();
}

std::string run_synth(const fs::path& spec_path, const fs::path& out, data::IngestOptions options) {
  const auto spec = data::SyntheticMarketSpec::from_json(read_text(spec_path));
  spec.validate();
  auto market = data::generate_synthetic_market(spec, Rng(spec.seed, "synth"));
  options.fields = spec.field_columns();
  const auto ds = data::build_dataset(std::move(market.records), options);
  data::save_dataset(out, ds);
  return data::describe_dataset(ds);
}

std::string run_stats(const fs::path& dataset) { return data::describe_dataset(data::load_dataset(dataset)); }

Checkpoint run_train_market(const fs::path& dataset, data::Split split, const fs::path& out,
                            const Config& config) {
  const auto ds = data::load_dataset(dataset);
  const auto train = requests_of(data::to_samples(ds.records(split), ds.dict));
  const auto val = requests_of(data::to_samples(ds.validation, ds.dict));
  const auto trained = market::train_market_state_model(
      train, val, ds.dict.layout(), wgan_config(config),
      Rng(config.seed()).split("market", split_index(split)));
  Checkpoint c = state_model_checkpoint(trained.model);
  stamp(c, ds, split, config);
  c.meta["iterations"] = std::to_string(trained.diagnostics.iterations);
  c.meta["early_stopped"] = trained.diagnostics.early_stopped ? "true" : "false";
  save_checkpoint(out, c);
  return c;
}

Checkpoint run_train_price(const fs::path& dataset, data::Split split, const fs::path& out,
                           const Config& config) {
  const auto ds = data::load_dataset(dataset);
  const auto train = data::to_samples(ds.records(split), ds.dict);
  const auto val = data::to_samples(ds.validation, ds.dict);
  const auto fit = market::train_price_model(train, val, ds.dict.width(), price_config(config),
                                             Rng(config.seed()).split("price", split_index(split)));
  Checkpoint c = price_checkpoint(fit.model);
  stamp(c, ds, split, config);
  c.meta["learning_rate"] = num_text(fit.learning_rate);
  c.meta["l2"] = num_text(fit.l2);
  c.meta["validation_nll"] = num_text(fit.validation_nll);
  save_checkpoint(out, c);
  return c;
}

Checkpoint run_train_click(const fs::path& dataset, data::Split split, const fs::path& out,
                           const Config& config) {
  const auto ds = data::load_dataset(dataset);
  const auto train = data::to_samples(ds.records(split), ds.dict);
  const auto val = data::to_samples(ds.validation, ds.dict);
  const auto fit = market::train_click_model(train, val, ds.dict.width(), click_config(config),
                                             Rng(config.seed()).split("click", split_index(split)));
  Checkpoint c = click_checkpoint(fit.model);
  stamp(c, ds, split, config);
  std::size_t imps = 0, clicks = 0;
  for (const auto& s : train) {
    imps += s.win;
    clicks += s.win && s.click;
  }
  c.meta["avg_ctr"] = num_text(imps ? static_cast<double>(clicks) / static_cast<double>(imps) : 0.0);
  c.meta["prior_only"] = fit.prior_only ? "true" : "false";
  if (!fit.warning.empty()) c.meta["warning"] = fit.warning;
  save_checkpoint(out, c);
  return c;
}

env::SimEnv load_env(const std::vector<fs::path>& checkpoints, const std::string& split,
                     const Config& config) {
  const auto e = load_env_checkpoints(checkpoints);
  env::MarketComponents mc;
  mc.sampler = std::make_shared<market::GeneratorSampler>(state_model_from_checkpoint(e.state()));
  mc.sampler_split = e.state().meta_value("split");
  mc.price = price_from_checkpoint(e.price());
  mc.price_split = e.price().meta_value("split");
  if (e.click()) {
    mc.click = click_from_checkpoint(*e.click());
    mc.click_split = e.click()->meta_value("split");
  }
  for (const auto& c : e.checkpoints) mc.provenance[c.type] = c.data_hash;
  if (e.state().meta_value("dict_hash") != e.price().meta_value("dict_hash")) {
    throw ConfigError("market-state and price checkpoints come from different dictionaries");
  }
  env::EnvConfig ec;
  ec.utility = env::utility_from_string(config.get("utility"));
  ec.cpm_train = meta_number(e.price(), "cpm_train");
  return env::make_env(std::move(mc), split, ec, Rng(config.seed()).split("env"));
}

EnvScale env_scale(const std::vector<fs::path>& checkpoints) {
  const auto e = load_env_checkpoints(checkpoints);
  return {meta_number(e.price(), "cpm_train"), meta_number(e.price(), "cpm"),
          meta_number(e.price(), "max_price")};
}

Checkpoint run_train_exddqn(const std::vector<fs::path>& env_checkpoints, const fs::path& out,
                            const Config& config) {
  const env::SimEnv proto = load_env(env_checkpoints, "train", config);
  const EnvScale scale = env_scale(env_checkpoints);
  const auto grid = agents::ActionGrid::for_max_price(scale.max_price);
  const std::size_t width = proto.components().price.width();
  Rng init_rng = Rng(config.seed()).split("exddqn-init");
  auto init = agents::init_qnetwork(width, init_rng);
  if (config.get("init_f1") == "price") {
    agents::init_f1_from_price(init, proto.components().price, scale.max_price);
  } else if (config.get("init_f1") != "xavier") {
    throw ConfigError("init_f1 must be 'price' or 'xavier'");
  }
  auto dcfg = ddqn_config(config);
  dcfg.cpm_train = scale.cpm_train;
  const std::uint64_t seed = config.seed();
  agents::EnvFactory factory = [&proto, seed](std::size_t w) {
    return env::make_train_env(proto.components(), proto.config(), Rng(seed).split("worker", w));
  };
  const auto result = agents::train_ddqn(factory, grid, std::move(init), dcfg, Rng(seed).split("exddqn"));

  Checkpoint c = qnetwork_checkpoint(result.net, grid, "exddqn");
  const auto loaded = load_env_checkpoints(env_checkpoints);
  const Checkpoint& price = loaded.price();
  c.seed = seed;
  c.data_hash = price.data_hash;
  c.config = config.to_text();
  for (const char* k : {"split", "dict_hash", "cpm_train", "max_price"}) c.meta[k] = price.meta_value(k);
  c.meta["updates"] = std::to_string(result.updates);
  c.meta["steps"] = std::to_string(result.steps);
  save_checkpoint(out, c);
  if (result.diverged) throw NumericalError("Ex-DDQN diverged: " + result.message);
  return c;
}

Checkpoint run_train_fdqi(const fs::path& dataset, const fs::path& out, const Config& config) {
  const auto ds = data::load_dataset(dataset);
  auto samples = data::to_samples(ds.train, ds.dict);
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
  const auto grid = agents::ActionGrid::for_max_price(ds.max_train_price());
  const double cpm_train = ds.stats(data::Split::Train).cpm;
  const auto set = agents::fdqi_build_transitions(samples, grid, config.count("horizon"), cpm_train,
                                                  env::utility_from_string(config.get("utility")));
  Rng init_rng = Rng(config.seed()).split("fdqi-init");
  const auto result = agents::fdqi_train(set.transitions, agents::init_qnetwork(ds.dict.width(), init_rng),
                                         fdqi_config(config), Rng(config.seed()).split("fdqi"));
  Checkpoint c = qnetwork_checkpoint(result.net, grid, "fdqi");
  stamp(c, ds, data::Split::Train, config);
  c.meta["episodes"] = std::to_string(set.episodes);
  c.meta["best_iteration"] = std::to_string(result.best_iteration);
  if (!set.warning.empty()) c.meta["warning"] = set.warning;
  save_checkpoint(out, c);
  if (result.diverged && result.best_iteration == 0) throw NumericalError("FDQI diverged");
  return c;
}

Checkpoint run_tune_linbid(const fs::path& dataset, const std::vector<fs::path>& env_checkpoints,
                           const fs::path& out, const Config& config) {
  const auto ds = data::load_dataset(dataset);
  env::SimEnv train_env = load_env(env_checkpoints, "train", config);
  const auto utility = env::utility_from_string(config.get("utility"));
  std::optional<market::ClickModel> click;
  double avg_ctr = 0.0;
  if (utility == env::Utility::Click) {
    const auto e = load_env_checkpoints(env_checkpoints);
    if (!e.click()) throw ConfigError("click-utility LinBid needs a click checkpoint");
    click = click_from_checkpoint(*e.click());
    avg_ctr = meta_number(*e.click(), "avg_ctr");
  }
  const auto prices = won_prices(ds.train);
  if (prices.empty()) throw DataError("the training split has no won auctions");
  const auto grid = agents::price_quantiles(prices, config.count("linbid_grid_size"));
  const std::size_t horizon = config.count("horizon");
  const double budget = budget_for(1.0, train_env.config().cpm_train, horizon);
  const auto tuned = agents::linbid_tune(train_env, grid, config.count("linbid_episodes"), budget, horizon,
                                         utility, click, avg_ctr, Rng(config.seed()).split("linbid"));
  Checkpoint c = linbid_checkpoint(tuned.base_bid, utility, click, avg_ctr);
  stamp(c, ds, data::Split::Train, config);
  c.arrays["tuning.grid"] = Tensor({tuned.grid.size()}, tuned.grid);
  c.arrays["tuning.mean_rewards"] = Tensor({tuned.mean_rewards.size()}, tuned.mean_rewards);
  save_checkpoint(out, c);
  return c;
}

Checkpoint run_solve_rlb(const fs::path& dataset, const fs::path& out, const Config& config) {
  const auto ds = data::load_dataset(dataset);
  const auto hist = data::PriceHistogram::from_prices(won_prices(ds.train));
  if (hist.empty()) throw DataError("the training split has no won auctions");
  const std::size_t segment = config.count("rlb_segment");
  const auto alphas = config.numbers("alphas");
  if (alphas.empty()) throw ConfigError("need at least one alpha");
  const double cpm_train = ds.stats(data::Split::Train).cpm;
  const std::size_t rows =
      agents::rlb_budget_rows(*std::max_element(alphas.begin(), alphas.end()), cpm_train, segment);
  const auto grid = agents::ActionGrid::for_max_price(ds.max_train_price());
  const auto tables = agents::rlb_dp_solve(hist, segment, rows, grid.bids);
  Checkpoint c = rlb_checkpoint(tables, hist);
  stamp(c, ds, data::Split::Train, config);
  save_checkpoint(out, c);
  return c;
}

ResultTable run_evaluate(const std::vector<fs::path>& env_checkpoints,
                         const std::vector<fs::path>& agent_paths, const Config& config,
                         const fs::path& out, ReportFormat format) {
  if (agent_paths.empty()) throw ConfigError("no agents to evaluate");
  const env::SimEnv test_env = load_env(env_checkpoints, "test", config);
  const EnvScale scale = env_scale(env_checkpoints);
  std::vector<std::unique_ptr<agents::Policy>> owned;
  std::vector<const agents::Policy*> policies;
  for (const auto& p : agent_paths) {
    const auto c = load_checkpoint(p);
    if (const auto it = c.meta.find("cpm_train"); it != c.meta.end()) {
      if (std::stod(it->second) != test_env.config().cpm_train) {
        throw ConfigError(p.string() + " was trained with a different train-split CPM");
      }
    }
    owned.push_back(policy_from_checkpoint(c));
    policies.push_back(owned.back().get());
  }
  auto table = budget_sweep(policies, eval_config(config), scale.cpm_split, test_env);
  table.config = config.to_text();
  if (!out.empty()) write_report(table, out, format);
  return table;
}

std::vector<MmdRow> run_mmd(const fs::path& dataset, const fs::path& model, data::Split split,
                            const Config& config) {
  const auto ds = data::load_dataset(dataset);
  const auto c = load_checkpoint(model);
  const auto state = state_model_from_checkpoint(c);
  if (c.meta_value("dict_hash") != ds.dict.hash()) {
    throw DataError("model checkpoint was trained with a different feature dictionary");
  }
  const auto test = requests_of(data::to_samples(ds.records(split), ds.dict));
  const market::EmpiricalSampler test_sampler(test);
  const market::GeneratorSampler model_sampler(state);
  const market::UniformSampler uniform(state.layout);
  return mmd_benchmark(test, {{"test", &test_sampler}, {"model", &model_sampler}, {"uniform", &uniform}},
                       config.count("mmd_n"), config.count("mmd_repeats"), config.number("mmd_sigma"),
                       Rng(config.seed()).split("mmd"));
}

}  // namespace rtb::harness
