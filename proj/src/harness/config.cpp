#include "rtb/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rtb/core/error.hpp"

namespace rtb::harness {

namespace {

// Desk values; the paper profile overrides a subset below.
const std::map<std::string, std::string>& desk_defaults() {
  static const std::map<std::string, std::string> d = {
      {"seed", "1"},
      {"utility", "impression"},
      {"horizon", "1000"},
      {"alphas", "0.25,0.5,1,2,4"},
      {"repeats", "10"},
      // Ex-DDQN
      {"train_steps", "200000"},
      {"workers", "16"},
      {"warmup", "2000"},
      {"target_sync", "500"},
      {"batch_size", "32"},
      {"replay_capacity", "2500000"},
      {"learning_rate", "0.001"},
      {"gamma", "1"},
      {"epsilon_decay", "20000"},
      {"epsilon_floor", "0.2"},
      {"alpha_mode", "log2"},
      {"alpha_low", "-2"},
      {"alpha_high", "2"},
      {"reward_scale", "0.01"},
      {"init_f1", "price"},
      // FDQI
      {"fdqi_iterations", "10"},
      {"fdqi_epochs", "20"},
      {"fdqi_batch_size", "256"},
      {"fdqi_learning_rate", "0.001"},
      {"fdqi_holdout", "0.1"},
      // market state model
      {"wgan_iterations", "4000"},
      {"wgan_batch_size", "1024"},
      {"wgan_critic_steps", "5"},
      {"wgan_lambda", "10"},
      {"wgan_learning_rate", "0.0001"},
      {"wgan_tau", "0.667"},
      {"wgan_noise_dim", "64"},
      {"wgan_generator_hidden", "256,256,128"},
      {"wgan_critic_hidden", "256,256,128"},
      // price and click models
      {"price_learning_rates", "0.1,0.01"},
      {"price_l2_grid", "0.01,0.0001,1e-06,1e-08"},
      {"price_max_epochs", "200"},
      {"price_batch_size", "1024"},
      {"price_patience", "10"},
      {"price_init", "data"},
      {"price_mu_bias_init", "200"},
      {"price_log_sigma_bias_init", "10"},
      {"click_learning_rates", "0.1,0.01"},
      {"click_l2_grid", "0.01,0.0001,1e-06,1e-08"},
      {"click_max_epochs", "100"},
      {"click_batch_size", "1024"},
      {"click_patience", "5"},
      // baselines
      {"linbid_episodes", "5"},
      {"linbid_grid_size", "20"},
      {"rlb_segment", "100"},
      // market validation
      {"mmd_n", "200"},
      {"mmd_repeats", "100"},
      {"mmd_sigma", "1"},
  };
  return d;
}

const std::map<std::string, std::string>& paper_overrides() {
  static const std::map<std::string, std::string> p = {
      {"horizon", "100000"},      {"train_steps", "5000000"}, {"target_sync", "5000"},
      {"learning_rate", "0.0001"}, {"epsilon_decay", "500000"}, {"reward_scale", "1"},
      {"price_init", "fixed"},     {"linbid_episodes", "10"},   {"rlb_segment", "1000"},
  };
  return p;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a finite number");
  }
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace

Config Config::profile(const std::string& name) {
  Config c;
  c.values_ = desk_defaults();
  if (name == "desk") return c;
  if (name != "paper") throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
  for (const auto& [k, v] : paper_overrides()) c.values_[k] = v;
  return c;
}

Config Config::parse(const std::string& text, Config base) {
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

Config Config::load(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), std::move(base));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!desk_defaults().count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const { return parse_double(key, get(key)); }

std::size_t Config::count(const std::string& key) const {
  return static_cast<std::size_t>(parse_count(key, get(key)));
}

std::uint64_t Config::seed() const { return parse_count("seed", get("seed")); }

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(get(key))) out.push_back(parse_double(key, s));
  return out;
}

std::vector<std::size_t> Config::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(get(key))) out.push_back(static_cast<std::size_t>(parse_count(key, s)));
  return out;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

void EvalConfig::validate() const {
  if (horizon == 0) throw ConfigError("horizon must be positive");
  if (repeats == 0) throw ConfigError("repeats must be at least 1");
  if (alphas.empty()) throw ConfigError("need at least one alpha");
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha values must be positive");
  }
}

EvalConfig eval_config(const Config& c) {
  EvalConfig e;
  e.horizon = c.count("horizon");
  e.alphas = c.numbers("alphas");
  e.repeats = c.count("repeats");
  e.seed = c.seed();
  e.utility = env::utility_from_string(c.get("utility"));
  e.validate();
  return e;
}

agents::DdqnConfig ddqn_config(const Config& c) {
  agents::DdqnConfig d;
  d.total_steps = c.count("train_steps");
  d.workers = c.count("workers");
  d.warmup = c.count("warmup");
  d.target_sync = c.count("target_sync");
  d.batch_size = c.count("batch_size");
  d.capacity = c.count("replay_capacity");
  d.learning_rate = c.number("learning_rate");
  d.gamma = c.number("gamma");
  d.epsilon_decay = c.number("epsilon_decay");
  d.epsilon_floor = c.number("epsilon_floor");
  d.horizon = c.count("horizon");
  d.alpha_mode = c.get("alpha_mode");
  d.alpha_low = c.number("alpha_low");
  d.alpha_high = c.number("alpha_high");
  d.reward_scale = c.number("reward_scale");
  return d;
}

agents::FdqiConfig fdqi_config(const Config& c) {
  agents::FdqiConfig f;
  f.iterations = c.count("fdqi_iterations");
  f.epochs = c.count("fdqi_epochs");
  f.batch_size = c.count("fdqi_batch_size");
  f.learning_rate = c.number("fdqi_learning_rate");
  f.gamma = c.number("gamma");
  f.holdout = c.number("fdqi_holdout");
  f.reward_scale = c.number("reward_scale");
  return f;
}

market::WganConfig wgan_config(const Config& c) {
  market::WganConfig w;
  w.max_iterations = c.count("wgan_iterations");
  w.batch_size = c.count("wgan_batch_size");
  w.critic_steps = c.count("wgan_critic_steps");
  w.lambda = c.number("wgan_lambda");
  w.learning_rate = c.number("wgan_learning_rate");
  w.tau = c.number("wgan_tau");
  w.noise_dim = c.count("wgan_noise_dim");
  w.generator_hidden = c.counts("wgan_generator_hidden");
  w.critic_hidden = c.counts("wgan_critic_hidden");
  return w;
}

market::PriceTrainConfig price_config(const Config& c) {
  market::PriceTrainConfig p;
  p.learning_rates = c.numbers("price_learning_rates");
  p.l2_grid = c.numbers("price_l2_grid");
  p.max_epochs = c.count("price_max_epochs");
  p.batch_size = c.count("price_batch_size");
  p.patience = c.count("price_patience");
  p.init = c.get("price_init");
  p.mu_bias_init = c.number("price_mu_bias_init");
  p.log_sigma_bias_init = c.number("price_log_sigma_bias_init");
  return p;
}

market::ClickTrainConfig click_config(const Config& c) {
  market::ClickTrainConfig k;
  k.learning_rates = c.numbers("click_learning_rates");
  k.l2_grid = c.numbers("click_l2_grid");
  k.max_epochs = c.count("click_max_epochs");
  k.batch_size = c.count("click_batch_size");
  k.patience = c.count("click_patience");
  return k;
}

}  // namespace rtb::harness
