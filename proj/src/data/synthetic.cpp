#include "rtb/data/synthetic.hpp"

#include <cmath>

#include "json.hpp"
#include "rtb/core/error.hpp"

namespace rtb::data {

namespace {

using nlohmann::json;

std::string* column_ref(RawRecord& r, const std::string& column) {
  if (column == "region") return &r.region;
  if (column == "city") return &r.city;
  if (column == "ad_exchange") return &r.ad_exchange;
  if (column == "domain") return &r.domain;
  if (column == "slot_id") return &r.slot_id;
  if (column == "slot_visibility") return &r.slot_visibility;
  if (column == "slot_format") return &r.slot_format;
  return nullptr;
}

SyntheticMarketSpec::Linear linear_from(const json& j) {
  SyntheticMarketSpec::Linear l;
  l.intercept = j.value("intercept", 0.0);
  if (j.contains("coefficients")) l.coefficients = j["coefficients"].get<std::vector<std::vector<double>>>();
  if (j.contains("tag_coefficients")) l.tag_coefficients = j["tag_coefficients"].get<std::vector<double>>();
  return l;
}

json linear_to(const SyntheticMarketSpec::Linear& l) {
  return {{"intercept", l.intercept},
          {"coefficients", l.coefficients},
          {"tag_coefficients", l.tag_coefficients}};
}

std::size_t draw_categorical(const std::vector<double>& probs, Rng& rng) {
  double total = 0.0;
  for (double p : probs) total += p;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  return probs.size() - 1;
}

}  // namespace

double SyntheticMarketSpec::Linear::eval(const std::vector<std::size_t>& cats,
                                         const std::vector<bool>& tags) const {
  double v = intercept;
  for (std::size_t f = 0; f < cats.size() && f < coefficients.size(); ++f) {
    if (cats[f] < coefficients[f].size()) v += coefficients[f][cats[f]];
  }
  for (std::size_t t = 0; t < tags.size() && t < tag_coefficients.size(); ++t) {
    if (tags[t]) v += tag_coefficients[t];
  }
  return v;
}

std::string synthetic_category(const std::string& column, std::size_t category) {
  return column + "_" + std::to_string(category);
}

std::vector<std::string> SyntheticMarketSpec::field_columns() const {
  std::vector<std::string> out;
  for (const auto& f : fields) out.push_back(f.column);
  if (tag_count > 0) out.push_back("usertag");
  return out;
}

void SyntheticMarketSpec::validate() const {
  RawRecord probe;
  if (fields.empty() && tag_count == 0) throw ConfigError("synthetic market has no fields");
  for (const auto& f : fields) {
    if (!column_ref(probe, f.column)) {
      throw ConfigError("synthetic field column '" + f.column + "' is not a string column");
    }
    if (f.categories == 0) throw ConfigError("synthetic field needs at least one category");
  }
  for (const auto& c : mixture) {
    if (c.probs.size() != fields.size()) throw ConfigError("mixture component field count mismatch");
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (c.probs[f].size() != fields[f].categories) {
        throw ConfigError("mixture component category count mismatch");
      }
    }
  }
  for (const Linear* l : {&price_mean, &price_log_sigma, &click_logit}) {
    if (!l->coefficients.empty() && l->coefficients.size() != fields.size()) {
      throw ConfigError("linear coefficient field count mismatch");
    }
  }
  if (logging.type != "constant" && logging.type != "uniform") {
    throw ConfigError("logging policy must be constant or uniform");
  }
  if (days == 0 || records == 0) throw ConfigError("synthetic market needs records and days");
}

SyntheticMarketSpec SyntheticMarketSpec::from_json(const std::string& text) {
  SyntheticMarketSpec s;
  try {
    const auto j = json::parse(text);
    s.seed = j.value("seed", s.seed);
    s.records = j.value("records", s.records);
    s.days = j.value("days", s.days);
    s.start_timestamp_ms = j.value("start_timestamp_ms", s.start_timestamp_ms);
    for (const auto& f : j.at("fields")) {
      s.fields.push_back({f.at("column").get<std::string>(), f.at("categories").get<std::size_t>()});
    }
    if (j.contains("mixture")) {
      for (const auto& c : j["mixture"]) {
        s.mixture.push_back({c.value("weight", 1.0),
                             c.at("probs").get<std::vector<std::vector<double>>>()});
      }
    }
    if (j.contains("tags")) {
      s.tag_count = j["tags"].value("count", std::size_t{0});
      s.tag_prob = j["tags"].value("prob", 0.5);
    }
    if (j.contains("price_mean")) s.price_mean = linear_from(j["price_mean"]);
    if (j.contains("price_log_sigma")) s.price_log_sigma = linear_from(j["price_log_sigma"]);
    if (j.contains("click_logit")) s.click_logit = linear_from(j["click_logit"]);
    if (j.contains("logging")) {
      const auto& l = j["logging"];
      s.logging.type = l.value("type", s.logging.type);
      s.logging.bid = l.value("bid", s.logging.bid);
      s.logging.low = l.value("low", s.logging.low);
      s.logging.high = l.value("high", s.logging.high);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed synthetic market spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string SyntheticMarketSpec::to_json() const {
  json j;
  j["seed"] = seed;
  j["records"] = records;
  j["days"] = days;
  j["start_timestamp_ms"] = start_timestamp_ms;
  j["fields"] = json::array();
  for (const auto& f : fields) j["fields"].push_back({{"column", f.column}, {"categories", f.categories}});
  j["mixture"] = json::array();
  for (const auto& c : mixture) j["mixture"].push_back({{"weight", c.weight}, {"probs", c.probs}});
  j["tags"] = {{"count", tag_count}, {"prob", tag_prob}};
  j["price_mean"] = linear_to(price_mean);
  j["price_log_sigma"] = linear_to(price_log_sigma);
  j["click_logit"] = linear_to(click_logit);
  j["logging"] = {{"type", logging.type}, {"bid", logging.bid}, {"low", logging.low}, {"high", logging.high}};
  return j.dump(1);
}

SyntheticMarket generate_synthetic_market(const SyntheticMarketSpec& spec, Rng rng) {
  spec.validate();
  SyntheticMarket out;
  out.records.reserve(spec.records);
  out.truth.reserve(spec.records);
  std::vector<double> weights;
  for (const auto& c : spec.mixture) weights.push_back(c.weight);
  const double span_ms = static_cast<double>(spec.days) * 86'400'000.0;

  Rng x_rng = rng.split("requests");
  Rng price_rng = rng.split("price");
  Rng click_rng = rng.split("click");
  Rng bid_rng = rng.split("logging-bid");

  for (std::size_t i = 0; i < spec.records; ++i) {
    SyntheticTruth t;
    const std::size_t comp = spec.mixture.empty() ? 0 : draw_categorical(weights, x_rng);
    for (std::size_t f = 0; f < spec.fields.size(); ++f) {
      if (spec.mixture.empty()) {
        t.categories.push_back(x_rng.uniform_index(spec.fields[f].categories));
      } else {
        t.categories.push_back(draw_categorical(spec.mixture[comp].probs[f], x_rng));
      }
    }
    for (std::size_t k = 0; k < spec.tag_count; ++k) t.tags.push_back(x_rng.bernoulli(spec.tag_prob));
    t.mu = spec.price_mean.eval(t.categories, t.tags);
    t.sigma = std::exp(spec.price_log_sigma.eval(t.categories, t.tags));
    const double logit = spec.click_logit.eval(t.categories, t.tags);
    t.click_prob = 1.0 / (1.0 + std::exp(-logit));

    RawRecord r;
    r.timestamp_ms = spec.start_timestamp_ms +
                     static_cast<std::int64_t>(std::floor(span_ms * static_cast<double>(i) /
                                                          static_cast<double>(spec.records)));
    r.user_agent = "synthetic";
    r.slot_width = 300;
    r.slot_height = 250;
    for (std::size_t f = 0; f < spec.fields.size(); ++f) {
      *column_ref(r, spec.fields[f].column) =
          synthetic_category(spec.fields[f].column, t.categories[f]);
    }
    for (std::size_t k = 0; k < spec.tag_count; ++k) {
      if (t.tags[k]) r.user_tags.push_back("tag_" + std::to_string(k));
    }
    const double w = std::max(0.0, t.mu + t.sigma * price_rng.normal());
    r.bid_price = spec.logging.type == "constant" ? spec.logging.bid
                                                  : bid_rng.uniform(spec.logging.low, spec.logging.high);
    r.win = r.bid_price > w;
    r.pay_price = r.win ? w : 0.0;
    const bool clicked = click_rng.bernoulli(t.click_prob);
    r.click = r.win && clicked;
    out.records.push_back(std::move(r));
    out.truth.push_back(std::move(t));
  }
  return out;
}

}  // namespace rtb::data
