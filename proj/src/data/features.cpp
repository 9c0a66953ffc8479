#include "rtb/data/features.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "rtb/core/error.hpp"
#include "rtb/core/hash.hpp"

namespace rtb::data {

namespace {

constexpr std::int64_t kMsPerDay = 86'400'000;
constexpr std::int64_t kMsPerHour = 3'600'000;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Pattern {
  const char* label;
  std::vector<const char*> needles;
};

// First match wins, so more specific families come first.
const std::vector<Pattern>& os_patterns() {
  static const std::vector<Pattern> p = {{"windows", {"windows"}},
                                         {"ios", {"ios", "iphone", "ipad"}},
                                         {"mac", {"mac"}},
                                         {"android", {"android"}},
                                         {"linux", {"linux"}}};
  return p;
}

const std::vector<Pattern>& browser_patterns() {
  static const std::vector<Pattern> p = {
      {"chrome", {"chrome", "crios"}}, {"sogou", {"sogou", "metasr"}}, {"maxthon", {"maxthon"}},
      {"safari", {"safari"}},          {"firefox", {"firefox"}},       {"theworld", {"theworld"}},
      {"opera", {"opera"}},            {"ie", {"msie", "trident"}}};
  return p;
}

std::string classify(const std::string& ua_lower, const std::vector<Pattern>& patterns) {
  for (const auto& p : patterns) {
    for (const char* n : p.needles) {
      if (ua_lower.find(n) != std::string::npos) return p.label;
    }
  }
  return kOther;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::string size_bin(int pixels) {
  if (pixels <= 160) return "<=160";
  if (pixels <= 300) return "<=300";
  if (pixels <= 468) return "<=468";
  if (pixels <= 728) return "<=728";
  if (pixels <= 960) return "<=960";
  return ">960";
}

DerivedFields derive_fields(const RawRecord& r) {
  DerivedFields d;
  const std::int64_t day = floor_div(r.timestamp_ms, kMsPerDay);
  d.weekday = static_cast<int>(((day + 3) % 7 + 7) % 7);  // 1970-01-01 was a Thursday
  d.hour = static_cast<int>((r.timestamp_ms - day * kMsPerDay) / kMsPerHour);
  const std::string ua = lower(r.user_agent);
  d.os = classify(ua, os_patterns());
  d.browser = classify(ua, browser_patterns());
  d.width_bin = size_bin(r.slot_width);
  d.height_bin = size_bin(r.slot_height);
  return d;
}

const std::vector<std::string>& all_field_names() {
  static const std::vector<std::string> names = {
      "weekday", "hour",    "os",         "browser",     "region",
      "city",    "ad_exchange", "domain", "slot_id",     "slot_width",
      "slot_height", "slot_visibility", "slot_format", "usertag"};
  return names;
}

bool is_multi_hot_field(const std::string& name) { return name == "usertag"; }

std::vector<std::string> field_values(const RawRecord& r, const DerivedFields& d,
                                      const std::string& f) {
  if (f == "weekday") return {std::to_string(d.weekday)};
  if (f == "hour") return {std::to_string(d.hour)};
  if (f == "os") return {d.os};
  if (f == "browser") return {d.browser};
  if (f == "region") return {r.region};
  if (f == "city") return {r.city};
  if (f == "ad_exchange") return {r.ad_exchange};
  if (f == "domain") return {r.domain};
  if (f == "slot_id") return {r.slot_id};
  if (f == "slot_width") return {d.width_bin};
  if (f == "slot_height") return {d.height_bin};
  if (f == "slot_visibility") return {r.slot_visibility};
  if (f == "slot_format") return {r.slot_format};
  if (f == "usertag") return r.user_tags;
  throw ConfigError("unknown feature field '" + f + "'");
}

FeatureDict FeatureDict::build(std::span<const RawRecord> records, std::size_t min_count,
                               const std::vector<std::string>& fields) {
  if (min_count == 0) throw ConfigError("min_count must be at least 1");
  if (records.empty()) throw DataError("cannot build a feature dictionary from an empty corpus");
  for (const auto& f : fields) {
    if (std::find(all_field_names().begin(), all_field_names().end(), f) ==
        all_field_names().end()) {
      throw ConfigError("unknown feature field '" + f + "'");
    }
  }
  std::vector<std::unordered_map<std::string, std::size_t>> counts(fields.size());
  std::vector<std::vector<std::string>> order(fields.size());
  for (const auto& r : records) {
    const auto d = derive_fields(r);
    for (std::size_t fi = 0; fi < fields.size(); ++fi) {
      for (auto& v : field_values(r, d, fields[fi])) {
        auto [it, inserted] = counts[fi].try_emplace(v, 0);
        if (inserted) order[fi].push_back(v);
        ++it->second;
      }
    }
  }
  FeatureDict dict;
  dict.min_count_ = min_count;
  for (std::size_t fi = 0; fi < fields.size(); ++fi) {
    FieldVocabulary voc{fields[fi], is_multi_hot_field(fields[fi]), {}, 0};
    for (const auto& v : order[fi]) {
      if (counts[fi][v] >= min_count) voc.categories.push_back(v);
    }
    dict.fields_.push_back(std::move(voc));
  }
  dict.finalize();
  return dict;
}

void FeatureDict::finalize() {
  lookup_.assign(fields_.size(), {});
  std::size_t offset = 0;
  for (std::size_t fi = 0; fi < fields_.size(); ++fi) {
    auto& f = fields_[fi];
    f.offset = offset;
    for (std::size_t c = 0; c < f.categories.size(); ++c) {
      lookup_[fi].emplace(f.categories[c], static_cast<std::uint32_t>(offset + c));
    }
    offset += f.width();
  }
  width_ = offset;
}

FieldLayout FeatureDict::layout() const {
  FieldLayout layout;
  for (const auto& f : fields_) layout.push_back({f.offset, f.width(), f.multi_hot});
  return layout;
}

std::uint32_t FeatureDict::index_of(std::size_t field, const std::string& value) const {
  const auto it = lookup_[field].find(value);
  if (it != lookup_[field].end()) return it->second;
  return static_cast<std::uint32_t>(fields_[field].other_index());
}

std::optional<std::size_t> FeatureDict::field_index(const std::string& name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].name == name) return i;
  }
  return std::nullopt;
}

std::string FeatureDict::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["min_count"] = min_count_;
  j["width"] = width_;
  auto& arr = j["fields"] = nlohmann::json::array();
  for (const auto& f : fields_) {
    arr.push_back({{"name", f.name},
                   {"multi_hot", f.multi_hot},
                   {"categories", f.categories},
                   {"other_index", f.other_index()}});
  }
  return j.dump(1);
}

FeatureDict FeatureDict::from_json(const std::string& text) {
  FeatureDict dict;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw DataError("unsupported feature dictionary version");
    dict.min_count_ = j.at("min_count").get<std::size_t>();
    for (const auto& f : j.at("fields")) {
      dict.fields_.push_back({f.at("name").get<std::string>(), f.at("multi_hot").get<bool>(),
                              f.at("categories").get<std::vector<std::string>>(), 0});
    }
    dict.finalize();
    for (std::size_t i = 0; i < dict.fields_.size(); ++i) {
      if (j["fields"][i].at("other_index").get<std::size_t>() != dict.fields_[i].other_index()) {
        throw DataError("feature dictionary OTHER index is inconsistent");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed feature dictionary: ") + e.what());
  }
  return dict;
}

void FeatureDict::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

FeatureDict FeatureDict::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string FeatureDict::hash() const { return sha256_hex(to_json()); }

BidRequest featurize(const RawRecord& r, const FeatureDict& dict) {
  BidRequest req;
  const auto d = derive_fields(r);
  for (std::size_t fi = 0; fi < dict.field_count(); ++fi) {
    const auto& f = dict.fields()[fi];
    const auto values = field_values(r, d, f.name);
    if (!f.multi_hot) {
      req.active.push_back(dict.index_of(fi, values.empty() ? std::string() : values.front()));
      continue;
    }
    const std::size_t begin = req.active.size();
    for (const auto& v : values) req.active.push_back(dict.index_of(fi, v));
    std::sort(req.active.begin() + static_cast<std::ptrdiff_t>(begin), req.active.end());
    req.active.erase(std::unique(req.active.begin() + static_cast<std::ptrdiff_t>(begin),
                                 req.active.end()),
                     req.active.end());
  }
  return req;
}

Tensor densify(std::span<const BidRequest> requests, std::size_t width) {
  Tensor out({requests.size(), width});
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto row = out.row(i);
    for (auto idx : requests[i].active) row[idx] = 1.0;
  }
  return out;
}

BidRequest sparsify(std::span<const double> dense) {
  BidRequest r;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] > 0.5) r.active.push_back(static_cast<std::uint32_t>(i));
  }
  return r;
}

MarketSample to_sample(const RawRecord& r, const FeatureDict& dict) {
  return {featurize(r, dict), r.bid_price, r.win ? r.pay_price : 0.0, r.win, r.click,
          r.timestamp_ms};
}

std::vector<MarketSample> to_samples(std::span<const RawRecord> records, const FeatureDict& dict) {
  std::vector<MarketSample> out(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = to_sample(records[i], dict);
  return out;
}

}  // namespace rtb::data
