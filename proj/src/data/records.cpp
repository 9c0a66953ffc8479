#include "rtb/data/records.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rtb/core/error.hpp"

namespace rtb::data {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_flag(std::string_view s, bool& out) {
  if (s == "1" || s == "true") return out = true, true;
  if (s == "0" || s == "false") return out = false, true;
  return false;
}

std::vector<std::string> parse_tags(std::string_view s) {
  std::vector<std::string> tags;
  if (s.empty() || s == "null") return tags;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(',', start);
    const auto tok = s.substr(start, pos == std::string_view::npos ? s.size() - start : pos - start);
    if (!tok.empty()) tags.emplace_back(tok);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return tags;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ColumnType column_type(const std::string& name) {
  if (name == "int") return ColumnType::Int;
  if (name == "float") return ColumnType::Float;
  if (name == "string") return ColumnType::String;
  if (name == "tags") return ColumnType::Tags;
  if (name == "flag") return ColumnType::Flag;
  if (name == "skip") return ColumnType::Skip;
  throw ConfigError("unknown column type '" + name + "'");
}

std::string column_type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Int:
      return "int";
    case ColumnType::Float:
      return "float";
    case ColumnType::String:
      return "string";
    case ColumnType::Tags:
      return "tags";
    case ColumnType::Flag:
      return "flag";
    case ColumnType::Skip:
      return "skip";
  }
  return "skip";
}

// Fills one field from one cell. Returns false when the cell is malformed.
struct RowState {
  bool has_win_column = false;
  bool price_present = false;
};

bool assign(RawRecord& r, RowState& st, const Column& col, std::string_view cell) {
  const std::string& n = col.name;
  if (col.type == ColumnType::Skip) return true;
  if (n == "timestamp") return parse_number(cell, r.timestamp_ms);
  if (n == "user_agent") return r.user_agent = cell, true;
  if (n == "region") return r.region = cell, true;
  if (n == "city") return r.city = cell, true;
  if (n == "ad_exchange") return r.ad_exchange = cell, true;
  if (n == "domain") return r.domain = cell, true;
  if (n == "slot_id") return r.slot_id = cell, true;
  if (n == "slot_visibility") return r.slot_visibility = cell, true;
  if (n == "slot_format") return r.slot_format = cell, true;
  if (n == "slot_width") return parse_number(cell, r.slot_width);
  if (n == "slot_height") return parse_number(cell, r.slot_height);
  if (n == "user_tags") return r.user_tags = parse_tags(cell), true;
  if (n == "bid_price") return parse_number(cell, r.bid_price);
  if (n == "pay_price") {
    if (cell.empty()) return true;
    st.price_present = true;
    return parse_number(cell, r.pay_price);
  }
  if (n == "win") {
    st.has_win_column = true;
    return parse_flag(cell, r.win);
  }
  if (n == "click") return parse_flag(cell, r.click);
  return false;
}

}  // namespace

Schema Schema::canonical() {
  return Schema{{{"timestamp", ColumnType::Int},        {"user_agent", ColumnType::String},
                 {"region", ColumnType::String},        {"city", ColumnType::String},
                 {"ad_exchange", ColumnType::String},   {"domain", ColumnType::String},
                 {"slot_id", ColumnType::String},       {"slot_width", ColumnType::Int},
                 {"slot_height", ColumnType::Int},      {"slot_visibility", ColumnType::String},
                 {"slot_format", ColumnType::String},   {"user_tags", ColumnType::Tags},
                 {"bid_price", ColumnType::Float},      {"pay_price", ColumnType::Float},
                 {"win", ColumnType::Flag},             {"click", ColumnType::Flag}}};
}

Schema Schema::parse(const std::string& text) {
  static const std::vector<std::string> known = {
      "timestamp", "user_agent", "region",          "city",        "ad_exchange",
      "domain",    "slot_id",    "slot_width",      "slot_height", "slot_visibility",
      "slot_format", "user_tags", "bid_price",      "pay_price",   "win",
      "click"};
  Schema s;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ConfigError("schema line without ':' : " + line);
    Column c{line.substr(0, colon), column_type(line.substr(colon + 1))};
    if (c.type != ColumnType::Skip &&
        std::find(known.begin(), known.end(), c.name) == known.end()) {
      throw ConfigError("schema column '" + c.name + "' is not a record field; type it skip");
    }
    s.columns.push_back(std::move(c));
  }
  if (s.columns.empty()) throw ConfigError("schema declares no columns");
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read schema " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Schema::to_text() const {
  std::string out;
  for (const auto& c : columns) out += c.name + ":" + column_type_name(c.type) + "\n";
  return out;
}

ParseStats for_each_record(const std::filesystem::path& path, const Schema& schema,
                           const std::function<void(RawRecord&&)>& sink) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read log " + path.string());
  ParseStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++stats.lines;
    const auto cells = split_tabs(line);
    bool ok = cells.size() == schema.columns.size();
    RawRecord r;
    RowState st;
    for (std::size_t i = 0; ok && i < cells.size(); ++i) {
      ok = assign(r, st, schema.columns[i], cells[i]);
    }
    if (ok) {
      if (!st.has_win_column) r.win = st.price_present;
      if (r.win && !st.price_present) ok = false;
      if (r.win && r.pay_price > r.bid_price) ok = false;
      if (!r.win) r.pay_price = 0.0;
    }
    if (!ok) {
      ++stats.skipped;
      continue;
    }
    ++stats.records;
    sink(std::move(r));
  }
  if (stats.lines > 0 && 10 * stats.skipped > stats.lines) {
    throw DataError(path.string() + ": " + std::to_string(stats.skipped) + " of " +
                    std::to_string(stats.lines) +
                    " lines malformed; the schema probably does not match the file");
  }
  return stats;
}

ParsedLog parse_log(const std::filesystem::path& path, const Schema& schema) {
  ParsedLog out;
  out.stats = for_each_record(path, schema, [&](RawRecord&& r) { out.records.push_back(std::move(r)); });
  return out;
}

std::string format_record(const RawRecord& r) {
  std::string tags;
  for (std::size_t i = 0; i < r.user_tags.size(); ++i) {
    if (i) tags += ",";
    tags += r.user_tags[i];
  }
  std::string line;
  line += std::to_string(r.timestamp_ms) + "\t" + r.user_agent + "\t" + r.region + "\t" +
          r.city + "\t" + r.ad_exchange + "\t" + r.domain + "\t" + r.slot_id + "\t" +
          std::to_string(r.slot_width) + "\t" + std::to_string(r.slot_height) + "\t" +
          r.slot_visibility + "\t" + r.slot_format + "\t" + tags + "\t" +
          format_double(r.bid_price) + "\t" + (r.win ? format_double(r.pay_price) : "") + "\t" +
          (r.win ? "1" : "0") + "\t" + (r.click ? "1" : "0");
  return line;
}

void write_log(const std::filesystem::path& path, const std::vector<RawRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write log " + path.string());
  for (const auto& r : records) out << format_record(r) << '\n';
}

}  // namespace rtb::data
