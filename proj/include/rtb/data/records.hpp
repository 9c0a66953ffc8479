#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace rtb::data {

// One joined bid/impression log line. pay_price is the market price and is
// only meaningful when win is set; losing rows carry a censored price.
struct RawRecord {
  std::int64_t timestamp_ms = 0;
  std::string user_agent;
  std::string region;
  std::string city;
  std::string ad_exchange;
  std::string domain;
  std::string slot_id;
  int slot_width = 0;
  int slot_height = 0;
  std::string slot_visibility;
  std::string slot_format;
  std::vector<std::string> user_tags;
  double bid_price = 0.0;
  double pay_price = 0.0;
  bool win = false;
  bool click = false;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

enum class ColumnType { Int, Float, String, Tags, Flag, Skip };

struct Column {
  std::string name;
  ColumnType type = ColumnType::String;
};

// Column order of a TSV log. Text form is one "name:type" per line with types
// int, float, string, tags, flag, skip. Columns named like RawRecord fields
// fill those fields; anything else must be typed skip.
struct Schema {
  std::vector<Column> columns;

  static Schema canonical();
  static Schema parse(const std::string& text);
  static Schema load(const std::filesystem::path& path);
  std::string to_text() const;
};

struct ParseStats {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t skipped = 0;
};

// Streams records to the callback in file order. Malformed lines are counted
// and skipped. Throws DataError when the file cannot be read or when more than
// 10% of the lines are malformed.
ParseStats for_each_record(const std::filesystem::path& path, const Schema& schema,
                           const std::function<void(RawRecord&&)>& sink);

struct ParsedLog {
  std::vector<RawRecord> records;
  ParseStats stats;
};

ParsedLog parse_log(const std::filesystem::path& path, const Schema& schema);

// Canonical-schema TSV encoding. Losing rows leave pay_price empty.
std::string format_record(const RawRecord& r);
void write_log(const std::filesystem::path& path, const std::vector<RawRecord>& records);

}  // namespace rtb::data
