#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtb/core/gumbel.hpp"
#include "rtb/core/tensor.hpp"
#include "rtb/data/records.hpp"
#include "rtb/kernels/kernels.hpp"

namespace rtb::data {

// Categorical values computed from the raw columns.
struct DerivedFields {
  int weekday = 0;  // Monday = 0, UTC
  int hour = 0;     // 0..23, UTC
  std::string os;
  std::string browser;
  std::string width_bin;
  std::string height_bin;
};

inline constexpr const char* kOther = "OTHER";

DerivedFields derive_fields(const RawRecord& r);
std::string size_bin(int pixels);

// Names of every field a dictionary can be built over, in default order.
const std::vector<std::string>& all_field_names();
bool is_multi_hot_field(const std::string& name);

// Categorical value(s) of a field for one record. Exactly one value for
// one-hot fields; zero or more for the user-tag field.
std::vector<std::string> field_values(const RawRecord& r, const DerivedFields& derived,
                                      const std::string& field);

// Sparse binary feature vector: sorted active indices into a width-D space.
struct BidRequest {
  kernels::IndexSet active;

  friend bool operator==(const BidRequest&, const BidRequest&) = default;
};

struct FieldVocabulary {
  std::string name;
  bool multi_hot = false;
  std::vector<std::string> categories;  // kept categories in first-appearance order
  std::size_t offset = 0;               // first index of this field's block

  std::size_t width() const { return categories.size() + 1; }  // + OTHER
  std::size_t other_index() const { return offset + categories.size(); }
};

class FeatureDict {
 public:
  FeatureDict() = default;

  // Two passes over the corpus: count, then keep categories seen at least
  // min_count times. Throws DataError on an empty corpus, ConfigError when
  // min_count is zero or a field name is unknown.
  static FeatureDict build(std::span<const RawRecord> records, std::size_t min_count,
                           const std::vector<std::string>& fields = all_field_names());

  const std::vector<FieldVocabulary>& fields() const { return fields_; }
  std::size_t field_count() const { return fields_.size(); }
  std::size_t width() const { return width_; }
  std::size_t min_count() const { return min_count_; }
  FieldLayout layout() const;

  // Global index of a category, or the field's OTHER index when unseen.
  std::uint32_t index_of(std::size_t field, const std::string& value) const;
  std::optional<std::size_t> field_index(const std::string& name) const;

  std::string to_json() const;
  static FeatureDict from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static FeatureDict load(const std::filesystem::path& path);
  std::string hash() const;

  friend bool operator==(const FeatureDict& a, const FeatureDict& b) {
    return a.to_json() == b.to_json();
  }

 private:
  void finalize();

  std::vector<FieldVocabulary> fields_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> lookup_;
  std::size_t width_ = 0;
  std::size_t min_count_ = 1;
};

BidRequest featurize(const RawRecord& r, const FeatureDict& dict);

// Dense (batch, width) 0/1 matrix.
Tensor densify(std::span<const BidRequest> requests, std::size_t width);
BidRequest sparsify(std::span<const double> dense);

// Censored auction log record in model space.
struct MarketSample {
  BidRequest x;
  double bid = 0.0;
  double price = 0.0;  // market price when won; unused otherwise
  bool win = false;
  bool click = false;
  std::int64_t timestamp_ms = 0;
};

MarketSample to_sample(const RawRecord& r, const FeatureDict& dict);
std::vector<MarketSample> to_samples(std::span<const RawRecord> records, const FeatureDict& dict);

}  // namespace rtb::data
