#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/data/features.hpp"
#include "rtb/data/records.hpp"
#include "rtb/data/stats.hpp"

namespace rtb::data {

enum class Split { Train, Validation, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& name);

struct IngestOptions {
  std::size_t min_count = 500;
  std::vector<std::string> fields = all_field_names();
  std::string split_mode = "day";  // day | random
  std::uint64_t seed = 1;
  SplitFractions fractions;
};

// A featurization-ready dataset directory:
//
//   train.tsv val.tsv test.tsv   canonical-schema logs
//   dict.json                    feature dictionary built on the train split
//   meta.json                    options, per-split statistics and content hashes
struct Dataset {
  FeatureDict dict;
  std::vector<RawRecord> train;
  std::vector<RawRecord> validation;
  std::vector<RawRecord> test;
  IngestOptions options;

  const std::vector<RawRecord>& records(Split s) const;
  // SHA-256 of the split's canonical TSV encoding.
  std::string split_hash(Split s) const;
  // Largest market price won in the training split.
  double max_train_price() const;
  DatasetStats stats(Split s) const;
};

// Splits the records and builds the dictionary on the train split only.
Dataset build_dataset(std::vector<RawRecord> records, const IngestOptions& options);

void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

// Human-readable summary written by `rtb stats`.
std::string describe_dataset(const Dataset& ds);

}  // namespace rtb::data
