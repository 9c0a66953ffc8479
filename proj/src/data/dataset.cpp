#include "rtb/data/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rtb/core/error.hpp"
#include "rtb/core/hash.hpp"

namespace rtb::data {

namespace {

const char* file_name(Split s) {
  switch (s) {
    case Split::Train:
      return "train.tsv";
    case Split::Validation:
      return "val.tsv";
    default:
      return "test.tsv";
  }
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json stats_json(const DatasetStats& s) {
  return {{"n", s.n},
          {"d", s.d},
          {"impression_rate", s.impression_rate},
          {"cpm", s.cpm},
          {"max_price", s.max_price}};
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Validation:
      return "validation";
    default:
      return "test";
  }
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "validation" || name == "val") return Split::Validation;
  if (name == "test") return Split::Test;
  throw ConfigError("unknown split '" + name + "' (expected train, validation or test)");
}

const std::vector<RawRecord>& Dataset::records(Split s) const {
  switch (s) {
    case Split::Train:
      return train;
    case Split::Validation:
      return validation;
    default:
      return test;
  }
}

std::string Dataset::split_hash(Split s) const {
  Sha256 h;
  for (const auto& r : records(s)) {
    h.update(format_record(r));
    h.update("\n");
  }
  return h.hex_digest();
}

double Dataset::max_train_price() const {
  double m = 0.0;
  for (const auto& r : train) {
    if (r.win) m = std::max(m, r.pay_price);
  }
  return m;
}

DatasetStats Dataset::stats(Split s) const {
  auto st = dataset_statistics(records(s));
  st.d = dict.width();
  return st;
}

Dataset build_dataset(std::vector<RawRecord> records, const IngestOptions& options) {
  if (records.empty()) throw DataError("no records to build a dataset from");
  Splits splits;
  if (options.split_mode == "day") {
    splits = split_by_day(records, options.fractions);
  } else if (options.split_mode == "random") {
    splits = split_random(records, Rng(options.seed, "split"), options.fractions);
  } else {
    throw ConfigError("split mode must be 'day' or 'random'");
  }
  if (splits.train.empty() || splits.validation.empty() || splits.test.empty()) {
    throw DataError("a split is empty; need more records");
  }
  Dataset ds;
  ds.options = options;
  ds.dict = FeatureDict::build(splits.train, options.min_count, options.fields);
  ds.train = std::move(splits.train);
  ds.validation = std::move(splits.validation);
  ds.test = std::move(splits.test);
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  for (Split s : {Split::Train, Split::Validation, Split::Test}) {
    write_log(dir / file_name(s), ds.records(s));
  }
  ds.dict.save(dir / "dict.json");
  nlohmann::json meta;
  meta["version"] = 1;
  meta["min_count"] = ds.options.min_count;
  meta["fields"] = ds.options.fields;
  meta["split_mode"] = ds.options.split_mode;
  meta["seed"] = ds.options.seed;
  meta["fractions"] = {ds.options.fractions.train, ds.options.fractions.validation,
                       ds.options.fractions.test};
  meta["dict_hash"] = ds.dict.hash();
  meta["max_train_price"] = ds.max_train_price();
  for (Split s : {Split::Train, Split::Validation, Split::Test}) {
    auto& j = meta["splits"][to_string(s)];
    j["hash"] = ds.split_hash(s);
    j["stats"] = stats_json(ds.stats(s));
  }
  meta["kl_train_test"] =
      kl_divergence(ds.stats(Split::Train).histogram, ds.stats(Split::Test).histogram);
  std::ofstream out(dir / "meta.json", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a dataset directory: " + dir.string());
  Dataset ds;
  try {
    const auto meta = nlohmann::json::parse(read_text(dir / "meta.json"));
    if (meta.at("version").get<int>() != 1) throw DataError("unsupported dataset version");
    ds.options.min_count = meta.at("min_count").get<std::size_t>();
    ds.options.fields = meta.at("fields").get<std::vector<std::string>>();
    ds.options.split_mode = meta.at("split_mode").get<std::string>();
    ds.options.seed = meta.at("seed").get<std::uint64_t>();
    const auto fr = meta.at("fractions").get<std::vector<double>>();
    if (fr.size() != 3) throw DataError("dataset fractions must have three entries");
    ds.options.fractions = {fr[0], fr[1], fr[2]};
    ds.dict = FeatureDict::load(dir / "dict.json");
    if (ds.dict.hash() != meta.at("dict_hash").get<std::string>()) {
      throw DataError("feature dictionary does not match dataset metadata");
    }
    const Schema schema = Schema::canonical();
    ds.train = parse_log(dir / file_name(Split::Train), schema).records;
    ds.validation = parse_log(dir / file_name(Split::Validation), schema).records;
    ds.test = parse_log(dir / file_name(Split::Test), schema).records;
    for (Split s : {Split::Train, Split::Validation, Split::Test}) {
      if (ds.split_hash(s) != meta.at("splits").at(to_string(s)).at("hash").get<std::string>()) {
        throw DataError(to_string(s) + " split does not match its recorded hash");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset metadata: ") + e.what());
  }
  return ds;
}

std::string describe_dataset(const Dataset& ds) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %10s %6s %8s %10s %10s\n", "split", "n", "d", "imp",
                "cpm", "max_price");
  out << buf;
  for (Split s : {Split::Train, Split::Validation, Split::Test}) {
    const auto st = ds.stats(s);
    std::snprintf(buf, sizeof buf, "%-10s %10zu %6zu %8.3f %10.3f %10.1f\n", to_string(s).c_str(),
                  st.n, st.d, st.impression_rate, st.cpm, st.max_price);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "KL(train||test) = %.4f\n",
                kl_divergence(ds.stats(Split::Train).histogram, ds.stats(Split::Test).histogram));
  out << buf;
  out << "fields:";
  for (const auto& f : ds.dict.fields()) out << ' ' << f.name << '(' << f.width() << ')';
  out << '\n';
  return out.str();
}

}  // namespace rtb::data
