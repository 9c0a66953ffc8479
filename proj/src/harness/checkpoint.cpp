#include "rtb/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rtb/core/error.hpp"
#include "rtb/core/hash.hpp"

namespace rtb::harness {

namespace {

constexpr const char* kMagic = "rtb-checkpoint";

void check_token(const std::string& what, const std::string& s, bool allow_spaces) {
  if (s.find('\n') != std::string::npos || (!allow_spaces && s.find_first_of(" \t") != std::string::npos) ||
      (!allow_spaces && s.empty())) {
    throw ConfigError("checkpoint " + what + " '" + s + "' cannot be stored");
  }
}

void append_le(std::string& out, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(u & 0xffu));
    u >>= 8;
  }
}

double read_le(const char* p) {
  std::uint64_t u = 0;
  for (int i = 7; i >= 0; --i) u = (u << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(u);
}

[[noreturn]] void corrupt(const std::string& why) {
  throw DataError("checkpoint hash mismatch: " + why);
}

Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

Tensor pack(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return Tensor({n}, v);
}

std::vector<double> unpack(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

void expect_type(const Checkpoint& c, const std::string& type) {
  if (c.type != type) throw DataError("expected a " + type + " checkpoint, found '" + c.type + "'");
}

std::size_t dim_count(const Checkpoint& c, const std::string& key) {
  try {
    return static_cast<std::size_t>(std::stoull(c.dim(key)));
  } catch (const std::invalid_argument&) {
    throw DataError("checkpoint dim '" + key + "' is not an integer");
  }
}

}  // namespace

const Tensor& Checkpoint::array(const std::string& name) const {
  const auto it = arrays.find(name);
  if (it == arrays.end()) throw DataError("checkpoint has no array '" + name + "'");
  return it->second;
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  const auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint manifest has no meta." + key);
  return it->second;
}

const std::string& Checkpoint::dim(const std::string& key) const {
  const auto it = dims.find(key);
  if (it == dims.end()) throw DataError("checkpoint manifest has no dims." + key);
  return it->second;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  check_token("type", c.type, false);
  std::string m = std::string(kMagic) + "\n";
  m += "version " + std::to_string(c.version) + "\n";
  m += "type " + c.type + "\n";
  m += "seed " + std::to_string(c.seed) + "\n";
  check_token("data hash", c.data_hash, true);
  m += "data-hash " + c.data_hash + "\n";
  for (const auto& [k, v] : c.dims) {
    check_token("dims key", k, false);
    check_token("dims value", v, true);
    m += "dims." + k + " " + v + "\n";
  }
  for (const auto& [k, v] : c.meta) {
    check_token("meta key", k, false);
    check_token("meta value", v, true);
    m += "meta." + k + " " + v + "\n";
  }
  std::vector<std::string> config_lines;
  {
    std::stringstream ss(c.config);
    std::string line;
    while (std::getline(ss, line)) config_lines.push_back(line);
  }
  m += "config " + std::to_string(config_lines.size()) + "\n";
  for (const auto& line : config_lines) m += line + "\n";
  std::string blobs;
  for (const auto& [name, t] : c.arrays) {
    check_token("array name", name, false);
    m += "array " + name + " " + std::to_string(t.rank());
    for (auto d : t.shape()) m += " " + std::to_string(d);
    m += "\n";
    for (double v : t.values()) append_le(blobs, v);
  }
  Sha256 h;
  h.update(m);
  h.update(blobs);
  m += "sha256 " + h.hex_digest() + "\nend\n";
  return m + blobs;
}

static Checkpoint parse_manifest_and_blobs(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) corrupt("manifest is truncated");
    line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
  };
  std::string line;
  next_line(line);
  if (line != kMagic) throw DataError("not a checkpoint file");

  Checkpoint c;
  c.version = -1;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> headers;
  std::string digest;
  std::size_t manifest_end = 0;
  while (true) {
    const std::size_t line_start = pos;
    next_line(line);
    if (line == "end") break;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "version") {
      c.version = std::atoi(value.c_str());
      if (c.version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + value);
      }
    } else if (key == "type") {
      c.type = value;
    } else if (key == "seed") {
      c.seed = std::stoull(value);
    } else if (key == "data-hash") {
      c.data_hash = value;
    } else if (key.rfind("dims.", 0) == 0) {
      c.dims[key.substr(5)] = value;
    } else if (key.rfind("meta.", 0) == 0) {
      c.meta[key.substr(5)] = value;
    } else if (key == "config") {
      const auto n = std::stoull(value);
      for (std::size_t i = 0; i < n; ++i) {
        next_line(line);
        c.config += line + "\n";
      }
    } else if (key == "array") {
      std::stringstream ss(value);
      std::string name;
      std::size_t rank = 0;
      ss >> name >> rank;
      std::vector<std::size_t> shape(rank);
      for (auto& d : shape) ss >> d;
      if (!ss) corrupt("bad array header '" + line + "'");
      headers.emplace_back(name, std::move(shape));
    } else if (key == "sha256") {
      digest = value;
      manifest_end = line_start;
    } else {
      throw DataError("unknown checkpoint manifest line '" + line + "'");
    }
  }
  if (c.version < 0) throw DataError("checkpoint has no version");
  if (digest.empty()) corrupt("no digest in manifest");

  std::size_t expected = 0;
  for (const auto& [name, shape] : headers) expected += shape_product(shape) * 8;
  if (bytes.size() - pos != expected) {
    corrupt("expected " + std::to_string(expected) + " blob bytes, found " +
            std::to_string(bytes.size() - pos));
  }
  Sha256 h;
  h.update(std::string_view(bytes).substr(0, manifest_end));
  h.update(std::string_view(bytes).substr(pos));
  if (h.hex_digest() != digest) corrupt("digest does not match contents");

  for (const auto& [name, shape] : headers) {
    std::vector<double> values(shape_product(shape));
    for (auto& v : values) {
      v = read_le(bytes.data() + pos);
      pos += 8;
    }
    c.arrays.emplace(name, Tensor(shape, std::move(values)));
  }
  return c;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  try {
    return parse_manifest_and_blobs(bytes);
  } catch (const std::invalid_argument&) {
    throw DataError("checkpoint manifest has a malformed number");
  } catch (const std::out_of_range&) {
    throw DataError("checkpoint manifest has a malformed number");
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const std::string bytes = serialize_checkpoint(c);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

void put_mlp(Checkpoint& c, const std::string& prefix, const MlpParams& p) {
  std::string acts;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    c.arrays[prefix + "." + std::to_string(l) + ".weight"] = layer.weight;
    c.arrays[prefix + "." + std::to_string(l) + ".bias"] = layer.bias;
    if (l) acts += ",";
    acts += to_string(layer.activation);
  }
  c.dims[prefix + ".layers"] = std::to_string(p.layers.size());
  c.dims[prefix + ".activations"] = acts;
}

MlpParams get_mlp(const Checkpoint& c, const std::string& prefix) {
  const std::size_t n = dim_count(c, prefix + ".layers");
  std::stringstream acts(c.dim(prefix + ".activations"));
  MlpParams p;
  for (std::size_t l = 0; l < n; ++l) {
    Layer layer;
    layer.weight = c.array(prefix + "." + std::to_string(l) + ".weight");
    layer.bias = c.array(prefix + "." + std::to_string(l) + ".bias");
    std::string act;
    if (!std::getline(acts, act, ',')) throw DataError("checkpoint " + prefix + " lacks activations");
    try {
      layer.activation = activation_from_string(act);
    } catch (const Error& e) {
      throw DataError(e.what());
    }
    p.layers.push_back(std::move(layer));
  }
  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw DataError(std::string("checkpoint ") + prefix + ": " + e.what());
  }
  return p;
}

Checkpoint price_checkpoint(const market::PriceModel& m) {
  Checkpoint c;
  c.type = "price";
  c.dims["width"] = std::to_string(m.width());
  c.arrays["mu_w"] = pack(m.mu_w);
  c.arrays["mu_b"] = scalar(m.mu_b);
  c.arrays["log_sigma_w"] = pack(m.log_sigma_w);
  c.arrays["log_sigma_b"] = scalar(m.log_sigma_b);
  return c;
}

market::PriceModel price_from_checkpoint(const Checkpoint& c) {
  expect_type(c, "price");
  market::PriceModel m;
  m.mu_w = unpack(c.array("mu_w"));
  m.mu_b = c.array("mu_b")[0];
  m.log_sigma_w = unpack(c.array("log_sigma_w"));
  m.log_sigma_b = c.array("log_sigma_b")[0];
  if (m.log_sigma_w.size() != m.mu_w.size()) throw DataError("price checkpoint heads disagree");
  return m;
}

Checkpoint click_checkpoint(const market::ClickModel& m) {
  Checkpoint c;
  c.type = "click";
  c.dims["width"] = std::to_string(m.width());
  c.arrays["w"] = pack(m.w);
  c.arrays["b"] = scalar(m.b);
  return c;
}

market::ClickModel click_from_checkpoint(const Checkpoint& c) {
  expect_type(c, "click");
  market::ClickModel m;
  m.w = unpack(c.array("w"));
  m.b = c.array("b")[0];
  return m;
}

Checkpoint state_model_checkpoint(const market::MarketStateModel& m) {
  Checkpoint c;
  c.type = "market-state";
  put_mlp(c, "generator", m.generator);
  put_mlp(c, "critic", m.critic);
  c.dims["width"] = std::to_string(m.width());
  c.dims["noise_dim"] = std::to_string(m.noise_dim());
  c.dims["fields"] = std::to_string(m.layout.size());
  Tensor layout({m.layout.size(), 3});
  for (std::size_t f = 0; f < m.layout.size(); ++f) {
    layout.at(f, 0) = static_cast<double>(m.layout[f].offset);
    layout.at(f, 1) = static_cast<double>(m.layout[f].width);
    layout.at(f, 2) = m.layout[f].multi_hot ? 1.0 : 0.0;
  }
  c.arrays["layout"] = std::move(layout);
  c.arrays["tau"] = scalar(m.tau);
  return c;
}

market::MarketStateModel state_model_from_checkpoint(const Checkpoint& c) {
  expect_type(c, "market-state");
  market::MarketStateModel m;
  m.generator = get_mlp(c, "generator");
  m.critic = get_mlp(c, "critic");
  const Tensor& layout = c.array("layout");
  if (layout.rank() != 2 || layout.cols() != 3) throw DataError("bad layout array in checkpoint");
  for (std::size_t f = 0; f < layout.rows(); ++f) {
    m.layout.push_back({static_cast<std::size_t>(layout.at(f, 0)),
                        static_cast<std::size_t>(layout.at(f, 1)), layout.at(f, 2) != 0.0});
  }
  m.tau = c.array("tau")[0];
  try {
    m.validate();
  } catch (const Error& e) {
    throw DataError(std::string("market-state checkpoint: ") + e.what());
  }
  return m;
}

Checkpoint qnetwork_checkpoint(const agents::QNetwork& net, const agents::ActionGrid& grid,
                               const std::string& agent_type) {
  Checkpoint c;
  c.type = agent_type;
  c.meta["agent_type"] = agent_type;
  c.dims["width"] = std::to_string(net.width());
  c.dims["actions"] = std::to_string(net.actions());
  c.arrays["f1.weight"] = net.f1_weight;
  c.arrays["f1.bias"] = net.f1_bias;
  put_mlp(c, "trunk", net.trunk);
  put_mlp(c, "value", net.value);
  put_mlp(c, "advantage", net.advantage);
  c.arrays["grid"] = pack(grid.bids);
  return c;
}

agents::QNetwork qnetwork_from_checkpoint(const Checkpoint& c) {
  agents::QNetwork net;
  net.f1_weight = c.array("f1.weight");
  net.f1_bias = c.array("f1.bias");
  net.trunk = get_mlp(c, "trunk");
  net.value = get_mlp(c, "value");
  net.advantage = get_mlp(c, "advantage");
  try {
    net.validate();
  } catch (const Error& e) {
    throw DataError(std::string("Q-network checkpoint: ") + e.what());
  }
  return net;
}

agents::ActionGrid grid_from_checkpoint(const Checkpoint& c) {
  return agents::ActionGrid{unpack(c.array("grid"))};
}

Checkpoint linbid_checkpoint(double base_bid, env::Utility utility,
                             const std::optional<market::ClickModel>& click, double avg_ctr) {
  Checkpoint c;
  c.type = "linbid";
  c.meta["agent_type"] = "linbid";
  c.meta["utility"] = env::to_string(utility);
  c.arrays["base_bid"] = scalar(base_bid);
  c.arrays["avg_ctr"] = scalar(avg_ctr);
  if (click) {
    c.arrays["click.w"] = pack(click->w);
    c.arrays["click.b"] = scalar(click->b);
  }
  return c;
}

Checkpoint rlb_checkpoint(const agents::DpTables& tables, const data::PriceHistogram& hist) {
  Checkpoint c;
  c.type = "rlb";
  c.meta["agent_type"] = "rlb";
  c.dims["horizon"] = std::to_string(tables.horizon);
  c.dims["max_budget"] = std::to_string(tables.max_budget);
  const std::size_t rows = tables.horizon + 1;
  const std::size_t cols = tables.max_budget + 1;
  c.arrays["value"] = Tensor({rows, cols}, tables.value);
  std::vector<double> policy(tables.policy.begin(), tables.policy.end());
  c.arrays["policy"] = Tensor({rows, cols}, std::move(policy));
  c.arrays["bids"] = pack(tables.bids);
  c.arrays["histogram"] = pack(hist.pmf);
  std::string blob;
  for (double p : hist.pmf) append_le(blob, p);
  c.meta["histogram_hash"] = sha256_hex(blob);
  return c;
}

agents::DpTables rlb_from_checkpoint(const Checkpoint& c) {
  expect_type(c, "rlb");
  agents::DpTables t;
  t.horizon = dim_count(c, "horizon");
  t.max_budget = dim_count(c, "max_budget");
  t.value = unpack(c.array("value"));
  for (double p : c.array("policy").values()) t.policy.push_back(static_cast<std::int32_t>(p));
  t.bids = unpack(c.array("bids"));
  if (t.value.size() != (t.horizon + 1) * (t.max_budget + 1) || t.policy.size() != t.value.size()) {
    throw DataError("rlb checkpoint tables have the wrong size");
  }
  for (auto a : t.policy) {
    if (a < 0 || static_cast<std::size_t>(a) >= t.bids.size()) throw DataError("rlb policy index out of range");
  }
  return t;
}

std::unique_ptr<agents::Policy> policy_from_checkpoint(const Checkpoint& c) {
  const auto it = c.meta.find("agent_type");
  if (it == c.meta.end()) throw DataError("checkpoint of type '" + c.type + "' is not an agent");
  const std::string& kind = it->second;
  if (kind == "exddqn" || kind == "fdqi") {
    return std::make_unique<agents::QPolicy>(qnetwork_from_checkpoint(c), grid_from_checkpoint(c), kind);
  }
  if (kind == "rlb") return std::make_unique<agents::RlbPolicy>(rlb_from_checkpoint(c));
  if (kind == "linbid") {
    std::optional<market::ClickModel> click;
    if (c.arrays.count("click.w")) {
      click = market::ClickModel{unpack(c.array("click.w")), c.array("click.b")[0]};
    }
    return std::make_unique<agents::LinBidPolicy>(c.array("base_bid")[0],
                                                  env::utility_from_string(c.meta_value("utility")),
                                                  std::move(click), c.array("avg_ctr")[0]);
  }
  throw DataError("unknown agent_type '" + kind + "'");
}

}  // namespace rtb::harness
