#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "rtb/agents/baselines.hpp"
#include "rtb/agents/dqn.hpp"
#include "rtb/core/tensor.hpp"
#include "rtb/market/action_model.hpp"
#include "rtb/market/state_model.hpp"

namespace rtb::harness {

inline constexpr int kCheckpointVersion = 1;

// On disk: a line-oriented text manifest, then the arrays as raw
// little-endian float64 blobs in name order. The manifest ends with a SHA-256
// over the manifest text and every blob, checked on load.
//
//   rtb-checkpoint
//   version 1
//   type exddqn
//   seed 7
//   data-hash <hex>
//   dims.<key> <value>
//   meta.<key> <value>
//   config <n>        followed by n config lines
//   array <name> <rank> <d0> ... <d_rank-1>
//   sha256 <hex>
//   end
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string type;
  std::uint64_t seed = 0;
  std::string data_hash;
  std::map<std::string, std::string> dims;
  std::map<std::string, std::string> meta;
  std::string config;  // echoed key=value text
  std::map<std::string, Tensor> arrays;

  const Tensor& array(const std::string& name) const;
  const std::string& meta_value(const std::string& key) const;
  const std::string& dim(const std::string& key) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& c);
// Throws DataError on a bad header, an unknown version or a hash mismatch
// (which is what a truncated file produces).
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Model <-> checkpoint. Loaders throw DataError when the type is wrong or an
// array is missing or misshapen.
void put_mlp(Checkpoint& c, const std::string& prefix, const MlpParams& p);
MlpParams get_mlp(const Checkpoint& c, const std::string& prefix);

Checkpoint price_checkpoint(const market::PriceModel& m);
market::PriceModel price_from_checkpoint(const Checkpoint& c);

Checkpoint click_checkpoint(const market::ClickModel& m);
market::ClickModel click_from_checkpoint(const Checkpoint& c);

Checkpoint state_model_checkpoint(const market::MarketStateModel& m);
market::MarketStateModel state_model_from_checkpoint(const Checkpoint& c);

// Agents carry meta.agent_type in {exddqn, fdqi, linbid, rlb}.
Checkpoint qnetwork_checkpoint(const agents::QNetwork& net, const agents::ActionGrid& grid,
                               const std::string& agent_type);
agents::QNetwork qnetwork_from_checkpoint(const Checkpoint& c);
agents::ActionGrid grid_from_checkpoint(const Checkpoint& c);

Checkpoint linbid_checkpoint(double base_bid, env::Utility utility,
                             const std::optional<market::ClickModel>& click, double avg_ctr);
Checkpoint rlb_checkpoint(const agents::DpTables& tables, const data::PriceHistogram& hist);
agents::DpTables rlb_from_checkpoint(const Checkpoint& c);

std::unique_ptr<agents::Policy> policy_from_checkpoint(const Checkpoint& c);

}  // namespace rtb::harness
