#pragma once

// One function per `rtb` subcommand. Each reads and writes files only, so a
// whole experiment can be replayed from its directory of artifacts.

#include <filesystem>
#include <string>
#include <vector>

#include "rtb/data/dataset.hpp"
#include "rtb/env/sim_env.hpp"
#include "rtb/harness/checkpoint.hpp"
#include "rtb/harness/config.hpp"
#include "rtb/harness/evaluate.hpp"
#include "rtb/harness/mmd.hpp"

namespace rtb::harness {

namespace fs = std::filesystem;

std::string run_ingest(const fs::path& logs, const fs::path& schema, const fs::path& out,
                       const data::IngestOptions& options);
std::string run_synth(const fs::path& spec, const fs::path& out, data::IngestOptions options);
std::string run_stats(const fs::path& dataset);

// Market models are trained on one split and tagged with it. Every model
// checkpoint also records the train-split CPM (for state normalisation), the
// CPM of its own split and the largest training price.
Checkpoint run_train_market(const fs::path& dataset, data::Split split, const fs::path& out,
                            const Config& config);
Checkpoint run_train_price(const fs::path& dataset, data::Split split, const fs::path& out,
                           const Config& config);
Checkpoint run_train_click(const fs::path& dataset, data::Split split, const fs::path& out,
                           const Config& config);

// Simulator from market-state, price and (optional) click checkpoints, all
// of which must carry `split`.
env::SimEnv load_env(const std::vector<fs::path>& checkpoints, const std::string& split,
                     const Config& config);
// The train-split CPM, largest training price and own-split CPM recorded in
// the price checkpoint among `checkpoints`.
struct EnvScale {
  double cpm_train = 0.0;
  double cpm_split = 0.0;
  double max_price = 0.0;
};
EnvScale env_scale(const std::vector<fs::path>& checkpoints);

Checkpoint run_train_exddqn(const std::vector<fs::path>& env_checkpoints, const fs::path& out,
                            const Config& config);
Checkpoint run_train_fdqi(const fs::path& dataset, const fs::path& out, const Config& config);
Checkpoint run_tune_linbid(const fs::path& dataset, const std::vector<fs::path>& env_checkpoints,
                           const fs::path& out, const Config& config);
Checkpoint run_solve_rlb(const fs::path& dataset, const fs::path& out, const Config& config);

// Budget sweep on the test environment. Writes the report when `out` is
// non-empty and returns the table.
ResultTable run_evaluate(const std::vector<fs::path>& env_checkpoints,
                         const std::vector<fs::path>& agents, const Config& config,
                         const fs::path& out, ReportFormat format);

std::vector<MmdRow> run_mmd(const fs::path& dataset, const fs::path& model, data::Split split,
                            const Config& config);

}  // namespace rtb::harness
