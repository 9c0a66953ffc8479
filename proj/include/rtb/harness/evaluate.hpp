#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rtb/agents/policy.hpp"
#include "rtb/env/sim_env.hpp"
#include "rtb/harness/config.hpp"

namespace rtb::harness {

struct EpisodeStats {
  double mean = 0.0;  // over completed episodes
  double std = 0.0;   // sample standard deviation, 0 for fewer than two
  std::vector<double> totals;  // completed episodes, repeat order
  std::vector<double> spends;
  std::vector<std::size_t> aborted;  // repeats cut short by a non-finite bid
  std::vector<std::string> abort_reasons;
};

// Repeat k copies `test_env` and plays one episode on the tape
// rng.split("episode", k), so every agent and budget sees the same markets.
// Repeats run in parallel.
EpisodeStats evaluate_policy(const env::SimEnv& test_env, const agents::Policy& agent, double budget,
                             std::size_t horizon, std::size_t repeats, Rng rng);

// alpha * cpm * horizon / 1000
double budget_for(double alpha, double cpm, std::size_t horizon);

struct ResultRow {
  std::string agent;
  double alpha = 0.0;
  double reward_pct = 0.0;  // 100 * mean reward / horizon
  double std_pct = 0.0;
  double mean_spend = 0.0;
  std::size_t episodes = 0;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::string config;  // echoed at the top of written reports
};

// Rows in agent order, then alpha order. Throws ConfigError unless cpm_te > 0.
ResultTable budget_sweep(const std::vector<const agents::Policy*>& agents, const EvalConfig& config,
                         double cpm_te, const env::SimEnv& test_env);

enum class ReportFormat { Tsv, Text };
ReportFormat report_format_from_string(const std::string& name);

// "40.08 ± 0.1": mean to two decimals, std to at most two.
std::string format_mean_std(double mean, double std);

void write_report(const ResultTable& table, std::ostream& out, ReportFormat format);
void write_report(const ResultTable& table, const std::filesystem::path& path, ReportFormat format);
ResultTable read_report_tsv(std::istream& in);

}  // namespace rtb::harness
