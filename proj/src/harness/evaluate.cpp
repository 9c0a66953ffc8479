#include "rtb/harness/evaluate.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "rtb/core/error.hpp"

namespace rtb::harness {

namespace {

struct EpisodeOutcome {
  double total = 0.0;
  double spend = 0.0;
  std::optional<std::string> aborted;
};

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string shortest(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  // Prefer the short form when it reads back exactly.
  for (int p = 1; p <= 17; ++p) {
    std::ostringstream t;
    t << std::setprecision(p) << v;
    if (std::stod(t.str()) == v) return t.str();
  }
  return ss.str();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

constexpr const char* kTsvHeader = "agent\talpha\treward_pct\tstd\tmean_spend\tepisodes";

}  // namespace

EpisodeStats evaluate_policy(const env::SimEnv& test_env, const agents::Policy& agent, double budget,
                             std::size_t horizon, std::size_t repeats, Rng rng) {
  if (repeats == 0) throw ConfigError("evaluation needs at least one repeat");
  std::vector<EpisodeOutcome> outcomes(repeats);
  std::exception_ptr failure;
  const auto n = static_cast<long>(repeats);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) {
    try {
      env::SimEnv env = test_env;
      auto obs = env.reset(budget, horizon, rng.split("episode", static_cast<std::uint64_t>(k)));
      try {
        while (!env.done()) obs = env.step(agent.bid(obs)).next;
        outcomes[static_cast<std::size_t>(k)] = {env.total_reward(), env.spend(), std::nullopt};
      } catch (const NumericalError& e) {
        outcomes[static_cast<std::size_t>(k)].aborted = e.what();
      }
    } catch (...) {
#pragma omp critical(rtb_evaluate_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  EpisodeStats s;
  for (std::size_t k = 0; k < repeats; ++k) {
    if (outcomes[k].aborted) {
      s.aborted.push_back(k);
      s.abort_reasons.push_back(*outcomes[k].aborted);
      continue;
    }
    s.totals.push_back(outcomes[k].total);
    s.spends.push_back(outcomes[k].spend);
  }
  if (!s.totals.empty()) {
    double sum = 0.0;
    for (double t : s.totals) sum += t;
    s.mean = sum / static_cast<double>(s.totals.size());
  }
  if (s.totals.size() > 1) {
    double ss = 0.0;
    for (double t : s.totals) ss += (t - s.mean) * (t - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.totals.size() - 1));
  }
  return s;
}

double budget_for(double alpha, double cpm, std::size_t horizon) {
  return alpha * cpm * static_cast<double>(horizon) / 1000.0;
}

ResultTable budget_sweep(const std::vector<const agents::Policy*>& agents, const EvalConfig& config,
                         double cpm_te, const env::SimEnv& test_env) {
  config.validate();
  if (!(cpm_te > 0.0) || !std::isfinite(cpm_te)) throw ConfigError("test CPM must be positive");
  ResultTable table;
  const Rng tapes = Rng(config.seed).split("evaluate");
  const double t0 = static_cast<double>(config.horizon);
  for (const auto* agent : agents) {
    for (double alpha : config.alphas) {
      const auto s = evaluate_policy(test_env, *agent, budget_for(alpha, cpm_te, config.horizon),
                                     config.horizon, config.repeats, tapes);
      ResultRow row;
      row.agent = agent->name();
      row.alpha = alpha;
      row.reward_pct = 100.0 * s.mean / t0;
      row.std_pct = 100.0 * s.std / t0;
      double spend = 0.0;
      for (double x : s.spends) spend += x;
      row.mean_spend = s.spends.empty() ? 0.0 : spend / static_cast<double>(s.spends.size());
      row.episodes = s.totals.size();
      table.rows.push_back(row);
    }
  }
  return table;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "tsv") return ReportFormat::Tsv;
  if (name == "text") return ReportFormat::Text;
  throw ConfigError("unknown report format '" + name + "' (tsv or text)");
}

std::string format_mean_std(double mean, double std) {
  std::string s = fixed2(std);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return fixed2(mean) + " ± " + s;
}

void write_report(const ResultTable& table, std::ostream& out, ReportFormat format) {
  if (table.rows.empty()) throw ConfigError("nothing to report");
  std::stringstream cfg(table.config);
  std::string line;
  while (std::getline(cfg, line)) out << "# " << line << '\n';
  if (format == ReportFormat::Tsv) {
    out << kTsvHeader << '\n';
    for (const auto& r : table.rows) {
      out << r.agent << '\t' << shortest(r.alpha) << '\t' << fixed2(r.reward_pct) << '\t'
          << fixed2(r.std_pct) << '\t' << fixed2(r.mean_spend) << '\t' << r.episodes << '\n';
    }
    return;
  }
  std::vector<std::array<std::string, 3>> cells = {{"agent", "alpha", "reward %"}};
  for (const auto& r : table.rows) {
    cells.push_back({r.agent, shortest(r.alpha), format_mean_std(r.reward_pct, r.std_pct)});
  }
  // "±" is two bytes but one column.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::array<std::size_t, 3> w{};
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < 3; ++i) w[i] = std::max(w[i], width(row[i]));
  }
  for (const auto& row : cells) {
    std::string l;
    for (std::size_t i = 0; i < 3; ++i) {
      if (i) l += "  ";
      l += row[i];
      if (i < 2) l += std::string(w[i] - width(row[i]), ' ');
    }
    out << l << '\n';
  }
}

void write_report(const ResultTable& table, const std::filesystem::path& path, ReportFormat format) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report " + path.string());
  write_report(table, out, format);
}

ResultTable read_report_tsv(std::istream& in) {
  ResultTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      t.config += line.substr(2) + "\n";
      continue;
    }
    if (line.empty()) continue;
    if (!header) {
      if (line != kTsvHeader) throw DataError("not a report TSV header: '" + line + "'");
      header = true;
      continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != 6) throw DataError("report row has " + std::to_string(f.size()) + " fields");
    try {
      t.rows.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4]),
                        static_cast<std::size_t>(std::stoull(f[5]))});
    } catch (const std::logic_error&) {
      throw DataError("malformed report row '" + line + "'");
    }
  }
  if (!header) throw DataError("report has no header");
  return t;
}

}  // namespace rtb::harness
