// rtb: command-line front end. Exit codes: 0 ok, 2 config, 3 data, 4 numerical.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rtb/core/error.hpp"
#include "rtb/harness/pipeline.hpp"

namespace {

namespace h = rtb::harness;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

struct Common {
  std::string profile = "desk";
  std::string config_file;
  std::vector<std::string> overrides;  // key=value

  void attach(CLI::App* cmd) {
    cmd->add_option("--profile", profile, "desk or paper")->capture_default_str();
    cmd->add_option("--config", config_file, "key=value file applied on top of the profile");
    cmd->add_option("--set", overrides, "extra key=value overrides");
  }

  h::Config build() const {
    auto c = h::Config::profile(profile);
    if (!config_file.empty()) c = h::Config::load(config_file, c);
    for (const auto& kv : overrides) c = h::Config::parse(kv, c);
    return c;
  }
};

rtb::data::Split parse_split(const std::string& s) {
  if (s != "train" && s != "test" && s != "validation") {
    throw rtb::ConfigError("--split must be train, validation or test");
  }
  return rtb::data::split_from_string(s);
}

std::vector<fs::path> paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch reinforcement learning for real-time bidding"};
  app.require_subcommand(1);

  rtb::data::IngestOptions ingest_opts;
  std::string logs, schema, out, dataset, split = "train", agent = "exddqn", format = "text", model;
  std::string spec_path, alphas, mmd_split = "test";
  std::vector<std::string> env_ckpts, agent_ckpts;
  Common common;

  auto add_ingest_flags = [&](CLI::App* cmd) {
    cmd->add_option("--min-count", ingest_opts.min_count, "keep categories seen this often")
        ->capture_default_str();
    cmd->add_option("--split-mode", ingest_opts.split_mode, "day or random")->capture_default_str();
    cmd->add_option("--seed", ingest_opts.seed, "seed for random splits")->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "parse raw logs into a dataset directory");
  ingest->add_option("logs", logs)->required();
  ingest->add_option("--schema", schema, "column schema file")->required();
  ingest->add_option("--out", out)->required();
  add_ingest_flags(ingest);

  auto* stats = app.add_subcommand("stats", "summarise a dataset directory");
  stats->add_option("dataset", dataset)->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic market dataset");
  synth->add_option("spec", spec_path, "JSON market description")->required();
  synth->add_option("--out", out)->required();
  add_ingest_flags(synth);

  auto model_cmd = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("dataset", dataset)->required();
    cmd->add_option("--split", split, "train or test")->capture_default_str();
    cmd->add_option("--out", out)->required();
    common.attach(cmd);
    return cmd;
  };
  auto* train_market = model_cmd("train-market", "fit the bid-request generator");
  auto* train_price = model_cmd("train-price", "fit the censored market-price model");
  auto* train_click = model_cmd("train-click", "fit the click model");

  auto* train_agent = app.add_subcommand("train-agent", "train Ex-DDQN in the simulator or FDQI on logs");
  train_agent->add_option("--env", env_ckpts, "market-state, price and click checkpoints");
  train_agent->add_option("--data", dataset, "dataset directory (fdqi)");
  train_agent->add_option("--agent", agent, "exddqn or fdqi")->capture_default_str();
  train_agent->add_option("--out", out)->required();
  common.attach(train_agent);

  auto* tune = app.add_subcommand("tune-linbid", "pick the LinBid base bid on the training simulator");
  tune->add_option("--env", env_ckpts)->required();
  tune->add_option("--data", dataset)->required();
  tune->add_option("--out", out)->required();
  common.attach(tune);

  auto* rlb = app.add_subcommand("solve-rlb", "solve the RLB dynamic program");
  rlb->add_option("--data", dataset)->required();
  rlb->add_option("--out", out)->required();
  common.attach(rlb);

  auto* evaluate = app.add_subcommand("evaluate", "budget sweep on the test simulator");
  evaluate->add_option("--env", env_ckpts)->required();
  evaluate->add_option("--agents", agent_ckpts)->required();
  evaluate->add_option("--alphas", alphas, "comma separated budget multipliers");
  evaluate->add_option("--out", out, "report file");
  evaluate->add_option("--format", format, "tsv or text")->capture_default_str();
  common.attach(evaluate);

  auto* mmd = app.add_subcommand("mmd", "compare generated requests with held-out ones");
  mmd->add_option("--data", dataset)->required();
  mmd->add_option("--model", model)->required();
  mmd->add_option("--split", mmd_split, "held-out split")->capture_default_str();
  common.attach(mmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    auto describe = [](const rtb::harness::Checkpoint& c, const std::string& path) {
      std::cout << "wrote " << c.type << " checkpoint " << path << "\n";
    };
    if (*ingest) {
      std::cout << h::run_ingest(logs, schema, out, ingest_opts);
    } else if (*stats) {
      std::cout << h::run_stats(dataset);
    } else if (*synth) {
      std::cout << h::run_synth(spec_path, out, ingest_opts);
    } else if (*train_market) {
      describe(h::run_train_market(dataset, parse_split(split), out, common.build()), out);
    } else if (*train_price) {
      describe(h::run_train_price(dataset, parse_split(split), out, common.build()), out);
    } else if (*train_click) {
      describe(h::run_train_click(dataset, parse_split(split), out, common.build()), out);
    } else if (*train_agent) {
      const auto cfg = common.build();
      if (agent == "exddqn") {
        if (env_ckpts.empty()) throw rtb::ConfigError("exddqn needs --env checkpoints");
        describe(h::run_train_exddqn(paths(env_ckpts), out, cfg), out);
      } else if (agent == "fdqi") {
        if (dataset.empty()) throw rtb::ConfigError("fdqi needs --data");
        describe(h::run_train_fdqi(dataset, out, cfg), out);
      } else {
        throw rtb::ConfigError("--agent must be exddqn or fdqi");
      }
    } else if (*tune) {
      const auto c = h::run_tune_linbid(dataset, paths(env_ckpts), out, common.build());
      std::cout << "base bid " << c.array("base_bid")[0] << "\n";
      describe(c, out);
    } else if (*rlb) {
      describe(h::run_solve_rlb(dataset, out, common.build()), out);
    } else if (*evaluate) {
      auto cfg = common.build();
      if (!alphas.empty()) cfg.set("alphas", alphas);
      const auto fmt = h::report_format_from_string(format);
      const auto table = h::run_evaluate(paths(env_ckpts), paths(agent_ckpts), cfg, out, fmt);
      h::ResultTable shown = table;
      shown.config.clear();
      h::write_report(shown, std::cout, h::ReportFormat::Text);
    } else if (*mmd) {
      const auto rows = h::run_mmd(dataset, model, parse_split(mmd_split), common.build());
      for (const auto& r : rows) {
        std::printf("%-8s %.4f ± %.4f\n", r.sampler.c_str(), r.mean, r.std);
      }
    }
  } catch (const rtb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const rtb::ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const rtb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const rtb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
