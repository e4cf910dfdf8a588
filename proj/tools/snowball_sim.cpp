// snowball_sim: command-line runner for the federated backdoor simulator.
//
//   snowball_sim run   [--config PATH] [--out DIR] [--defense D] [--attack A] [--seed S] [--key value ...]
//   snowball_sim sweep --seeds A..B [same flags]
//   snowball_sim check [--config PATH] [overrides]
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "snowball/config.hpp"
#include "snowball/engine.hpp"
#include "snowball/error.hpp"
#include "snowball/report.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::string> defense;
  std::optional<std::string> attack;
  std::optional<std::string> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out) {
  cmd->add_option("--config", o.config_path, "Flat key = value config file");
  if (with_out) cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--defense", o.defense, "snowball | snowball_minus | fedavg | krum | ideal");
  cmd->add_option("--attack", o.attack, "none | cba | dba");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_flag("--quiet,-q", o.quiet, "No per-round progress on stderr");
  cmd->allow_extras();
}

// Leftover `--key value` / `--key=value` pairs become config overrides.
snowball::ConfigOverrides collect_overrides(const CLI::App* cmd, const CommonOptions& o) {
  snowball::ConfigOverrides out;
  const auto extras = cmd->remaining();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) throw snowball::ConfigError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw snowball::ConfigError("missing value for --" + key);
      value = extras[++i];
    }
    for (char& ch : key)
      if (ch == '-') ch = '_';
    out.emplace_back(key, value);
  }
  if (o.defense) out.emplace_back("defense", *o.defense);
  if (o.attack) out.emplace_back("attack", *o.attack);
  if (o.seed) out.emplace_back("seed", *o.seed);
  return out;
}

snowball::ExperimentConfig load(const CLI::App* cmd, const CommonOptions& o) {
  const auto overrides = collect_overrides(cmd, o);
  if (o.config_path.empty()) return snowball::parse_config_text("", overrides);
  return snowball::parse_config(o.config_path, overrides);
}

snowball::RoundObserver progress(bool quiet, const std::string& prefix) {
  if (quiet) return {};
  return [prefix](const snowball::RoundRecord& r) {
    std::fprintf(stderr, "%sround %zu  ma=%.4f ba=%.4f fpr=%.3f fnr=%.3f selected=%zu (%zu infected)\n",
                 prefix.c_str(), r.round, r.metrics.ma, r.metrics.ba, r.metrics.fpr, r.metrics.fnr,
                 r.metrics.n_selected, r.metrics.n_infected_selected);
  };
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const auto s = std::stoull(text);
      return {s, s};
    }
    std::size_t used = 0;
    const auto a = std::stoull(text.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(text);
    const auto rest = text.substr(dots + 2);
    const auto b = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    if (b < a) throw snowball::ConfigError("seed range '" + text + "' is empty");
    return {a, b};
  } catch (const std::logic_error&) {
    throw snowball::ConfigError("bad seed range '" + text + "' (expected A..B)");
  }
}

int cmd_run(const CLI::App* cmd, const CommonOptions& o) {
  const auto config = load(cmd, o);
  const auto result = snowball::run_experiment(config, progress(o.quiet, ""));
  snowball::write_outputs(o.out_dir, config, result);
  std::printf("ma=%.6f ba=%.6f best_round=%zu out=%s\n", result.summary.ma, result.summary.ba,
              result.summary.best_round, o.out_dir.c_str());
  return 0;
}

int cmd_sweep(const CLI::App* cmd, const CommonOptions& o, const std::string& seeds) {
  const auto [first, last] = parse_seed_range(seeds);
  const auto base = load(cmd, o);
  const auto overrides = collect_overrides(cmd, o);
  std::vector<snowball::SweepEntry> entries;
  for (std::uint64_t s = first; s <= last; ++s) {
    auto with_seed = overrides;
    with_seed.emplace_back("seed", std::to_string(s));
    const auto config = o.config_path.empty() ? snowball::parse_config_text("", with_seed)
                                              : snowball::parse_config(o.config_path, with_seed);
    const std::string dir = "seed_" + std::to_string(s);
    const auto result = snowball::run_experiment(config, progress(o.quiet, "[seed " + std::to_string(s) + "] "));
    snowball::write_outputs(std::filesystem::path(o.out_dir) / dir, config, result);
    entries.push_back({s, dir, result.summary});
    std::printf("seed=%llu ma=%.6f ba=%.6f\n", static_cast<unsigned long long>(s), result.summary.ma,
                result.summary.ba);
    if (s == last) break;  // guard against wrap-around at UINT64_MAX
  }
  snowball::write_text_file(std::filesystem::path(o.out_dir) / "summary.json",
                            snowball::sweep_summary_json(base, std::move(entries)));
  return 0;
}

int cmd_check(const CLI::App* cmd, const CommonOptions& o) {
  std::cout << snowball::to_config_text(load(cmd, o));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning backdoor simulator with the Snowball defense"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, check_opts;
  std::string seeds;
  auto* run = app.add_subcommand("run", "Run one experiment");
  add_common(run, run_opts, true);
  auto* sweep = app.add_subcommand("sweep", "Run a range of seeds and aggregate");
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--seeds", seeds, "Seed range A..B (inclusive)")->required();
  auto* check = app.add_subcommand("check", "Validate a configuration and print it resolved");
  add_common(check, check_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run, run_opts);
    if (sweep->parsed()) return cmd_sweep(sweep, sweep_opts, seeds);
    return cmd_check(check, check_opts);
  } catch (const snowball::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
