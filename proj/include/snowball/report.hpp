#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snowball/config.hpp"
#include "snowball/engine.hpp"

namespace snowball {

inline constexpr const char* kRoundsCsvHeader =
    "round,ma,ba,fpr,fnr,n_selected,n_infected_selected,wallclock_ms";

// Fixed notation with six decimals; negative zero prints as 0.000000.
std::string format_real(double value);

// Header plus one LF-terminated row per round. wallclock_ms is written as 0
// unless include_wallclock is set.
std::string rounds_csv(std::span<const RoundRecord> rounds, bool include_wallclock);

// One JSON object (no trailing newline) describing a round's selection: ids,
// bottom-up tally and voter audit, top-down steps, Krum scores.
std::string audit_line(const RoundRecord& round);

struct RunManifest {
  std::string version;
  std::string build_id;
  std::string config_file;  // resolved config, relative to the output directory
  std::vector<std::string> artifacts;
  std::size_t threads = 0;
  double wallclock_ms = 0.0;
};

RunManifest make_manifest(const ExperimentResult& result);

std::string summary_json(const ExperimentConfig& config, const ExperimentResult& result, const RunManifest& manifest);

void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Writes rounds.csv, audit.jsonl, config.resolved and summary.json into
/// out_dir (created if missing). Failures raise IoError naming the path.
void write_outputs(const std::filesystem::path& out_dir, const ExperimentConfig& config,
                   const ExperimentResult& result);

struct SweepEntry {
  std::uint64_t seed = 0;
  std::string directory;  // relative to the sweep output directory
  ExperimentSummary summary;
};

// Mean and sample standard deviation of the per-seed summaries, entries sorted
// by seed first so the result does not depend on completion order.
std::string sweep_summary_json(const ExperimentConfig& base, std::vector<SweepEntry> entries);

}  // namespace snowball
