#include "snowball/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <system_error>

#include "snowball/error.hpp"
#include "snowball/parallel.hpp"

#ifndef SNOWBALL_VERSION
#define SNOWBALL_VERSION "unknown"
#endif
#ifndef SNOWBALL_BUILD_ID
#define SNOWBALL_BUILD_ID "unknown"
#endif

namespace snowball {

using nlohmann::json;

std::string format_real(double value) {
  if (!std::isfinite(value)) throw NumericError("cannot format non-finite value");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 6);
  if (ec != std::errc()) throw NumericError("value too large to format");
  std::string s(buf, end);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string rounds_csv(std::span<const RoundRecord> rounds, bool include_wallclock) {
  std::string out = kRoundsCsvHeader;
  out += '\n';
  for (const auto& r : rounds) {
    const auto& m = r.metrics;
    out += std::to_string(r.round);
    for (double v : {m.ma, m.ba, m.fpr, m.fnr}) {
      out += ',';
      out += format_real(v);
    }
    out += ',' + std::to_string(m.n_selected) + ',' + std::to_string(m.n_infected_selected) + ',';
    out += format_real(include_wallclock ? m.wallclock_ms : 0.0);
    out += '\n';
  }
  return out;
}

namespace {

json bottom_up_json(const BottomUpResult& bu) {
  json voters = json::array();
  for (const auto& v : bu.audit) {
    voters.push_back({{"voter", v.voter},
                      {"layer", v.layer},
                      {"n_clusters", v.n_clusters},
                      {"ch_score", std::isfinite(v.ch_score) ? json(v.ch_score) : json("inf")},
                      {"weight", v.weight},
                      {"cluster_sizes", v.cluster_sizes},
                      {"own_cluster_size", v.own_cluster_size}});
  }
  return {{"selected", bu.selected},
          {"client_ids", bu.tally.client_ids},
          {"counters", bu.tally.counters},
          {"layers", bu.tally.layers},
          {"per_layer", bu.tally.per_layer},
          {"voters", voters}};
}

json top_down_json(const TopDownResult& td) {
  json steps = json::array();
  for (const auto& s : td.steps) {
    steps.push_back({{"selected_before", s.selected_before},
                     {"difference_count", s.difference_count},
                     {"mean_loss_after_tuning", s.mean_loss_after_tuning},
                     {"added", s.added},
                     {"added_scores", s.added_scores}});
  }
  return {{"selected", td.selected}, {"steps", steps}};
}

json summary_fields(const ExperimentSummary& s) {
  return {{"ma", s.ma},
          {"ba", s.ba},
          {"best_round", s.best_round},
          {"initial_ma", s.initial_ma},
          {"initial_ba", s.initial_ba},
          {"mean_fpr", s.mean_fpr},
          {"mean_fnr", s.mean_fnr},
          {"cluster_count", s.cluster_count},
          {"election_layers", s.election_layers},
          {"attackers", s.attackers}};
}

json config_json(const ExperimentConfig& c) {
  // Echo of the resolved config text, one key per entry, values as written.
  json out = json::object();
  const std::string text = to_config_text(c);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace

std::string audit_line(const RoundRecord& r) {
  json j = {{"round", r.round},
            {"learning_rate", r.learning_rate},
            {"participants", r.participants},
            {"infected", r.infected},
            {"selected", r.selected},
            {"aggregated", r.aggregated},
            {"fpr", r.metrics.fpr},
            {"fnr", r.metrics.fnr}};
  if (r.distances.defined)
    j["distances"] = {{"benign_benign", r.distances.benign_benign}, {"benign_infected", r.distances.benign_infected}};
  if (r.bottom_up) j["bottom_up"] = bottom_up_json(*r.bottom_up);
  if (r.top_down) j["top_down"] = top_down_json(*r.top_down);
  if (!r.krum_scores.empty()) j["krum_scores"] = r.krum_scores;
  return j.dump();
}

RunManifest make_manifest(const ExperimentResult& result) {
  RunManifest m;
  m.version = SNOWBALL_VERSION;
  m.build_id = SNOWBALL_BUILD_ID;
  m.config_file = "config.resolved";
  m.artifacts = {"rounds.csv", "audit.jsonl", "config.resolved", "summary.json"};
  m.threads = worker_count();
  m.wallclock_ms = result.summary.total_wallclock_ms;
  return m;
}

std::string summary_json(const ExperimentConfig& config, const ExperimentResult& result, const RunManifest& manifest) {
  json j = summary_fields(result.summary);
  j["rounds"] = result.rounds.size();
  j["config"] = config_json(config);
  j["manifest"] = {{"version", manifest.version},
                   {"build_id", manifest.build_id},
                   {"config_file", manifest.config_file},
                   {"artifacts", manifest.artifacts},
                   {"threads", manifest.threads},
                   {"wallclock_ms", manifest.wallclock_ms},
                   {"reproduce", "snowball_sim run --config " + manifest.config_file}};
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void write_outputs(const std::filesystem::path& out_dir, const ExperimentConfig& config,
                   const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  write_text_file(out_dir / "rounds.csv", rounds_csv(result.rounds, config.csv_wallclock));
  std::string audit;
  for (const auto& r : result.rounds) audit += audit_line(r) + '\n';
  write_text_file(out_dir / "audit.jsonl", audit);
  write_text_file(out_dir / "config.resolved", to_config_text(config));
  write_text_file(out_dir / "summary.json", summary_json(config, result, make_manifest(result)));
}

std::string sweep_summary_json(const ExperimentConfig& base, std::vector<SweepEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  json runs = json::array();
  for (const auto& e : entries) {
    json r = summary_fields(e.summary);
    r["seed"] = e.seed;
    r["directory"] = e.directory;
    runs.push_back(std::move(r));
  }

  auto stats = [&](auto field) {
    const auto n = static_cast<double>(entries.size());
    double mean = 0.0;
    for (const auto& e : entries) mean += field(e.summary);
    mean = entries.empty() ? 0.0 : mean / n;
    double ss = 0.0;
    for (const auto& e : entries) ss += (field(e.summary) - mean) * (field(e.summary) - mean);
    const double sd = entries.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return json{{"mean", mean}, {"std", sd}};
  };

  json j;
  j["seeds"] = entries.size();
  j["ma"] = stats([](const ExperimentSummary& s) { return s.ma; });
  j["ba"] = stats([](const ExperimentSummary& s) { return s.ba; });
  j["mean_fpr"] = stats([](const ExperimentSummary& s) { return s.mean_fpr; });
  j["mean_fnr"] = stats([](const ExperimentSummary& s) { return s.mean_fnr; });
  j["runs"] = runs;
  j["config"] = config_json(base);
  return j.dump(2) + "\n";
}

}  // namespace snowball
