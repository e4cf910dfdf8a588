#include "snowball/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "snowball/error.hpp"

namespace snowball {

std::string to_string(DefenseKind d) {
  switch (d) {
    case DefenseKind::snowball: return "snowball";
    case DefenseKind::snowball_minus: return "snowball_minus";
    case DefenseKind::fedavg: return "fedavg";
    case DefenseKind::krum: return "krum";
    case DefenseKind::ideal: return "ideal";
  }
  return "?";
}

std::string to_string(AttackKind a) {
  switch (a) {
    case AttackKind::none: return "none";
    case AttackKind::cba: return "cba";
    case AttackKind::dba: return "dba";
  }
  return "?";
}

std::string to_string(PartitionScheme p) {
  return p == PartitionScheme::dirichlet_label_skew ? "dirichlet" : "feature_shift";
}

std::string to_string(LayerPolicyMode m) {
  switch (m) {
    case LayerPolicyMode::all: return "all";
    case LayerPolicyMode::first_last: return "first_last";
    case LayerPolicyMode::top_divergence: return "top_divergence";
  }
  return "?";
}

namespace {

// Thrown by value parsers; turned into a ConfigError with key and line.
struct BadValue {
  std::string expected;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v, const char* what) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || first == last) throw BadValue{what};
  return out;
}

void parse_into(const std::string& v, std::uint64_t& out) {
  if (!v.empty() && v.front() == '-') throw BadValue{"non-negative integer"};
  out = parse_number<std::uint64_t>(v, "non-negative integer");
}
void parse_into(const std::string& v, int& out) { out = parse_number<int>(v, "integer"); }
void parse_into(const std::string& v, double& out) {
  out = parse_number<double>(v, "real number");
  if (!std::isfinite(out)) throw BadValue{"finite real number"};
}
void parse_into(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes") out = true;
  else if (v == "false" || v == "0" || v == "no") out = false;
  else throw BadValue{"boolean (true/false)"};
}
void parse_into(const std::string& v, std::string& out) { out = v; }
void parse_into(const std::string& v, DefenseKind& out) {
  for (auto d : {DefenseKind::snowball, DefenseKind::snowball_minus, DefenseKind::fedavg, DefenseKind::krum,
                 DefenseKind::ideal})
    if (v == to_string(d)) {
      out = d;
      return;
    }
  throw BadValue{"one of snowball, snowball_minus, fedavg, krum, ideal"};
}
void parse_into(const std::string& v, AttackKind& out) {
  for (auto a : {AttackKind::none, AttackKind::cba, AttackKind::dba})
    if (v == to_string(a)) {
      out = a;
      return;
    }
  throw BadValue{"one of none, cba, dba"};
}
void parse_into(const std::string& v, PartitionScheme& out) {
  if (v == "dirichlet") out = PartitionScheme::dirichlet_label_skew;
  else if (v == "feature_shift") out = PartitionScheme::feature_shift;
  else throw BadValue{"one of dirichlet, feature_shift"};
}
void parse_into(const std::string& v, LayerPolicyMode& out) {
  for (auto m : {LayerPolicyMode::all, LayerPolicyMode::first_last, LayerPolicyMode::top_divergence})
    if (v == to_string(m)) {
      out = m;
      return;
    }
  throw BadValue{"one of all, first_last, top_divergence"};
}

std::string format(std::uint64_t v) { return std::to_string(v); }
std::string format(int v) { return std::to_string(v); }
std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }
template <typename E>
  requires std::is_enum_v<E>
std::string format(E v) {
  return to_string(v);
}

struct KeyDef {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <auto Member>
KeyDef field(const char* name) {
  return {name, [](ExperimentConfig& c, const std::string& v) { parse_into(v, c.*Member); },
          [](const ExperimentConfig& c) { return format(c.*Member); }};
}

const std::vector<KeyDef>& registry() {
  using C = ExperimentConfig;
  static const std::vector<KeyDef> keys = {
      field<&C::seed>("seed"),
      field<&C::features>("features"),
      field<&C::classes>("classes"),
      field<&C::class_sep>("class_sep"),
      field<&C::n_train>("n_train"),
      field<&C::n_test>("n_test"),
      field<&C::data_csv>("data_csv"),
      field<&C::label_column>("label_column"),
      field<&C::partition>("partition"),
      field<&C::alpha>("alpha"),
      field<&C::shift_sigma>("shift_sigma"),
      field<&C::hidden>("hidden"),
      field<&C::clients>("clients"),
      field<&C::participants>("participants"),
      field<&C::rounds>("rounds"),
      field<&C::local_epochs>("local_epochs"),
      field<&C::lr0>("lr0"),
      field<&C::lr_decay>("lr_decay"),
      field<&C::momentum>("momentum"),
      field<&C::weight_decay>("weight_decay"),
      field<&C::batch_size>("batch_size"),
      field<&C::attack>("attack"),
      field<&C::mcr>("mcr"),
      field<&C::pdr>("pdr"),
      field<&C::trigger_slots>("trigger_slots"),
      field<&C::trigger_value>("trigger_value"),
      field<&C::target_class>("target_class"),
      field<&C::attackers_always_sampled>("attackers_always_sampled"),
      field<&C::ba_exclude_target>("ba_exclude_target"),
      field<&C::defense>("defense"),
      field<&C::initial_selectees>("initial_selectees"),
      field<&C::target_selectees>("target_selectees"),
      field<&C::step_selectees>("step_selectees"),
      field<&C::clusters>("clusters"),
      field<&C::vae_start_round>("vae_start_round"),
      field<&C::vae_init_epochs>("vae_init_epochs"),
      field<&C::vae_tune_epochs>("vae_tune_epochs"),
      field<&C::vae_hidden>("vae_hidden"),
      field<&C::vae_latent>("vae_latent"),
      field<&C::vae_lr>("vae_lr"),
      field<&C::vae_momentum>("vae_momentum"),
      field<&C::vae_batch>("vae_batch"),
      field<&C::vae_standardize>("vae_standardize"),
      field<&C::layer_policy>("layer_policy"),
      field<&C::election_layers>("election_layers"),
      field<&C::gap_min>("gap_min"),
      field<&C::gap_max>("gap_max"),
      field<&C::gap_refs>("gap_refs"),
      field<&C::kmeans_max_iter>("kmeans_max_iter"),
      field<&C::kmeans_tol>("kmeans_tol"),
      field<&C::krum_f_ratio>("krum_f_ratio"),
      field<&C::krum_select>("krum_select"),
      field<&C::csv_wallclock>("csv_wallclock"),
  };
  return keys;
}

const KeyDef* find_key(const std::string& name) {
  for (const auto& k : registry())
    if (k.name == name) return &k;
  return nullptr;
}

struct Setting {
  std::string value;
  int line = 0;  // 0: command-line override
};

using Settings = std::map<std::string, Setting>;

Settings read_settings(std::string_view text) {
  Settings settings;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    if (!find_key(key)) throw ConfigError("unknown key '" + key + "'", line_no);
    if (settings.contains(key))
      throw ConfigError("key '" + key + "' set twice (first on line " + std::to_string(settings[key].line) + ")",
                        line_no);
    settings[key] = {value, line_no};
  }
  return settings;
}

void check(bool ok, const std::string& message, const std::string& key, const Settings* settings) {
  if (ok) return;
  int line = 0;
  if (settings)
    if (auto it = settings->find(key); it != settings->end()) line = it->second.line;
  throw ConfigError("constraint violated: " + message, line);
}

void validate_with(const ExperimentConfig& c, const Settings* s) {
  check(c.classes >= 2, "classes >= 2", "classes", s);
  check(c.data_csv.empty() ? c.features >= static_cast<std::size_t>(c.classes) : true, "features >= classes",
        "features", s);
  check(c.class_sep > 0.0, "class_sep > 0", "class_sep", s);
  check(c.alpha > 0.0, "alpha > 0", "alpha", s);
  check(c.shift_sigma >= 0.0, "shift_sigma >= 0", "shift_sigma", s);
  check(c.hidden >= 1, "hidden >= 1", "hidden", s);
  check(c.clients >= 1, "clients >= 1", "clients", s);
  check(c.participants >= 1 && c.participants <= c.clients, "1 <= participants <= clients", "participants", s);
  check(c.data_csv.empty() ? c.n_train >= c.clients : true, "n_train >= clients", "n_train", s);
  check(c.data_csv.empty() ? c.n_test >= 1 : true, "n_test >= 1", "n_test", s);
  check(c.lr0 > 0.0, "lr0 > 0", "lr0", s);
  check(c.lr_decay > 0.0 && c.lr_decay <= 1.0, "0 < lr_decay <= 1", "lr_decay", s);
  check(c.momentum >= 0.0 && c.momentum < 1.0, "0 <= momentum < 1", "momentum", s);
  check(c.weight_decay >= 0.0, "weight_decay >= 0", "weight_decay", s);
  check(c.batch_size >= 1, "batch_size >= 1", "batch_size", s);
  check(c.mcr >= 0.0 && c.mcr < 0.5, "0 <= mcr < 0.5", "mcr", s);
  check(c.pdr >= 0.0 && c.pdr <= 1.0, "0 <= pdr <= 1", "pdr", s);
  check(c.trigger_slots >= 1 && (c.data_csv.empty() ? c.trigger_slots <= c.features : true),
        "1 <= trigger_slots <= features", "trigger_slots", s);
  check(c.attack != AttackKind::dba || c.trigger_slots % 3 == 0, "DBA needs trigger_slots divisible by 3",
        "trigger_slots", s);
  check(c.target_class >= 0 && c.target_class < c.classes, "0 <= target_class < classes", "target_class", s);
  check(c.initial_selectees >= 1, "initial_selectees >= 1", "initial_selectees", s);
  check(c.initial_selectees <= c.target_selectees, "initial_selectees <= target_selectees", "initial_selectees", s);
  check(c.target_selectees <= c.participants, "target_selectees <= participants", "target_selectees", s);
  check(c.defense != DefenseKind::snowball || c.initial_selectees >= 2 || c.target_selectees <= c.initial_selectees,
        "snowball top-down election needs initial_selectees >= 2", "initial_selectees", s);
  check(c.step_selectees >= 1, "step_selectees >= 1", "step_selectees", s);
  check(c.clusters == 0 || (c.clusters >= 2 && c.clusters <= c.participants), "clusters = 0 or 2 <= clusters <= participants",
        "clusters", s);
  check(c.rounds == 0 || c.vae_start_round < c.rounds, "vae_start_round < rounds", "vae_start_round", s);
  check(c.vae_hidden >= 1 && c.vae_latent >= 1, "vae_hidden, vae_latent >= 1", "vae_hidden", s);
  check(c.vae_lr > 0.0, "vae_lr > 0", "vae_lr", s);
  check(c.vae_momentum >= 0.0 && c.vae_momentum < 1.0, "0 <= vae_momentum < 1", "vae_momentum", s);
  check(c.vae_batch >= 1, "vae_batch >= 1", "vae_batch", s);
  check(c.election_layers >= 1, "election_layers >= 1", "election_layers", s);
  check(c.gap_min >= 1 && c.gap_min <= c.gap_max, "1 <= gap_min <= gap_max", "gap_min", s);
  check(c.gap_refs >= 1, "gap_refs >= 1", "gap_refs", s);
  check(c.kmeans_max_iter >= 1, "kmeans_max_iter >= 1", "kmeans_max_iter", s);
  check(c.kmeans_tol >= 0.0, "kmeans_tol >= 0", "kmeans_tol", s);
  check(c.krum_f_ratio >= 0.0 && c.krum_f_ratio < 1.0, "0 <= krum_f_ratio < 1", "krum_f_ratio", s);
  if (c.defense == DefenseKind::krum) {
    const auto f = static_cast<std::size_t>(std::ceil(c.krum_f_ratio * static_cast<double>(c.participants)));
    check(c.participants >= f + 3, "krum needs participants - ceil(krum_f_ratio * participants) - 2 >= 1",
          "krum_f_ratio", s);
    check(c.krum_select <= c.participants, "krum_select <= participants", "krum_select", s);
  }
}

ExperimentConfig resolve(const Settings& settings) {
  ExperimentConfig c;
  for (const auto& [key, setting] : settings) {
    try {
      find_key(key)->set(c, setting.value);
    } catch (const BadValue& bad) {
      throw ConfigError("key '" + key + "': expected " + bad.expected + ", got '" + setting.value + "'", setting.line);
    }
  }
  const auto given = [&](const char* key) { return settings.contains(key); };
  const auto rounded = [](double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); };
  const double k = static_cast<double>(c.participants);
  if (!given("target_selectees")) c.target_selectees = c.participants / 2;
  if (!given("initial_selectees")) c.initial_selectees = std::max<std::size_t>(1, rounded(0.1 * k));
  if (!given("step_selectees")) c.step_selectees = std::max<std::size_t>(1, rounded(0.04 * k));
  if (!given("vae_start_round")) c.vae_start_round = c.rounds / 4;
  validate_with(c, &settings);
  return c;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : registry()) out.push_back(k.name);
  return out;
}

void validate(const ExperimentConfig& config) { validate_with(config, nullptr); }

ExperimentConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides) {
  auto settings = read_settings(text);
  for (const auto& [key, value] : overrides) {
    if (!find_key(key)) throw ConfigError("unknown key '" + key + "' (from --" + key + ")");
    settings[key] = {trim(value), 0};
  }
  return resolve(settings);
}

ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), overrides);
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& k : registry()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace snowball
