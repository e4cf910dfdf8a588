#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "snowball/bottom_up.hpp"
#include "snowball/dataset.hpp"

namespace snowball {

enum class DefenseKind { snowball, snowball_minus, fedavg, krum, ideal };
enum class AttackKind { none, cba, dba };

/// Everything a run depends on. Every field has a config-file key; see
/// config_keys() for the names.
struct ExperimentConfig {
  std::uint64_t seed = 0;

  // data
  std::size_t features = 32;
  int classes = 4;
  double class_sep = 6.0;
  std::size_t n_train = 8000;
  std::size_t n_test = 1000;
  std::string data_csv;  // when set, replaces the synthetic generator (split 9:1)
  std::string label_column = "label";
  PartitionScheme partition = PartitionScheme::dirichlet_label_skew;
  double alpha = 0.5;
  double shift_sigma = 1.0;

  // client model and local training
  std::size_t hidden = 64;
  std::size_t clients = 40;
  std::size_t participants = 20;
  std::size_t rounds = 40;
  std::size_t local_epochs = 5;
  double lr0 = 0.01;
  double lr_decay = 0.99;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 10;

  // attack
  AttackKind attack = AttackKind::cba;
  double mcr = 0.2;
  double pdr = 0.3;
  std::size_t trigger_slots = 9;
  double trigger_value = 3.0;
  int target_class = 0;
  bool attackers_always_sampled = false;
  bool ba_exclude_target = true;

  // defense
  DefenseKind defense = DefenseKind::snowball;
  std::size_t initial_selectees = 2;   // bottom-up winners
  std::size_t target_selectees = 10;   // top-down stops here
  std::size_t step_selectees = 1;      // admitted per top-down step
  std::size_t clusters = 0;            // 0 = gap statistic on the first election round
  std::size_t vae_start_round = 10;    // top-down runs in rounds t > this
  std::size_t vae_init_epochs = 30;
  std::size_t vae_tune_epochs = 5;
  std::size_t vae_hidden = 64;
  std::size_t vae_latent = 16;
  double vae_lr = 1e-3;
  double vae_momentum = 0.0;
  std::size_t vae_batch = 32;
  bool vae_standardize = false;
  LayerPolicyMode layer_policy = LayerPolicyMode::top_divergence;
  std::size_t election_layers = 2;
  std::size_t gap_min = 2;
  std::size_t gap_max = 15;
  std::size_t gap_refs = 10;
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-6;
  double krum_f_ratio = 0.3;
  std::size_t krum_select = 0;  // 0 = target_selectees

  // output
  bool csv_wallclock = false;  // false writes 0 so rounds.csv stays byte-reproducible
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

std::vector<std::string> config_keys();

/// Parses flat `key = value` text (one pair per line, `#` starts a comment),
/// applies overrides on top, fills derived defaults (target_selectees = K/2,
/// initial_selectees = 0.1K, step_selectees = 0.04K, vae_start_round = T/4
/// when not given) and validates. Errors are ConfigError carrying the line
/// number of the offending key (0 for overrides and derived values).
ExperimentConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides = {});
ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

// Every key with its resolved value, in config_keys() order. Parsing the result
// yields an identical configuration.
std::string to_config_text(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

std::string to_string(DefenseKind d);
std::string to_string(AttackKind a);
std::string to_string(PartitionScheme p);
std::string to_string(LayerPolicyMode m);

}  // namespace snowball
