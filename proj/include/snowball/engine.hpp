#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "snowball/baselines.hpp"
#include "snowball/bottom_up.hpp"
#include "snowball/config.hpp"
#include "snowball/dataset.hpp"
#include "snowball/mlp.hpp"
#include "snowball/sgd.hpp"
#include "snowball/top_down.hpp"
#include "snowball/update.hpp"

namespace snowball {

/// Per-round accuracy and selection quality. Benign updates are the positive
/// class: fpr is the share of infected updates that were selected, fnr the
/// share of benign updates that were left out (0/0 counts as 0).
struct MetricsRecord {
  double ma = 0.0;
  double ba = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  std::size_t n_selected = 0;
  std::size_t n_infected_selected = 0;
  std::size_t n_infected_present = 0;
  std::size_t n_benign_present = 0;
  double wallclock_ms = 0.0;
};

MetricsRecord selection_metrics(std::span<const ModelUpdate> updates, std::span<const ClientId> selected);

// Mean pairwise Euclidean distance among benign updates and between benign and
// infected updates (full parameter vector). `defined` needs two benign updates
// and one infected update.
struct DistanceProfile {
  bool defined = false;
  double benign_benign = 0.0;
  double benign_infected = 0.0;
};

DistanceProfile distance_profile(std::span<const ModelUpdate> updates);

struct RoundRecord {
  std::size_t round = 0;
  double learning_rate = 0.0;
  std::vector<ClientId> participants;
  std::vector<ClientId> infected;  // ground truth, for reporting only
  std::vector<ClientId> selected;
  bool aggregated = false;
  MetricsRecord metrics;
  DistanceProfile distances;
  std::optional<BottomUpResult> bottom_up;
  std::optional<TopDownResult> top_down;
  std::vector<double> krum_scores;
};

struct ExperimentSummary {
  double ma = 0.0;             // best clean accuracy over rounds
  double ba = 0.0;             // backdoor accuracy in the (earliest) best-MA round
  std::size_t best_round = 0;  // 0 when no round ran
  double initial_ma = 0.0;
  double initial_ba = 0.0;
  double mean_fpr = 0.0;
  double mean_fnr = 0.0;
  std::size_t cluster_count = 0;  // voting cluster count used by the elections
  std::vector<LayerId> election_layers;
  std::vector<ClientId> attackers;
  double total_wallclock_ms = 0.0;
};

struct ExperimentResult {
  std::vector<RoundRecord> rounds;
  ExperimentSummary summary;
};

// K distinct clients out of n, ascending.
std::vector<ClientId> sample_participants(std::size_t n_clients, std::size_t k, RngStream& rng);

struct LocalTrainSpec {
  ClientId client_id = 0;
  std::size_t round = 0;
  bool infected = false;
  std::size_t epochs = 5;
  std::size_t batch_size = 10;
  SgdState sgd;
};

/// Runs `epochs` full passes of mini-batch SGD on softmax cross-entropy from
/// the global parameters. The update's delta is trained minus global.
ModelUpdate local_train(const MlpModel& global, const Dataset& data, const LocalTrainSpec& spec, RngStream& rng);

// Mean of the deltas weighted by sample count. Empty input is an AggregationError.
LayeredVector aggregate(std::span<const ModelUpdate> selectees);

double accuracy(const MlpModel& model, const Dataset& data);

struct Evaluation {
  double ma = 0.0;
  double ba = 0.0;
};

// ba: share of `triggered_test` predicted as `target_class` (0 when it is empty).
Evaluation evaluate(const MlpModel& model, const Dataset& clean_test, const Dataset& triggered_test, int target_class);

using RoundObserver = std::function<void(const RoundRecord&)>;

ExperimentResult run_experiment(const ExperimentConfig& config, const RoundObserver& observer = {});

}  // namespace snowball
