#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "snowball/update.hpp"
#include "snowball/vae.hpp"

namespace snowball {

// u_{i,j} = delta_i - delta_j over the election layers, for every ordered pair
// of distinct selectees.
struct DifferenceSet {
  Points vectors;
  std::vector<std::pair<ClientId, ClientId>> pairs;
};

DifferenceSet build_difference_set(std::span<const CandidateUpdate> selectees, std::span<const LayerId> layer_ids);

struct CandidateScore {
  ClientId client_id = 0;
  double score = 0.0;  // sum over selectees of the eval-mode reconstruction MSE
};

CandidateScore score_candidate(const VaeModel& model, const CandidateUpdate& candidate,
                               std::span<const CandidateUpdate> selectees, std::span<const LayerId> layer_ids);

struct TopDownOptions {
  std::size_t target = 10;          // stop once this many updates are selected
  std::size_t step = 1;             // updates admitted per enlargement step
  std::size_t initial_epochs = 30;  // fresh VAE training
  std::size_t tune_epochs = 5;      // tuning after every rebuild
  std::size_t hidden = 64;
  std::size_t latent = 16;
  VaeTrainOptions train;
  bool standardize = false;         // divide each dimension of u by its stddev over U
};

struct TopDownStep {
  std::size_t selected_before = 0;
  std::size_t difference_count = 0;
  double mean_loss_after_tuning = 0.0;
  std::vector<ClientId> added;
  std::vector<double> added_scores;
};

struct TopDownResult {
  std::vector<ClientId> selected;  // ascending client id
  std::vector<TopDownStep> steps;
};

/// Progressive enlargement of the selectee set. A fresh VAE is trained on the
/// selectees' pairwise differences; then, until `target` updates are selected,
/// the difference set is rebuilt, the VAE is tuned on it, and the `step`
/// remaining candidates with the lowest scores are admitted (ties go to the
/// lower client id; the last step admits only as many as needed).
TopDownResult top_down_election(std::span<const CandidateUpdate> updates, std::span<const ClientId> selected,
                                std::span<const LayerId> layer_ids, const TopDownOptions& options, RngStream& rng);

}  // namespace snowball
