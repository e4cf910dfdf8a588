#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snowball/clustering.hpp"
#include "snowball/update.hpp"

namespace snowball {

enum class LayerPolicyMode { all, first_last, top_divergence };

struct LayerPolicy {
  LayerPolicyMode mode = LayerPolicyMode::top_divergence;
  std::size_t count = 2;  // layers kept by top_divergence
};

// Per-layer divergence: mean pairwise L2 distance of the layer's slices across
// updates, divided by the slice length.
std::vector<double> layer_divergence(std::span<const CandidateUpdate> updates);

/// Layers the elections run on, in ascending id order. top_divergence keeps the
/// `count` layers with the largest divergence (ties go to the lower id).
std::vector<LayerId> select_layers(std::span<const CandidateUpdate> updates, const LayerPolicy& policy);

/// Initial centroids for one voter: the n_clusters - 1 other points farthest
/// from the voter (squared L2, ties to the lower client id), farthest first,
/// followed by the zero vector.
Points init_centroids(const Points& slices, std::span<const ClientId> client_ids, std::size_t voter,
                      std::size_t n_clusters);

struct VoterAudit {
  ClientId voter = 0;
  LayerId layer = 0;
  std::size_t n_clusters = 0;
  double ch_score = 0.0;
  double weight = 0.0;  // normalized CH score added to each cluster-mate
  std::vector<std::size_t> cluster_sizes;
  std::size_t own_cluster_size = 0;
};

struct VoteTally {
  std::vector<ClientId> client_ids;                 // same order as the input updates
  std::vector<double> counters;                     // total votes per update
  std::vector<LayerId> layers;
  std::vector<std::vector<double>> per_layer;       // [layer][update] contribution
};

struct BottomUpResult {
  std::vector<ClientId> selected;  // ascending client id
  VoteTally tally;
  std::vector<VoterAudit> audit;
};

/// Layer-wise voting: every update clusters all updates from its own initial
/// centroids and adds its min-max normalized CH score to each update sharing
/// its cluster (itself included). The n_select highest counters win; ties go to
/// the lower client id.
BottomUpResult bottom_up_election(std::span<const CandidateUpdate> updates, std::size_t n_select,
                                  std::size_t n_clusters, std::span<const LayerId> layer_ids,
                                  const KMeansOptions& kmeans_options = {});

// Gap statistic on each layer's slices; the per-layer picks are averaged and
// rounded half up.
std::size_t estimate_cluster_count(std::span<const CandidateUpdate> updates, std::span<const LayerId> layer_ids,
                                   RngStream& rng, const GapStatisticOptions& options = {});

Points layer_slices(std::span<const CandidateUpdate> updates, LayerId layer);

}  // namespace snowball
