#include "snowball/bottom_up.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snowball/error.hpp"
#include "snowball/parallel.hpp"

namespace snowball {

std::vector<CandidateUpdate> strip_ground_truth(std::span<const ModelUpdate> updates) {
  std::vector<CandidateUpdate> out;
  out.reserve(updates.size());
  for (const auto& u : updates) out.push_back({u.client_id, u.delta, u.n_samples});
  return out;
}

Points layer_slices(std::span<const CandidateUpdate> updates, LayerId layer) {
  Points out;
  out.reserve(updates.size());
  for (const auto& u : updates) {
    auto s = u.delta.slice(layer);
    out.emplace_back(s.begin(), s.end());
  }
  return out;
}

std::vector<double> layer_divergence(std::span<const CandidateUpdate> updates) {
  if (updates.size() < 2) throw ParameterError("layer divergence needs at least two updates");
  const auto& ref = updates.front().delta;
  std::vector<double> div(ref.num_layers(), 0.0);
  const double pairs = static_cast<double>(updates.size() * (updates.size() - 1) / 2);
  for (std::size_t l = 0; l < ref.num_layers(); ++l) {
    double total = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i)
      for (std::size_t j = i + 1; j < updates.size(); ++j)
        total += std::sqrt(squared_distance(updates[i].delta.layer(l).values, updates[j].delta.layer(l).values));
    div[l] = total / pairs / static_cast<double>(ref.layer(l).values.size());
  }
  return div;
}

std::vector<LayerId> select_layers(std::span<const CandidateUpdate> updates, const LayerPolicy& policy) {
  if (updates.empty()) throw ParameterError("select_layers needs at least one update");
  const auto ids = updates.front().delta.layer_ids();
  for (const auto& u : updates)
    if (!u.delta.same_shape(updates.front().delta)) throw ShapeError("select_layers: updates differ in shape");

  switch (policy.mode) {
    case LayerPolicyMode::all:
      return ids;
    case LayerPolicyMode::first_last:
      if (ids.size() == 1) return ids;
      return {ids.front(), ids.back()};
    case LayerPolicyMode::top_divergence: {
      if (policy.count == 0 || policy.count > ids.size())
        throw ParameterError("layer policy asks for " + std::to_string(policy.count) + " layers, model has " +
                             std::to_string(ids.size()));
      const auto div = layer_divergence(updates);
      std::vector<std::size_t> order(ids.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return div[a] > div[b]; });
      std::vector<LayerId> out;
      for (std::size_t i = 0; i < policy.count; ++i) out.push_back(ids[order[i]]);
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  throw ParameterError("unknown layer policy");
}

Points init_centroids(const Points& slices, std::span<const ClientId> client_ids, std::size_t voter,
                      std::size_t n_clusters) {
  if (client_ids.size() != slices.size()) throw ShapeError("init_centroids: one client id per slice required");
  if (voter >= slices.size()) throw ParameterError("init_centroids: voter index out of range");
  if (n_clusters == 0) throw ParameterError("init_centroids: need at least one cluster");
  if (n_clusters - 1 > slices.size() - 1)
    throw ParameterError("init_centroids: " + std::to_string(n_clusters) + " clusters need " +
                         std::to_string(n_clusters - 1) + " candidates besides the voter, only " +
                         std::to_string(slices.size() - 1) + " available");

  std::vector<std::size_t> others;
  std::vector<double> dist(slices.size(), 0.0);
  for (std::size_t j = 0; j < slices.size(); ++j) {
    if (j == voter) continue;
    others.push_back(j);
    dist[j] = squared_distance(slices[voter], slices[j]);
  }
  std::sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] > dist[b];
    return client_ids[a] < client_ids[b];
  });

  Points centroids;
  centroids.reserve(n_clusters);
  for (std::size_t c = 0; c + 1 < n_clusters; ++c) centroids.push_back(slices[others[c]]);
  centroids.emplace_back(slices[voter].size(), 0.0);
  return centroids;
}

namespace {

// The election proper, on updates already sorted by client id. Working in a
// canonical order keeps floating-point sums, and therefore ties, independent
// of the order the caller happens to pass updates in.
BottomUpResult elect_sorted(std::span<const CandidateUpdate> updates, std::size_t n_select, std::size_t n_clusters,
                            std::span<const LayerId> layer_ids, const KMeansOptions& kmeans_options) {
  const std::size_t n = updates.size();
  if (n == 0) throw ParameterError("bottom_up_election needs at least one update");
  if (n_select > n) throw ParameterError("bottom_up_election: cannot select " + std::to_string(n_select) + " of " +
                                         std::to_string(n) + " updates");
  if (n_clusters == 0 || n_clusters > n)
    throw ParameterError("bottom_up_election: " + std::to_string(n_clusters) + " clusters for " + std::to_string(n) +
                         " updates");
  if (layer_ids.empty()) throw ParameterError("bottom_up_election needs at least one layer");

  BottomUpResult result;
  auto& tally = result.tally;
  tally.counters.assign(n, 0.0);
  tally.layers.assign(layer_ids.begin(), layer_ids.end());
  for (const auto& u : updates) tally.client_ids.push_back(u.client_id);

  for (LayerId layer : layer_ids) {
    const Points slices = layer_slices(updates, layer);
    std::vector<ClusteringResult> clusterings(n);
    std::vector<double> scores(n);
    parallel_for(n, [&](std::size_t i) {
      clusterings[i] = kmeans(slices, init_centroids(slices, tally.client_ids, i, n_clusters), kmeans_options);
      scores[i] = ch_score(slices, clusterings[i].assignments);
    });
    const auto weights = minmax_normalize(scores);

    auto& contribution = tally.per_layer.emplace_back(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = clusterings[i].assignments;
      std::size_t own = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (r[i] != r[j]) continue;
        contribution[j] += weights[i];
        ++own;
      }
      result.audit.push_back({tally.client_ids[i], layer, n_clusters, scores[i], weights[i],
                              clusterings[i].cluster_sizes(), own});
    }
    for (std::size_t j = 0; j < n; ++j) tally.counters[j] += contribution[j];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (tally.counters[a] != tally.counters[b]) return tally.counters[a] > tally.counters[b];
    return tally.client_ids[a] < tally.client_ids[b];
  });
  for (std::size_t i = 0; i < n_select; ++i) result.selected.push_back(tally.client_ids[order[i]]);
  std::sort(result.selected.begin(), result.selected.end());
  return result;
}

}  // namespace

BottomUpResult bottom_up_election(std::span<const CandidateUpdate> updates, std::size_t n_select,
                                  std::size_t n_clusters, std::span<const LayerId> layer_ids,
                                  const KMeansOptions& kmeans_options) {
  std::vector<std::size_t> canon(updates.size());
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::sort(canon.begin(), canon.end(),
            [&](std::size_t a, std::size_t b) { return updates[a].client_id < updates[b].client_id; });
  for (std::size_t k = 1; k < canon.size(); ++k)
    if (updates[canon[k]].client_id == updates[canon[k - 1]].client_id)
      throw ParameterError("bottom_up_election: duplicate client id " + std::to_string(updates[canon[k]].client_id));
  if (std::is_sorted(canon.begin(), canon.end()))
    return elect_sorted(updates, n_select, n_clusters, layer_ids, kmeans_options);

  std::vector<CandidateUpdate> sorted;
  sorted.reserve(updates.size());
  for (auto i : canon) sorted.push_back(updates[i]);
  auto result = elect_sorted(sorted, n_select, n_clusters, layer_ids, kmeans_options);

  // Report the tally in the caller's order.
  auto& tally = result.tally;
  auto to_input_order = [&](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < canon.size(); ++k) out[canon[k]] = v[k];
    return out;
  };
  tally.counters = to_input_order(tally.counters);
  for (auto& layer : tally.per_layer) layer = to_input_order(layer);
  for (std::size_t k = 0; k < canon.size(); ++k) tally.client_ids[canon[k]] = sorted[k].client_id;
  return result;
}

std::size_t estimate_cluster_count(std::span<const CandidateUpdate> updates, std::span<const LayerId> layer_ids,
                                   RngStream& rng, const GapStatisticOptions& options) {
  if (layer_ids.empty()) throw ParameterError("estimate_cluster_count needs at least one layer");
  double total = 0.0;
  for (LayerId layer : layer_ids) {
    auto layer_rng = rng.derive("gap_layer", static_cast<std::uint64_t>(layer));
    total += static_cast<double>(gap_statistic(layer_slices(updates, layer), layer_rng, options).best_k);
  }
  return static_cast<std::size_t>(std::floor(total / static_cast<double>(layer_ids.size()) + 0.5));
}

}  // namespace snowball
