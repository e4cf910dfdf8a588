#include "snowball/top_down.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "snowball/error.hpp"
#include "snowball/parallel.hpp"

namespace snowball {

namespace {

Point difference(std::span<const double> a, std::span<const double> b) {
  Point d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return d;
}

DifferenceSet differences(const Points& flat, std::span<const std::size_t> members,
                          std::span<const CandidateUpdate> updates) {
  DifferenceSet set;
  for (std::size_t i : members)
    for (std::size_t j : members) {
      if (i == j) continue;
      set.vectors.push_back(difference(flat[i], flat[j]));
      set.pairs.emplace_back(updates[i].client_id, updates[j].client_id);
    }
  return set;
}

// Per-dimension 1 / stddev over the set (1 where a dimension is constant).
Point inverse_scale(const Points& vectors) {
  const std::size_t dim = vectors.front().size();
  Point mean(dim, 0.0), var(dim, 0.0);
  for (const auto& v : vectors)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d];
  for (auto& m : mean) m /= static_cast<double>(vectors.size());
  for (const auto& v : vectors)
    for (std::size_t d = 0; d < dim; ++d) var[d] += (v[d] - mean[d]) * (v[d] - mean[d]);
  Point inv(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double sd = std::sqrt(var[d] / static_cast<double>(vectors.size()));
    inv[d] = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  return inv;
}

void rescale(Point& v, const Point& inv) {
  for (std::size_t d = 0; d < v.size(); ++d) v[d] *= inv[d];
}

}  // namespace

DifferenceSet build_difference_set(std::span<const CandidateUpdate> selectees, std::span<const LayerId> layer_ids) {
  if (selectees.size() < 2) throw ParameterError("difference set needs at least two selectees");
  Points flat;
  for (const auto& s : selectees) flat.push_back(s.delta.flatten(layer_ids));
  std::vector<std::size_t> members(selectees.size());
  std::iota(members.begin(), members.end(), std::size_t{0});
  return differences(flat, members, selectees);
}

CandidateScore score_candidate(const VaeModel& model, const CandidateUpdate& candidate,
                               std::span<const CandidateUpdate> selectees, std::span<const LayerId> layer_ids) {
  CandidateScore s{candidate.client_id, 0.0};
  const auto c = candidate.delta.flatten(layer_ids);
  for (const auto& sel : selectees) {
    if (sel.client_id == candidate.client_id)
      throw ParameterError("score_candidate: candidate " + std::to_string(candidate.client_id) + " is a selectee");
    s.score += reconstruction_error(model, difference(sel.delta.flatten(layer_ids), c));
  }
  return s;
}

TopDownResult top_down_election(std::span<const CandidateUpdate> updates, std::span<const ClientId> selected,
                                std::span<const LayerId> layer_ids, const TopDownOptions& options, RngStream& rng) {
  TopDownResult result;
  result.selected.assign(selected.begin(), selected.end());
  std::sort(result.selected.begin(), result.selected.end());
  if (options.target > updates.size())
    throw ParameterError("top_down_election: target " + std::to_string(options.target) + " exceeds the " +
                         std::to_string(updates.size()) + " received updates");

  std::unordered_map<ClientId, std::size_t> index_of;
  for (std::size_t i = 0; i < updates.size(); ++i) index_of.emplace(updates[i].client_id, i);
  std::vector<bool> in_set(updates.size(), false);
  std::vector<std::size_t> members;
  for (ClientId id : result.selected) {
    auto it = index_of.find(id);
    if (it == index_of.end()) throw ParameterError("top_down_election: selectee " + std::to_string(id) + " unknown");
    in_set[it->second] = true;
    members.push_back(it->second);
  }
  if (result.selected.size() >= options.target) return result;
  if (members.size() < 2) throw ParameterError("top_down_election needs at least two initial selectees");
  if (options.step == 0) throw ParameterError("top_down_election: step must be positive");

  Points flat;
  flat.reserve(updates.size());
  for (const auto& u : updates) flat.push_back(u.delta.flatten(layer_ids));

  auto init_rng = rng.derive("vae_init");
  VaeModel model(flat.front().size(), options.hidden, options.latent, init_rng);
  {
    auto set = differences(flat, members, updates);
    if (options.standardize) {
      const auto inv = inverse_scale(set.vectors);
      for (auto& v : set.vectors) rescale(v, inv);
    }
    auto train_rng = rng.derive("vae_train");
    train_vae(model, set.vectors, options.initial_epochs, options.train, train_rng);
  }

  for (std::uint64_t round = 0; members.size() < options.target; ++round) {
    TopDownStep step;
    step.selected_before = members.size();
    auto set = differences(flat, members, updates);
    step.difference_count = set.vectors.size();
    Point inv;
    if (options.standardize) {
      inv = inverse_scale(set.vectors);
      for (auto& v : set.vectors) rescale(v, inv);
    }
    auto tune_rng = rng.derive("vae_tune", round);
    train_vae(model, set.vectors, options.tune_epochs, options.train, tune_rng);
    step.mean_loss_after_tuning = mean_vae_loss(model, set.vectors);

    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < updates.size(); ++j)
      if (!in_set[j]) candidates.push_back(j);
    std::vector<double> scores(candidates.size(), 0.0);
    parallel_for(candidates.size(), [&](std::size_t c) {
      const std::size_t j = candidates[c];
      double s = 0.0;
      for (std::size_t i : members) {
        auto u = difference(flat[i], flat[j]);
        if (options.standardize) rescale(u, inv);
        s += reconstruction_error(model, u);
      }
      scores[c] = s;
    });

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] < scores[b];
      return updates[candidates[a]].client_id < updates[candidates[b]].client_id;
    });
    const std::size_t admit = std::min(options.step, options.target - members.size());
    for (std::size_t r = 0; r < admit; ++r) {
      const std::size_t j = candidates[order[r]];
      in_set[j] = true;
      members.push_back(j);
      step.added.push_back(updates[j].client_id);
      step.added_scores.push_back(scores[order[r]]);
    }
    result.steps.push_back(std::move(step));
  }

  result.selected.clear();
  for (std::size_t i : members) result.selected.push_back(updates[i].client_id);
  std::sort(result.selected.begin(), result.selected.end());
  return result;
}

}  // namespace snowball
