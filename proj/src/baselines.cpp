#include "snowball/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snowball/error.hpp"

namespace snowball {

SelectionResult fedavg_select(std::span<const CandidateUpdate> updates) {
  SelectionResult r;
  for (const auto& u : updates) r.selected.push_back(u.client_id);
  std::sort(r.selected.begin(), r.selected.end());
  r.scores.assign(updates.size(), 0.0);
  return r;
}

SelectionResult krum_select(std::span<const CandidateUpdate> updates, double f_ratio, std::size_t m) {
  const std::size_t n = updates.size();
  if (!(f_ratio >= 0.0 && f_ratio < 1.0)) throw ParameterError("krum: f_ratio must lie in [0, 1)");
  const auto f = static_cast<std::size_t>(std::ceil(f_ratio * static_cast<double>(n)));
  if (n < f + 3)
    throw ParameterError("krum: n - f - 2 must be at least 1 (n = " + std::to_string(n) + ", f = " +
                         std::to_string(f) + ")");
  const std::size_t neighbours = n - f - 2;

  std::vector<std::vector<double>> flat;
  flat.reserve(n);
  for (const auto& u : updates) flat.push_back(u.delta.flatten());
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = squared_distance(flat[i], flat[j]);

  SelectionResult r;
  r.scores.resize(n);
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(dist[i][j]);
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), row.end());
    r.scores[i] = std::accumulate(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), 0.0);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (r.scores[a] != r.scores[b]) return r.scores[a] < r.scores[b];
    return updates[a].client_id < updates[b].client_id;
  });
  for (std::size_t i = 0; i < std::min(m, n); ++i) r.selected.push_back(updates[order[i]].client_id);
  std::sort(r.selected.begin(), r.selected.end());
  return r;
}

SelectionResult ideal_select(std::span<const ModelUpdate> updates) {
  SelectionResult r;
  for (const auto& u : updates)
    if (!u.infected) r.selected.push_back(u.client_id);
  std::sort(r.selected.begin(), r.selected.end());
  r.scores.assign(updates.size(), 0.0);
  return r;
}

}  // namespace snowball
