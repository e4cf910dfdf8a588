#include "snowball/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snowball/error.hpp"
#include "snowball/layered_vector.hpp"

namespace snowball {

std::vector<std::size_t> ClusteringResult::cluster_sizes() const {
  std::vector<std::size_t> sizes(centroids.size(), 0);
  for (auto a : assignments) ++sizes[a];
  return sizes;
}

std::size_t nearest_centroid(std::span<const double> point, const Points& centroids) {
  std::size_t best = 0;
  double best_d = squared_distance(point, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

void check_points(const Points& points) {
  if (points.empty()) throw ParameterError("clustering needs at least one point");
  const auto dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw ShapeError("clustering points differ in dimension");
}

double assign(const Points& points, const Points& centroids, std::vector<std::size_t>& labels) {
  labels.resize(points.size());
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    labels[i] = nearest_centroid(points[i], centroids);
    inertia += squared_distance(points[i], centroids[labels[i]]);
  }
  return inertia;
}

}  // namespace

ClusteringResult kmeans(const Points& points, Points init_centroids, const KMeansOptions& options) {
  check_points(points);
  const std::size_t k = init_centroids.size();
  if (k == 0) throw ParameterError("kmeans needs at least one centroid");
  if (k > points.size())
    throw ParameterError("kmeans: " + std::to_string(k) + " clusters for " + std::to_string(points.size()) + " points");
  const std::size_t dim = points.front().size();
  for (const auto& c : init_centroids)
    if (c.size() != dim) throw ShapeError("kmeans: centroid dimension differs from points");

  ClusteringResult r;
  r.centroids = std::move(init_centroids);
  std::vector<std::size_t> labels;
  for (int it = 1; it <= options.max_iter; ++it) {
    r.inertia_history.push_back(assign(points, r.centroids, labels));

    Points next(k, Point(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& acc = next[labels[i]];
      for (std::size_t d = 0; d < dim; ++d) acc[d] += points[i][d];
      ++counts[labels[i]];
    }
    std::vector<bool> used_as_seed(points.size(), false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (auto& v : next[c]) v /= static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (used_as_seed[i]) continue;
        const double d = squared_distance(points[i], r.centroids[labels[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      used_as_seed[far] = true;
      next[c] = points[far];
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(squared_distance(next[c], r.centroids[c])));
    r.centroids = std::move(next);
    r.iterations = it;
    if (shift < options.tol) break;
  }
  r.inertia = assign(points, r.centroids, r.assignments);
  return r;
}

ClusteringResult kmeans_plus_plus(const Points& points, std::size_t k, RngStream& rng, int restarts,
                                  const KMeansOptions& options) {
  check_points(points);
  if (k == 0 || k > points.size()) throw ParameterError("kmeans_plus_plus: invalid cluster count");
  ClusteringResult best;
  bool have_best = false;
  for (int attempt = 0; attempt < std::max(1, restarts); ++attempt) {
    Points seeds;
    seeds.push_back(points[rng.uniform_index(points.size())]);
    std::vector<double> d2(points.size());
    while (seeds.size() < k) {
      double total = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        d2[i] = squared_distance(points[i], seeds[nearest_centroid(points[i], seeds)]);
        total += d2[i];
      }
      std::size_t pick = 0;
      if (total <= 0.0) {
        pick = rng.uniform_index(points.size());
      } else {
        double target = rng.uniform() * total;
        for (pick = 0; pick + 1 < points.size(); ++pick) {
          target -= d2[pick];
          if (target < 0.0 && d2[pick] > 0.0) break;
        }
      }
      seeds.push_back(points[pick]);
    }
    auto r = kmeans(points, std::move(seeds), options);
    if (!have_best || r.inertia < best.inertia) {
      best = std::move(r);
      have_best = true;
    }
  }
  return best;
}

double ch_score(const Points& points, std::span<const std::size_t> assignments) {
  check_points(points);
  if (assignments.size() != points.size()) throw ShapeError("ch_score: one assignment per point required");
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  const std::size_t n_labels = *std::max_element(assignments.begin(), assignments.end()) + 1;

  Points means(n_labels, Point(dim, 0.0));
  std::vector<std::size_t> counts(n_labels, 0);
  Point overall(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      means[assignments[i]][d] += points[i][d];
      overall[d] += points[i][d];
    }
    ++counts[assignments[i]];
  }
  for (auto& v : overall) v /= static_cast<double>(n);
  std::size_t k = 0;
  for (std::size_t c = 0; c < n_labels; ++c) {
    if (counts[c] == 0) continue;
    ++k;
    for (auto& v : means[c]) v /= static_cast<double>(counts[c]);
  }
  if (k < 2) return kChSentinel;

  // Clusters summed in order of first appearance: the same partition under
  // different labels must give a bit-identical score, since min-max
  // normalization magnifies any rounding gap between equal scores.
  std::vector<std::size_t> order;
  std::vector<bool> seen(n_labels, false);
  for (std::size_t a : assignments)
    if (!seen[a]) {
      seen[a] = true;
      order.push_back(a);
    }
  double between = 0.0;
  for (std::size_t c : order) between += static_cast<double>(counts[c]) * squared_distance(means[c], overall);
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) within += squared_distance(points[i], means[assignments[i]]);

  // Rounding in the cluster means leaves ~1e-30 residue on perfect clusterings.
  if (n == k || within <= 1e-12 * (between + within)) return kChSentinel;
  return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

std::vector<double> minmax_normalize(std::span<const double> scores) {
  if (scores.empty()) throw ParameterError("minmax_normalize needs at least one score");
  double max_finite = -std::numeric_limits<double>::infinity();
  double min_finite = std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError("minmax_normalize: NaN score");
    if (std::isfinite(s)) {
      max_finite = std::max(max_finite, s);
      min_finite = std::min(min_finite, s);
    }
  }
  std::vector<double> out(scores.size(), 1.0);
  if (!std::isfinite(max_finite)) return out;
  std::vector<double> clamped(scores.begin(), scores.end());
  for (auto& s : clamped) {
    if (s == std::numeric_limits<double>::infinity()) s = max_finite;
    if (s == -std::numeric_limits<double>::infinity()) s = min_finite;
  }
  const double range = max_finite - min_finite;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < clamped.size(); ++i) out[i] = (clamped[i] - min_finite) / range;
  return out;
}

GapStatisticResult gap_statistic(const Points& points, RngStream& rng, const GapStatisticOptions& options) {
  check_points(points);
  if (options.k_min == 0 || options.k_min > options.k_max) throw ParameterError("gap_statistic: invalid k range");
  if (options.reference_draws == 0) throw ParameterError("gap_statistic: needs at least one reference draw");

  GapStatisticResult result;
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  const std::size_t k_max = std::min(options.k_max, n);

  Point lo = points.front(), hi = points.front();
  for (const auto& p : points)
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  const bool degenerate = std::equal(lo.begin(), lo.end(), hi.begin());
  if (degenerate || k_max < options.k_min) {
    result.best_k = options.k_min;
    return result;
  }

  // Perfect clusterings (k == n) have W = 0 for data and references alike; the
  // shared floor makes their gap 0 instead of NaN.
  constexpr double kFloor = 1e-300;
  const auto log_w = [&](const Points& data, std::size_t k, RngStream stream) {
    return std::log(std::max(kmeans_plus_plus(data, k, stream, options.restarts, options.kmeans).inertia, kFloor));
  };

  for (std::size_t k = options.k_min; k <= k_max; ++k) result.ks.push_back(k);
  const std::size_t n_k = result.ks.size();
  const std::size_t b_count = options.reference_draws;
  std::vector<double> data_log_w(n_k);
  std::vector<std::vector<double>> ref_log_w(n_k, std::vector<double>(b_count));

  for (std::size_t ki = 0; ki < n_k; ++ki) data_log_w[ki] = log_w(points, result.ks[ki], rng.derive("data", ki));
  for (std::size_t b = 0; b < b_count; ++b) {
    auto ref_rng = rng.derive("reference", b);
    Points ref(n, Point(dim));
    for (auto& p : ref)
      for (std::size_t d = 0; d < dim; ++d) p[d] = hi[d] > lo[d] ? ref_rng.uniform(lo[d], hi[d]) : lo[d];
    for (std::size_t ki = 0; ki < n_k; ++ki)
      ref_log_w[ki][b] = log_w(ref, result.ks[ki], ref_rng.derive("cluster", ki));
  }

  result.gap.resize(n_k);
  result.s.resize(n_k);
  for (std::size_t ki = 0; ki < n_k; ++ki) {
    const auto& r = ref_log_w[ki];
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(b_count);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(b_count);
    result.gap[ki] = mean - data_log_w[ki];
    result.s[ki] = std::sqrt(var) * std::sqrt(1.0 + 1.0 / static_cast<double>(b_count));
  }

  result.best_k = result.ks.back();
  for (std::size_t ki = 0; ki + 1 < n_k; ++ki) {
    if (result.gap[ki] >= result.gap[ki + 1] - result.s[ki + 1]) {
      result.best_k = result.ks[ki];
      break;
    }
  }
  return result;
}

}  // namespace snowball
