#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "snowball/rng.hpp"

namespace snowball {

using Point = std::vector<double>;
using Points = std::vector<Point>;

struct KMeansOptions {
  int max_iter = 100;
  double tol = 1e-6;  // stop once no centroid moves farther than this
};

struct ClusteringResult {
  std::vector<std::size_t> assignments;
  Points centroids;
  double inertia = 0.0;  // sum of squared distances to assigned centroids
  int iterations = 0;
  // Inertia of each assignment step against the centroids it was made from.
  std::vector<double> inertia_history;

  std::vector<std::size_t> cluster_sizes() const;
};

// Index of the nearest centroid; ties resolve to the lowest index.
std::size_t nearest_centroid(std::span<const double> point, const Points& centroids);

/// Lloyd iterations starting from exactly the given centroids.
///
/// A cluster that loses all its points is re-seeded at the point lying
/// farthest from its own centroid. Final assignments are recomputed against
/// the final centroids.
ClusteringResult kmeans(const Points& points, Points init_centroids, const KMeansOptions& options = {});

// k-means++ seeding followed by Lloyd; the best of `restarts` runs by inertia.
ClusteringResult kmeans_plus_plus(const Points& points, std::size_t k, RngStream& rng, int restarts = 1,
                                  const KMeansOptions& options = {});

// Score reported when a clustering has zero within-cluster dispersion or
// fewer than two non-empty clusters.
inline constexpr double kChSentinel = std::numeric_limits<double>::infinity();

/// Calinski-Harabasz index: [B / (k - 1)] / [W / (n - k)], with B the
/// between-cluster and W the within-cluster sum of squares over the k
/// non-empty clusters. Degenerate clusterings return kChSentinel.
double ch_score(const Points& points, std::span<const std::size_t> assignments);

/// Maps scores to [0, 1] by (s - min) / (max - min). Infinite entries are first
/// clamped to the largest finite score; when every score is equal (or none is
/// finite) all outputs are 1.
std::vector<double> minmax_normalize(std::span<const double> scores);

struct GapStatisticOptions {
  std::size_t k_min = 2;
  std::size_t k_max = 15;
  std::size_t reference_draws = 10;
  int restarts = 3;
  KMeansOptions kmeans;
};

struct GapStatisticResult {
  std::size_t best_k = 0;
  std::vector<std::size_t> ks;
  std::vector<double> gap;
  std::vector<double> s;  // sd_k * sqrt(1 + 1/B)
};

/// Tibshirani's gap statistic with uniform references drawn in the data's
/// bounding box. Picks the smallest k with Gap(k) >= Gap(k+1) - s_{k+1},
/// falling back to the largest k searched. k_max is clamped to the number of
/// points; identical points return k_min.
GapStatisticResult gap_statistic(const Points& points, RngStream& rng, const GapStatisticOptions& options = {});

}  // namespace snowball
