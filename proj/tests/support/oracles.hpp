#pragma once

// Reference implementations used only by tests. They are written straight
// from the definitions, without sharing code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double sqdist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// y = W x + b with W given row-major as out x in.
inline Vec affine(const Vec& w, const Vec& b, const Vec& x) {
  Vec y(b.size(), 0.0);
  for (std::size_t o = 0; o < b.size(); ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[o * x.size() + i] * x[i];
    y[o] = acc + b[o];
  }
  return y;
}

inline Vec relu(Vec v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return v;
}

// Calinski-Harabasz straight from the formula. Labels are renumbered by first
// appearance so a partition scores the same under any labelling.
inline double calinski_harabasz(const Mat& pts, std::vector<std::size_t> labels) {
  const std::size_t n = pts.size(), d = pts[0].size();
  {
    std::vector<std::size_t> seen;
    for (auto& l : labels) {
      auto it = std::find(seen.begin(), seen.end(), l);
      if (it == seen.end()) {
        seen.push_back(l);
        it = seen.end() - 1;
      }
      l = static_cast<std::size_t>(it - seen.begin());
    }
  }
  std::size_t k = 0;
  for (auto l : labels) k = std::max(k, l + 1);
  Vec mean(d, 0.0);
  for (const auto& p : pts)
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j] / static_cast<double>(n);
  Mat cm(k, Vec(d, 0.0));
  std::vector<double> cnt(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cnt[labels[i]] += 1.0;
    for (std::size_t j = 0; j < d; ++j) cm[labels[i]][j] += pts[i][j];
  }
  std::size_t nonempty = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (cnt[c] > 0) {
      ++nonempty;
      for (double& x : cm[c]) x /= cnt[c];
    }
  double b = 0.0, w = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    if (cnt[c] > 0) b += cnt[c] * sqdist(cm[c], mean);
  for (std::size_t i = 0; i < n; ++i) w += sqdist(pts[i], cm[labels[i]]);
  const double kk = static_cast<double>(nonempty);
  return (b / (kk - 1.0)) / (w / (static_cast<double>(n) - kk));
}

// One Lloyd assignment: nearest centroid, first index on ties.
inline std::vector<std::size_t> assign(const Mat& pts, const Mat& cents) {
  std::vector<std::size_t> a(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cents.size(); ++c)
      if (sqdist(pts[i], cents[c]) < sqdist(pts[i], cents[best])) best = c;
    a[i] = best;
  }
  return a;
}

// Plain Lloyd replay from fixed centroids. An empty cluster takes the unused
// point lying farthest from the centroid it was assigned to.
inline std::vector<std::size_t> lloyd(const Mat& pts, Mat cents, int max_iter = 100, double tol = 1e-6) {
  const std::size_t k = cents.size(), d = pts[0].size();
  for (int it = 0; it < max_iter; ++it) {
    const auto a = assign(pts, cents);
    Mat next(k, Vec(d, 0.0));
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ++cnt[a[i]];
      for (std::size_t j = 0; j < d; ++j) next[a[i]][j] += pts[i][j];
    }
    std::vector<bool> used(pts.size(), false);
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] > 0) {
        for (double& x : next[c]) x /= static_cast<double>(cnt[c]);
        continue;
      }
      std::size_t far = pts.size();
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (!used[i] && (far == pts.size() || sqdist(pts[i], cents[a[i]]) > sqdist(pts[far], cents[a[far]]))) far = i;
      used[far] = true;
      next[c] = pts[far];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(sqdist(next[c], cents[c])));
    cents = next;
    if (shift < tol) break;
  }
  return assign(pts, cents);
}

// CH with the library's degenerate rule folded in: fewer than two non-empty
// clusters, one point per cluster, or (numerically) zero within-cluster
// scatter all score +inf.
inline double ch_or_inf(const Mat& pts, const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> seen;
  for (auto l : labels)
    if (std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
  if (seen.size() < 2 || seen.size() == pts.size()) return INFINITY;
  const std::size_t n = pts.size(), d = pts[0].size();
  Vec mean(d, 0.0);
  for (const auto& p : pts)
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j] / static_cast<double>(n);
  double w = 0.0, b = 0.0;
  for (auto c : seen) {
    Vec cm(d, 0.0);
    double cnt = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == c) {
        cnt += 1;
        for (std::size_t j = 0; j < d; ++j) cm[j] += pts[i][j];
      }
    for (double& x : cm) x /= cnt;
    b += cnt * sqdist(cm, mean);
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == c) w += sqdist(pts[i], cm);
  }
  if (w <= 1e-12 * (b + w)) return INFINITY;
  return calinski_harabasz(pts, labels);
}

inline Vec minmax(Vec s) {
  double lo = INFINITY, hi = -INFINITY;
  for (double v : s)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) return Vec(s.size(), 1.0);
  for (double& v : s) v = ((std::isfinite(v) ? v : hi) - lo) / (hi - lo);
  return s;
}

// Straight-line bottom-up vote. slices[m][i] is update i's slice of the m-th
// election layer; ids[i] its client id. Returns the winning client ids, sorted.
inline std::vector<std::size_t> bottom_up_vote(const std::vector<Mat>& slices, const std::vector<std::size_t>& ids,
                                               std::size_t n_select, std::size_t k) {
  const std::size_t n = ids.size();
  Vec counters(n, 0.0);
  for (const Mat& pts : slices) {
    Vec scores(n);
    std::vector<std::vector<std::size_t>> results(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> others;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) others.push_back(j);
      std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
        const double da = sqdist(pts[i], pts[a]), db = sqdist(pts[i], pts[b]);
        if (da != db) return da > db;
        return ids[a] < ids[b];
      });
      Mat cents;
      for (std::size_t c = 0; c + 1 < k; ++c) cents.push_back(pts[others[c]]);
      cents.push_back(Vec(pts[0].size(), 0.0));
      results[i] = lloyd(pts, cents);
      scores[i] = ch_or_inf(pts, results[i]);
    }
    const Vec s = minmax(scores);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (results[i][i] == results[i][j]) counters[j] += s[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (counters[a] != counters[b]) return counters[a] > counters[b];
    return ids[a] < ids[b];
  });
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n_select; ++r) out.push_back(ids[order[r]]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
