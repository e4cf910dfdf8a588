#include "snowball/rng.hpp"

#include <algorithm>
#include <numeric>

#include "snowball/error.hpp"

namespace snowball {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed) : RngStream(master_seed, {}) {}

RngStream::RngStream(std::uint64_t master_seed, std::vector<PathElement> path)
    : master_seed_(master_seed),
      path_(std::move(path)),
      engine_(path_hash(master_seed_, path_)) {}

std::uint64_t RngStream::path_hash(std::uint64_t seed, std::span<const PathElement> path) {
  std::uint64_t h = splitmix64(seed);
  for (const auto& e : path) {
    h = splitmix64(h ^ fnv1a(e.tag));
    h = splitmix64(h ^ e.index);
  }
  return h;
}

RngStream RngStream::derive(std::string_view tag, std::uint64_t index) const {
  auto child = path_;
  child.push_back({std::string(tag), index});
  return RngStream(master_seed_, std::move(child));
}

double RngStream::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw ParameterError("gamma shape must be positive");
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw ParameterError("uniform_index on empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::vector<double> RngStream::dirichlet(std::size_t n, double alpha) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) {
    v = gamma(alpha);
    total += v;
  }
  // Very small alpha can underflow every gamma draw to zero.
  if (total <= 0.0) {
    std::fill(p.begin(), p.end(), 0.0);
    p[uniform_index(n)] = 1.0;
    return p;
  }
  for (auto& v : p) v /= total;
  return p;
}

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) throw ParameterError("cannot sample " + std::to_string(k) + " of " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace snowball
