#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace snowball {

/// A seeded random stream identified by (master seed, derivation path).
///
/// Two streams with equal seed and path produce identical draws. Deriving a
/// child only looks at the parent's seed and path, never at how many values
/// the parent has already produced, so sibling derivations are independent of
/// each other and of call order.
class RngStream {
 public:
  struct PathElement {
    std::string tag;
    std::uint64_t index;
    bool operator==(const PathElement&) const = default;
  };

  explicit RngStream(std::uint64_t master_seed);

  RngStream derive(std::string_view tag, std::uint64_t index = 0) const;

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const std::vector<PathElement>& path() const noexcept { return path_; }

  std::mt19937_64& engine() noexcept { return engine_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                             // [0, 1)
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  double gamma(double shape);                   // unit scale
  std::size_t uniform_index(std::size_t n);     // [0, n)

  std::vector<double> dirichlet(std::size_t n, double alpha);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    std::shuffle(values.begin(), values.end(), engine_);
  }

  // k distinct indices from [0, n), in the order they were drawn.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  RngStream(std::uint64_t master_seed, std::vector<PathElement> path);
  static std::uint64_t path_hash(std::uint64_t seed, std::span<const PathElement> path);

  std::uint64_t master_seed_;
  std::vector<PathElement> path_;
  std::mt19937_64 engine_;
};

}  // namespace snowball
