#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace snowball {

using LayerId = int;

/// Model parameters (or an update to them) as ordered per-layer arrays.
///
/// Layer ids are strictly increasing and every layer is non-empty. Arithmetic
/// between two vectors requires identical ids and per-layer lengths.
class LayeredVector {
 public:
  struct Layer {
    LayerId id;
    std::vector<double> values;
  };

  LayeredVector() = default;

  void add_layer(LayerId id, std::vector<double> values);

  static LayeredVector zeros_like(const LayeredVector& other);

  std::size_t num_layers() const noexcept { return layers_.size(); }
  const Layer& layer(std::size_t pos) const { return layers_.at(pos); }
  Layer& layer(std::size_t pos) { return layers_.at(pos); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  std::vector<LayerId> layer_ids() const;
  std::vector<std::size_t> dims() const;

  // Position of `id` in layers(); throws ParameterError when absent.
  std::size_t position_of(LayerId id) const;
  std::span<const double> slice(LayerId id) const;

  std::size_t size() const noexcept;  // total scalar count
  bool same_shape(const LayeredVector& other) const noexcept;

  // Concatenation of the given layers (in the order given).
  std::vector<double> flatten(std::span<const LayerId> ids) const;
  std::vector<double> flatten() const;

  LayeredVector& operator+=(const LayeredVector& rhs);
  LayeredVector& operator-=(const LayeredVector& rhs);
  LayeredVector& operator*=(double s);
  // this += s * x
  LayeredVector& axpy(double s, const LayeredVector& x);

  void fill(double v);
  bool all_finite() const noexcept;

  friend LayeredVector operator+(LayeredVector a, const LayeredVector& b) { return a += b; }
  friend LayeredVector operator-(LayeredVector a, const LayeredVector& b) { return a -= b; }
  friend LayeredVector operator*(LayeredVector a, double s) { return a *= s; }

  bool operator==(const LayeredVector& other) const;

 private:
  void require_same_shape(const LayeredVector& other) const;

  std::vector<Layer> layers_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double squared_distance(const LayeredVector& a, const LayeredVector& b);

}  // namespace snowball
