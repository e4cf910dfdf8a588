#include "snowball/layered_vector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snowball/error.hpp"

namespace snowball {

void LayeredVector::add_layer(LayerId id, std::vector<double> values) {
  if (values.empty()) throw ParameterError("layer " + std::to_string(id) + " is empty");
  if (!layers_.empty() && layers_.back().id >= id)
    throw ParameterError("layer ids must be strictly increasing (got " + std::to_string(id) +
                         " after " + std::to_string(layers_.back().id) + ")");
  layers_.push_back({id, std::move(values)});
}

LayeredVector LayeredVector::zeros_like(const LayeredVector& other) {
  LayeredVector out;
  out.layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) out.layers_.push_back({l.id, std::vector<double>(l.values.size(), 0.0)});
  return out;
}

std::vector<LayerId> LayeredVector::layer_ids() const {
  std::vector<LayerId> ids;
  ids.reserve(layers_.size());
  for (const auto& l : layers_) ids.push_back(l.id);
  return ids;
}

std::vector<std::size_t> LayeredVector::dims() const {
  std::vector<std::size_t> d;
  d.reserve(layers_.size());
  for (const auto& l : layers_) d.push_back(l.values.size());
  return d;
}

std::size_t LayeredVector::position_of(LayerId id) const {
  auto it = std::lower_bound(layers_.begin(), layers_.end(), id,
                             [](const Layer& l, LayerId v) { return l.id < v; });
  if (it == layers_.end() || it->id != id) throw ParameterError("no layer with id " + std::to_string(id));
  return static_cast<std::size_t>(it - layers_.begin());
}

std::span<const double> LayeredVector::slice(LayerId id) const { return layers_[position_of(id)].values; }

std::size_t LayeredVector::size() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.values.size();
  return n;
}

bool LayeredVector::same_shape(const LayeredVector& other) const noexcept {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].id != other.layers_[i].id) return false;
    if (layers_[i].values.size() != other.layers_[i].values.size()) return false;
  }
  return true;
}

void LayeredVector::require_same_shape(const LayeredVector& other) const {
  if (!same_shape(other)) throw ShapeError("layered vectors differ in layer ids or dimensions");
}

std::vector<double> LayeredVector::flatten(std::span<const LayerId> ids) const {
  std::vector<double> out;
  for (LayerId id : ids) {
    auto s = slice(id);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<double> LayeredVector::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for (const auto& l : layers_) out.insert(out.end(), l.values.begin(), l.values.end());
  return out;
}

LayeredVector& LayeredVector::operator+=(const LayeredVector& rhs) { return axpy(1.0, rhs); }

LayeredVector& LayeredVector::operator-=(const LayeredVector& rhs) { return axpy(-1.0, rhs); }

LayeredVector& LayeredVector::operator*=(double s) {
  for (auto& l : layers_)
    for (auto& v : l.values) v *= s;
  return *this;
}

LayeredVector& LayeredVector::axpy(double s, const LayeredVector& x) {
  require_same_shape(x);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& dst = layers_[i].values;
    const auto& src = x.layers_[i].values;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s * src[j];
  }
  return *this;
}

void LayeredVector::fill(double v) {
  for (auto& l : layers_) std::fill(l.values.begin(), l.values.end(), v);
}

bool LayeredVector::all_finite() const noexcept {
  for (const auto& l : layers_)
    for (double v : l.values)
      if (!std::isfinite(v)) return false;
  return true;
}

bool LayeredVector::operator==(const LayeredVector& other) const {
  if (!same_shape(other)) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].values != other.layers_[i].values) return false;
  return true;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double squared_distance(const LayeredVector& a, const LayeredVector& b) {
  if (!a.same_shape(b)) throw ShapeError("squared_distance: layered vectors differ in shape");
  double s = 0.0;
  for (std::size_t i = 0; i < a.num_layers(); ++i) s += squared_distance(a.layer(i).values, b.layer(i).values);
  return s;
}

}  // namespace snowball
