#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "cgolab/core.hpp"

namespace cgolab {

/// Uniform node-inclusive sampling of [lo, hi] with n points.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 2;

  double step() const { return n > 1 ? (hi - lo) / double(n - 1) : 0.0; }
  double at(int i) const { return n > 1 ? lo + step() * double(i) : lo; }
  /// Trapezoid weight of node i. A single-node axis is a unit point mass.
  double weight(int i) const {
    if (n == 1) return 1.0;
    const double h = step();
    return (i == 0 || i == n - 1) ? 0.5 * h : h;
  }
  bool operator==(const Axis&) const = default;
};

inline Axis make_axis(double lo, double hi, int n) {
  require(n >= 1, "axis needs at least one node");
  require(n == 1 || hi > lo, "axis needs hi > lo");
  return Axis{lo, hi, n};
}

/// Tensor lattice over an axial interval times the transverse rectangle.
struct Lattice {
  Axis x1;  // axial
  Axis x2;  // transverse, first side
  Axis x3;  // transverse, second side

  std::size_t size() const { return std::size_t(x1.n) * std::size_t(x2.n) * std::size_t(x3.n); }
  std::size_t slab_size() const { return std::size_t(x2.n) * std::size_t(x3.n); }
  std::size_t index(int i, int j, int k) const {
    return (std::size_t(i) * std::size_t(x2.n) + std::size_t(j)) * std::size_t(x3.n) + std::size_t(k);
  }
  double weight(int i, int j, int k) const { return x1.weight(i) * x2.weight(j) * x3.weight(k); }
  bool operator==(const Lattice&) const = default;
};

/// Complex samples on a Lattice, row-major in (x1, x2, x3).
class GridField {
 public:
  GridField() = default;
  explicit GridField(Lattice lat, Complex fill = 0.0)
      : lat_(lat), values_(lat.size(), fill) {}
  GridField(Lattice lat, std::vector<Complex> values) : lat_(lat), values_(std::move(values)) {
    require(values_.size() == lat_.size(), "GridField: sample count does not match lattice");
  }

  template <class F>
  static GridField from_function(const Lattice& lat, F&& f) {
    GridField g(lat);
    for (int i = 0; i < lat.x1.n; ++i)
      for (int j = 0; j < lat.x2.n; ++j)
        for (int k = 0; k < lat.x3.n; ++k)
          g(i, j, k) = f(lat.x1.at(i), lat.x2.at(j), lat.x3.at(k));
    return g;
  }

  const Lattice& lattice() const { return lat_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  Complex& operator()(int i, int j, int k) { return values_[lat_.index(i, j, k)]; }
  Complex operator()(int i, int j, int k) const { return values_[lat_.index(i, j, k)]; }
  Complex& operator[](std::size_t p) { return values_[p]; }
  Complex operator[](std::size_t p) const { return values_[p]; }

  std::vector<Complex>& values() { return values_; }
  const std::vector<Complex>& values() const { return values_; }
  Complex* slab(int i) { return values_.data() + std::size_t(i) * lat_.slab_size(); }
  const Complex* slab(int i) const { return values_.data() + std::size_t(i) * lat_.slab_size(); }

  GridField& operator+=(const GridField& o) {
    check_same(o);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += o.values_[p];
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    check_same(o);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] -= o.values_[p];
    return *this;
  }
  GridField& operator*=(Complex c) {
    for (auto& z : values_) z *= c;
    return *this;
  }
  /// Pointwise product.
  GridField& mul(const GridField& o) {
    check_same(o);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] *= o.values_[p];
    return *this;
  }

  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator*(GridField a, Complex c) { return a *= c; }
  friend GridField operator*(Complex c, GridField a) { return a *= c; }
  friend GridField hadamard(GridField a, const GridField& b) { return a.mul(b); }

  double max_abs() const {
    double m = 0;
    for (auto z : values_) m = std::max(m, std::abs(z));
    return m;
  }
  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](Complex z) { return is_finite(z); });
  }

  /// Weighted L² inner product (f, g) = Σ w f conj(g).
  Complex dot(const GridField& o) const {
    check_same(o);
    Complex s = 0;
    for (int i = 0; i < lat_.x1.n; ++i)
      for (int j = 0; j < lat_.x2.n; ++j)
        for (int k = 0; k < lat_.x3.n; ++k) {
          const std::size_t p = lat_.index(i, j, k);
          s += lat_.weight(i, j, k) * values_[p] * std::conj(o.values_[p]);
        }
    return s;
  }
  double l2_norm() const { return std::sqrt(std::max(0.0, dot(*this).real())); }

 private:
  void check_same(const GridField& o) const {
    require(lat_ == o.lat_, "GridField: lattice mismatch");
  }

  Lattice lat_;
  std::vector<Complex> values_;
};

namespace detail {
inline double lp_accumulate(double acc, double v, double w, double r) {
  return std::isinf(r) ? std::max(acc, v) : acc + w * std::pow(v, r);
}
inline double lp_finish(double acc, double r) { return std::isinf(r) ? acc : std::pow(acc, 1.0 / r); }
}  // namespace detail

/// Discrete mixed norm ‖f‖_{r1,r2}: trapezoid L^{r2} over each x1-slab, then L^{r1}
/// (or the lattice maximum for r = ∞) across slabs.
inline double mixed_norm(const GridField& f, double r1, double r2) {
  require(!f.empty(), "mixed_norm: empty grid");
  require(r1 >= 1.0 && r2 >= 1.0, "mixed_norm: exponents must be >= 1");
  require(f.all_finite(), "mixed_norm: non-finite samples");
  const Lattice& lat = f.lattice();
  double outer = 0.0;
  for (int i = 0; i < lat.x1.n; ++i) {
    double inner = 0.0;
    for (int j = 0; j < lat.x2.n; ++j)
      for (int k = 0; k < lat.x3.n; ++k)
        inner = detail::lp_accumulate(inner, std::abs(f(i, j, k)), lat.x2.weight(j) * lat.x3.weight(k), r2);
    inner = detail::lp_finish(inner, r2);
    outer = detail::lp_accumulate(outer, inner, lat.x1.weight(i), r1);
  }
  return detail::lp_finish(outer, r1);
}

}  // namespace cgolab
