#pragma once

#include <array>
#include <string>
#include <vector>

#include "cgolab/spectral_basis.hpp"

namespace cgolab {

enum class KernelRegime { upper_pole, lower_pole, lower_two_poles, double_pole, zero };

inline const char* regime_name(KernelRegime r) {
  switch (r) {
    case KernelRegime::upper_pole: return "upper-pole";
    case KernelRegime::lower_pole: return "lower-pole";
    case KernelRegime::lower_two_poles: return "lower-two-poles";
    case KernelRegime::double_pole: return "double-pole";
    case KernelRegime::zero: return "zero";
  }
  return "?";
}

struct KernelValue {
  double value = 0;
  KernelRegime regime = KernelRegime::zero;
};

/// h(lam, mu, t) = ∫ e^{its} / (s² + 2i s lam + mu² - lam²) ds by residues.
inline KernelValue kernel_h(double lam, double mu, double t) {
  require(std::isfinite(lam) && std::isfinite(mu) && std::isfinite(t), "kernel_h: non-finite input");
  require(mu >= 0.0, "kernel_h: mu must be nonnegative");
  require(lam != 0.0, "kernel_h: lam must be nonzero");
  require(mu != std::abs(lam), "kernel_h: lam = mu puts a pole on the real axis");
  if (lam < 0) return kernel_h(-lam, mu, -t);
  KernelValue k;
  if (mu == 0.0) {
    // double pole at s = -i lam
    if (t < 0) {
      k.value = 2.0 * kPi * t * std::exp(lam * t);
      k.regime = KernelRegime::double_pole;
    }
    return k;
  }
  const double c = kPi / mu;
  if (t >= 0) {
    if (mu > lam) {
      k.value = c * std::exp(-(mu - lam) * t);
      k.regime = KernelRegime::upper_pole;
    }
    return k;
  }
  const double at = -t;
  if (mu > lam) {
    k.value = c * std::exp(-(mu + lam) * at);
    k.regime = KernelRegime::lower_pole;
  } else {
    // difference of two nearby exponentials; expm1 keeps it accurate for small mu*|t|
    k.value = c * std::exp(-(lam - mu) * at) * std::expm1(-2.0 * mu * at);
    k.regime = KernelRegime::lower_two_poles;
  }
  return k;
}

/// Three-case majorant for the band-k kernel.
inline double kernel_band_bound(double lam, int k, double t) {
  require(k >= 1, "kernel_band_bound: k must be >= 1");
  const double inv = 1.0 / double(k);
  const double at = std::abs(t);
  if (lam < k) return inv * std::exp(-(k - lam) * at);
  if (lam < k + 1) return inv;
  return inv * std::exp(-(lam - (k + 1)) * at);
}

/// Smooth axial cutoff: 1 on [flat_lo, flat_hi], 0 outside (zero_lo, zero_hi), C² quintic joins.
struct CutoffProfile {
  double zero_lo = 0.05;
  double flat_lo = 0.3;
  double flat_hi = 1.7;
  double zero_hi = 1.95;

  static double smoothstep(double z) {
    if (z <= 0) return 0;
    if (z >= 1) return 1;
    return z * z * z * (10.0 + z * (-15.0 + 6.0 * z));
  }
  double operator()(double x) const {
    if (x <= zero_lo || x >= zero_hi) return 0.0;
    if (x < flat_lo) return smoothstep((x - zero_lo) / (flat_lo - zero_lo));
    if (x > flat_hi) return smoothstep((zero_hi - x) / (zero_hi - flat_hi));
    return 1.0;
  }
};

/// One exponential piece c·e^{-a|t|} of the axial Green's function, on one side of t = 0.
struct ExpTerm {
  double c = 0;
  double a = 0;
};

/// Green's function G = h/(2π) of -∂² + 2 lam ∂ + mu² - lam², split by the sign of t.
struct AxialGreen {
  std::vector<ExpTerm> plus;   // t > 0
  std::vector<ExpTerm> minus;  // t < 0

  double operator()(double t) const {
    double s = 0;
    if (t > 0)
      for (auto e : plus) s += e.c * std::exp(-e.a * t);
    else
      for (auto e : minus) s += e.c * std::exp(e.a * t);
    return s;
  }
};

inline AxialGreen axial_green(double lam, double mu) {
  require(mu > 0.0, "axial_green: transverse frequency must be positive");
  require(lam != 0.0 && std::abs(lam) != mu, "axial_green: lam must avoid 0 and the frequency");
  const double L = std::abs(lam);
  AxialGreen g;
  const double c = 0.5 / mu;
  if (mu > L) g.plus.push_back({c, mu - L});
  g.minus.push_back({c, mu + L});
  if (mu < L) g.minus.push_back({-c, L - mu});
  if (lam < 0) std::swap(g.plus, g.minus);
  return g;
}

namespace detail {

/// Product-integration weights for e^{-a s} on one cell of width h against a linear interpolant.
/// Returns {E, near, far}: E = e^{-ah}, near-end weight K0-K1, far-end weight K1.
inline std::array<double, 3> exp_cell_weights(double a, double h) {
  const double x = a * h;
  const double E = std::exp(-x);
  double k0, k1;
  if (x < 1e-2) {
    k0 = h * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x * x * x * x / 120.0);
    k1 = h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0 + x * x * x * x / 144.0);
  } else {
    const double om = -std::expm1(-x);
    k0 = om / a;
    k1 = h * (om - x * E) / (x * x);
  }
  return {E, k0 - k1, k1};
}

/// out += T c for the axial convolution with G on a uniform lattice with spacing h.
inline void convolve_add(const AxialGreen& G, double h, const Complex* c, Complex* out, int n) {
  for (const auto& t : G.plus) {
    const auto [E, wn, wf] = exp_cell_weights(t.a, h);
    Complex A = 0, B = c[0];
    for (int i = 1; i < n; ++i) {
      A = c[i] + E * A;
      out[i] += t.c * (wn * A + wf * B);
      B = c[i] + E * B;
    }
  }
  for (const auto& t : G.minus) {
    const auto [E, wn, wf] = exp_cell_weights(t.a, h);
    Complex A = 0, B = c[n - 1];
    for (int i = n - 2; i >= 0; --i) {
      A = c[i] + E * A;
      out[i] += t.c * (wn * A + wf * B);
      B = c[i] + E * B;
    }
  }
}

/// out += Tᵀ g (transpose of convolve_add).
inline void convolve_transpose_add(const AxialGreen& G, double h, const Complex* g, Complex* out, int n) {
  for (const auto& t : G.plus) {
    const auto [E, wn, wf] = exp_cell_weights(t.a, h);
    Complex Rn = 0;  // R_{j+1}
    for (int j = n - 1; j >= 0; --j) {
      const Complex R = g[j] + E * Rn;
      out[j] += t.c * ((j >= 1 ? wn * R : Complex(0)) + wf * Rn);
      Rn = R;
    }
  }
  for (const auto& t : G.minus) {
    const auto [E, wn, wf] = exp_cell_weights(t.a, h);
    Complex Lp = 0;  // L_{j-1}
    for (int j = 0; j < n; ++j) {
      const Complex L = g[j] + E * Lp;
      out[j] += t.c * ((j <= n - 2 ? wn * L : Complex(0)) + wf * Lp);
      Lp = L;
    }
  }
}

}  // namespace detail

/// Per-slab modal coefficients (M2 x M3 matrices) of a field along a given axial lattice.
struct ModalField {
  Axis x1;
  std::vector<MatrixXcdR> coeffs;
};

/// Smoothed resolvent E_lam acting on fields over the lattice (axial range arbitrary, Q' transverse).
class Resolvent {
 public:
  Resolvent(const Lattice& lat, const EigenBasis& basis, CutoffProfile psi = {})
      : lat_(lat), basis_(&basis), psi_(psi) {
    const auto& d = basis.domain();
    require(lat.x2 == d.axis2() && lat.x3 == d.axis3(), "resolvent: lattice does not match the eigenbasis");
    require(lat.x1.n >= 2, "resolvent: need at least two axial nodes");
    psi_samples_.resize(lat.x1.n);
    for (int i = 0; i < lat.x1.n; ++i) psi_samples_[i] = psi_(lat.x1.at(i));
  }

  const Lattice& lattice() const { return lat_; }
  const EigenBasis& basis() const { return *basis_; }
  const CutoffProfile& cutoff() const { return psi_; }

  void check_lambda(double lam) const {
    if (!in_lambda_set(lam, basis_->domain()))
      throw ValidationError("resolvent: lam=" + std::to_string(lam) + " is not admissible (|lam|<4 or lam² near the spectrum)");
  }

  /// E f in modal form: psi(x1)·(G_j * f_j)(x1) per retained mode.
  ModalField apply_modal(const GridField& f, double lam) const {
    check_field(f);
    check_lambda(lam);
    const int n1 = lat_.x1.n;
    const double h = lat_.x1.step();
    std::vector<MatrixXcdR> C(n1);
    for (int i = 0; i < n1; ++i) C[i] = basis_->project(f.slab(i));
    ModalField out{lat_.x1, std::vector<MatrixXcdR>(n1, MatrixXcdR::Zero(basis_->max_m(), basis_->max_n()))};
    std::vector<Complex> c(n1), d(n1);
    for (const auto& md : basis_->modes()) {
      const int m = md.m - 1, n = md.n - 1;
      bool nz = false;
      for (int i = 0; i < n1; ++i) {
        c[i] = C[i](m, n);
        nz = nz || c[i] != Complex(0);
      }
      if (!nz) continue;
      std::fill(d.begin(), d.end(), Complex(0));
      detail::convolve_add(axial_green(lam, std::sqrt(md.lambda)), h, c.data(), d.data(), n1);
      for (int i = 0; i < n1; ++i) out.coeffs[i](m, n) = psi_samples_[i] * d[i];
    }
    return out;
  }

  GridField synthesize(const ModalField& mf) const {
    GridField g(lat_);
    for (int i = 0; i < lat_.x1.n; ++i) basis_->synthesize(mf.coeffs[i], g.slab(i));
    return g;
  }

  GridField apply(const GridField& f, double lam) const { return synthesize(apply_modal(f, lam)); }

  /// Adjoint of apply in the trapezoid-weighted L² inner product of the lattice.
  GridField apply_adjoint(const GridField& g, double lam) const {
    check_field(g);
    check_lambda(lam);
    const int n1 = lat_.x1.n;
    const double h = lat_.x1.step();
    std::vector<MatrixXcdR> C(n1);
    for (int i = 0; i < n1; ++i) C[i] = basis_->project(g.slab(i)) * Complex(psi_samples_[i] * lat_.x1.weight(i));
    std::vector<MatrixXcdR> D(n1, MatrixXcdR::Zero(basis_->max_m(), basis_->max_n()));
    std::vector<Complex> c(n1), d(n1);
    for (const auto& md : basis_->modes()) {
      const int m = md.m - 1, n = md.n - 1;
      bool nz = false;
      for (int i = 0; i < n1; ++i) {
        c[i] = C[i](m, n);
        nz = nz || c[i] != Complex(0);
      }
      if (!nz) continue;
      std::fill(d.begin(), d.end(), Complex(0));
      detail::convolve_transpose_add(axial_green(lam, std::sqrt(md.lambda)), h, c.data(), d.data(), n1);
      for (int i = 0; i < n1; ++i) D[i](m, n) = d[i] / lat_.x1.weight(i);
    }
    GridField out(lat_);
    for (int i = 0; i < n1; ++i) basis_->synthesize(D[i], out.slab(i));
    return out;
  }

 private:
  void check_field(const GridField& f) const {
    require(f.lattice() == lat_, "resolvent: field lattice mismatch");
    require(f.all_finite(), "resolvent: non-finite input");
  }

  Lattice lat_;
  const EigenBasis* basis_;
  CutoffProfile psi_;
  std::vector<double> psi_samples_;
};

inline GridField apply_E(const GridField& f, double lam, const EigenBasis& basis, const CutoffProfile& psi = {}) {
  return Resolvent(f.lattice(), basis, psi).apply(f, lam);
}

}  // namespace cgolab
