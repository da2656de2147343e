#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <optional>
#include <random>

#include "cgolab/forward.hpp"
#include "cgolab/resolvent.hpp"
#include "cgolab/spectral_basis.hpp"

namespace cgolab {

enum class PotentialKind { gaussian_bump, tensor_bump, singular_point, random_smooth };

inline const char* kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::gaussian_bump: return "gaussian-bump";
    case PotentialKind::tensor_bump: return "tensor-bump";
    case PotentialKind::singular_point: return "singular-point";
    case PotentialKind::random_smooth: return "random-smooth";
  }
  return "?";
}

inline PotentialKind parse_kind(const std::string& s) {
  if (s == "gaussian-bump") return PotentialKind::gaussian_bump;
  if (s == "tensor-bump") return PotentialKind::tensor_bump;
  if (s == "singular-point") return PotentialKind::singular_point;
  if (s == "random-smooth") return PotentialKind::random_smooth;
  throw ValidationError("unknown potential kind '" + s + "'");
}

/// Class parameters: norm cap K, decay constant varkappa, threshold t0, decay rate beta, and the
/// transverse Lebesgue exponent s of ‖·‖_{∞,s}.
struct ClassParams {
  double K = 1.0;
  double varkappa = 1.0;
  double t0 = 1.0;
  double beta = 1.0;
  double s = 2.5;
};

/// Transverse profile q(x') together with its support. Radial kinds live on the disc of the given
/// radius about center; tensor-bump on the square of half-side width.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::gaussian_bump;
  std::array<double, 2> center{0.5, 0.5};
  double width = 0.2;
  double amplitude = 1.0;
  double delta = 0.5;   // singular-point exponent
  double radius = 0.18; // support radius of the radial kinds
  int modes = 6;        // random-smooth
  std::uint64_t seed = 0;
  ClassParams cls;

  /// Support bounding box {lo2, hi2, lo3, hi3}.
  std::array<double, 4> support_box() const {
    const double r = kind == PotentialKind::tensor_bump ? width : radius;
    return {center[0] - r, center[0] + r, center[1] - r, center[1] + r};
  }

  void validate() const {
    require(std::isfinite(amplitude), "potential: amplitude must be finite");
    require(std::isfinite(center[0]) && std::isfinite(center[1]), "potential: center must be finite");
    require(width > 0 && std::isfinite(width), "potential: width must be positive");
    require(radius > 0 && std::isfinite(radius), "potential: radius must be positive");
    require(cls.s >= 1, "potential: class exponent s must be >= 1");
    if (kind == PotentialKind::singular_point) {
      require(delta > 0, "potential: singular exponent delta must be positive");
      require(delta < 2.0 / cls.s, "potential: delta >= 2/s, the singularity is not L^s-integrable");
    }
    if (kind == PotentialKind::random_smooth) require(modes >= 1, "potential: random-smooth needs modes >= 1");
  }

  /// Also checks that the support lies in the cross-section of Ω.
  void validate(const BoxOmega& dom) const {
    validate();
    const auto s = support_box();
    const double e = 1e-12;
    require(s[0] >= dom.lo[1] - e && s[1] <= dom.hi[1] + e && s[2] >= dom.lo[2] - e && s[3] <= dom.hi[2] + e,
            "potential: support leaves the cross-section of Omega");
  }
};

namespace detail {

inline double poly_bump(double z) {
  if (std::abs(z) >= 1) return 0;
  const double u = 1 - z * z;
  return u * u * u * u * u * u;
}

/// ∫₀^a∫₀^b (x²+y²)^{-δ/2} dy dx via polar coordinates.
inline double corner_integral(double a, double b, double delta) {
  if (a <= 0 || b <= 0) return 0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double p = 2 - delta, split = std::atan2(b, a);
  auto fa = [&](double t) { return std::pow(a / std::cos(t), p); };
  auto fb = [&](double t) { return std::pow(b / std::sin(t), p); };
  return (GK::integrate(fa, 0.0, split, 10, 1e-13) + GK::integrate(fb, split, kPi / 2, 10, 1e-13)) / p;
}

struct RandomModes {
  std::vector<std::array<double, 4>> m;  // coefficient, f2, f3, phase
};

inline RandomModes random_modes(const PotentialSpec& s) {
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> N;
  std::uniform_int_distribution<int> F(-2, 2);
  std::uniform_real_distribution<double> U(0, 2 * kPi);
  RandomModes r;
  for (int k = 0; k < s.modes; ++k) {
    const double c = N(rng) / std::sqrt(double(s.modes));
    const double f2 = F(rng), f3 = F(rng);
    r.m.push_back({c, f2, f3, U(rng)});
  }
  return r;
}

}  // namespace detail

/// Pointwise profile. The singular kind returns +∞ at the center itself.
inline std::function<Complex(double, double)> transverse_profile(const PotentialSpec& spec) {
  spec.validate();
  const auto c = spec.center;
  const double A = spec.amplitude, R = spec.radius, w = spec.width;
  switch (spec.kind) {
    case PotentialKind::tensor_bump:
      return [=](double x2, double x3) {
        return Complex(A * detail::poly_bump((x2 - c[0]) / w) * detail::poly_bump((x3 - c[1]) / w));
      };
    case PotentialKind::gaussian_bump:
      return [=](double x2, double x3) {
        const double r2 = (x2 - c[0]) * (x2 - c[0]) + (x3 - c[1]) * (x3 - c[1]);
        if (r2 >= R * R) return Complex(0);
        const double t = 1 - r2 / (R * R);
        return Complex(A * std::exp(-r2 / (w * w)) * t * t * t * t);
      };
    case PotentialKind::singular_point: {
      const double d = spec.delta;
      return [=](double x2, double x3) {
        const double r = std::hypot(x2 - c[0], x3 - c[1]);
        if (r >= R) return Complex(0);
        if (r == 0) return Complex(kInf);
        const double cut = r <= R / 2 ? 1.0 : CutoffProfile::smoothstep((R - r) / (R / 2));
        return Complex(A * std::pow(r, -d) * cut);
      };
    }
    case PotentialKind::random_smooth: {
      const auto modes = detail::random_modes(spec);
      return [=](double x2, double x3) {
        const double r2 = (x2 - c[0]) * (x2 - c[0]) + (x3 - c[1]) * (x3 - c[1]);
        if (r2 >= R * R) return Complex(0);
        const double t = 1 - r2 / (R * R);
        double s = 0;
        for (const auto& m : modes.m)
          s += m[0] * std::cos(kPi * (m[1] * (x2 - c[0]) + m[2] * (x3 - c[1])) / R + m[3]);
        return Complex(A * s * t * t * t * t);
      };
    }
  }
  return [](double, double) { return Complex(0); };
}

/// The potential sampled on a lattice, constant in x1. For the singular kind the node whose cell
/// contains the center carries the cell average of |x'-x'₀|^{-δ} instead of a point value.
inline GridField sample_on(const PotentialSpec& spec, const Lattice& L) {
  const auto f = transverse_profile(spec);
  GridField slab(Lattice{Axis{L.x1.lo, L.x1.lo, 1}, L.x2, L.x3});
  for (int j = 0; j < L.x2.n; ++j)
    for (int k = 0; k < L.x3.n; ++k) slab(0, j, k) = f(L.x2.at(j), L.x3.at(k));
  if (spec.kind == PotentialKind::singular_point) {
    const double h2 = L.x2.step(), h3 = L.x3.step();
    const int j = int(std::lround((spec.center[0] - L.x2.lo) / h2));
    const int k = int(std::lround((spec.center[1] - L.x3.lo) / h3));
    if (j >= 0 && j < L.x2.n && k >= 0 && k < L.x3.n) {
      const double dx = spec.center[0] - L.x2.at(j), dy = spec.center[1] - L.x3.at(k);
      const double l = h2 / 2 + dx, r = h2 / 2 - dx, d = h3 / 2 + dy, u = h3 / 2 - dy;
      const double I = detail::corner_integral(l, d, spec.delta) + detail::corner_integral(l, u, spec.delta) +
                       detail::corner_integral(r, d, spec.delta) + detail::corner_integral(r, u, spec.delta);
      slab(0, j, k) = spec.amplitude * I / (h2 * h3);
    }
  }
  GridField out(L);
  for (int i = 0; i < L.x1.n; ++i) std::copy(slab.slab(0), slab.slab(0) + L.slab_size(), out.slab(i));
  return out;
}

/// Lattice of one transverse slab over Q'.
inline Lattice slab_lattice(const RectangleDomain& d) { return Lattice{Axis{1.0, 1.0, 1}, d.axis2(), d.axis3()}; }

inline GridField sample(const PotentialSpec& spec, const RectangleDomain& dom) {
  dom.validate();
  return sample_on(spec, slab_lattice(dom));
}

/// Fit of log ‖qχ_{|q|>t}‖_{∞,s}^s against log t.
struct TruncationDecay {
  double beta_hat = kInf;
  double varkappa_hat = 0;
  bool effectively_bounded = false;
  double max_residual = 0;  // largest positive residual of the fit in log units
  std::vector<double> t;
  std::vector<double> mass;  // ‖qχ_{|q|>t}‖_{∞,s}^s
};

inline GridField truncate_above(const GridField& q, double t) {
  GridField out = q;
  for (auto& z : out.values())
    if (!(std::abs(z) > t)) z = 0;
  return out;
}

inline TruncationDecay truncation_decay(const GridField& q, const std::vector<double>& t_list, double s) {
  require(t_list.size() >= 4, "truncation_decay: need at least four thresholds");
  require(std::is_sorted(t_list.begin(), t_list.end()) &&
              std::adjacent_find(t_list.begin(), t_list.end()) == t_list.end() && t_list.front() > 0,
          "truncation_decay: thresholds must be positive and strictly increasing");
  require(s >= 1, "truncation_decay: s must be >= 1");
  TruncationDecay td;
  std::vector<double> X, Y;
  for (double t : t_list) {
    const double m = std::pow(mixed_norm(truncate_above(q, t), kInf, s), s);
    td.t.push_back(t);
    td.mass.push_back(m);
    if (m == 0) {
      td.effectively_bounded = true;
      break;
    }
    X.push_back(std::log(t));
    Y.push_back(std::log(m));
  }
  if (X.size() < 2) {
    td.effectively_bounded = true;
    return td;
  }
  const LineFit f = fit_line(X, Y);
  td.beta_hat = -f.slope;
  td.varkappa_hat = std::exp(f.intercept);
  for (std::size_t i = 0; i < X.size(); ++i) td.max_residual = std::max(td.max_residual, Y[i] - (f.intercept + f.slope * X[i]));
  return td;
}

struct MembershipReport {
  bool support_ok = true;
  bool norm_ok = true;
  bool decay_ok = true;
  bool member = true;
  double norm = 0;          // ‖q‖_{∞,s}
  double worst_decay = 0;   // max_t ‖qχ_{|q|>t}‖^s / (varkappa t^{-beta})
  std::vector<double> thresholds;
};

/// Default thresholds t0·2^{k/2} up to the first one above max|q|.
inline std::vector<double> default_thresholds(const GridField& q, double t0) {
  std::vector<double> t;
  const double mx = q.max_abs();
  for (int k = 0;; ++k) {
    t.push_back(t0 * std::pow(2.0, k / 2.0));
    if (t.back() > mx || k > 200) break;
  }
  return t;
}

/// Checks support containment in box {lo2, hi2, lo3, hi3} (skipped when empty), the norm cap and
/// the decay bound at each threshold t >= t0.
inline MembershipReport class_membership(const GridField& q, const ClassParams& p, std::optional<std::array<double, 4>> box = {},
                                         std::vector<double> thresholds = {}) {
  require(p.t0 > 0 && p.K >= 0 && p.varkappa >= 0 && p.beta >= 0 && p.s >= 1, "class_membership: invalid class parameters");
  MembershipReport r;
  const Lattice& L = q.lattice();
  if (box) {
    const auto& b = *box;
    const double e = 1e-12;
    for (int i = 0; i < L.x1.n; ++i)
      for (int j = 0; j < L.x2.n; ++j)
        for (int k = 0; k < L.x3.n; ++k) {
          if (q(i, j, k) == Complex(0)) continue;
          const double x2 = L.x2.at(j), x3 = L.x3.at(k);
          if (x2 < b[0] - e || x2 > b[1] + e || x3 < b[2] - e || x3 > b[3] + e) r.support_ok = false;
        }
  }
  r.norm = mixed_norm(q, kInf, p.s);
  r.norm_ok = r.norm <= p.K;
  r.thresholds = thresholds.empty() ? default_thresholds(q, p.t0) : std::move(thresholds);
  for (double t : r.thresholds) {
    if (t < p.t0) continue;
    const double m = std::pow(mixed_norm(truncate_above(q, t), kInf, p.s), p.s);
    const double bound = p.varkappa * std::pow(t, -p.beta);
    if (m == 0) continue;
    r.worst_decay = std::max(r.worst_decay, bound > 0 ? m / bound : kInf);
    if (m > bound * (1 + 1e-12)) r.decay_ok = false;
  }
  r.member = r.support_ok && r.norm_ok && r.decay_ok;
  return r;
}

}  // namespace cgolab
