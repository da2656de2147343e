#pragma once

// Direct numerical evaluation of the resolvent kernel integral, independent of the residue formulas.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <map>

#include "cgolab/core.hpp"

namespace cgolab {

/// ∫_ℝ e^{its} / (s² + 2i s lam + mu² - lam²) ds by Ooura's double-exponential Fourier quadrature.
/// Folding s -> -s leaves the real even part 2(s²+mu²-lam²)/P and the odd part 4 lam s/P,
/// with P = (s²+mu²-lam²)² + 4 lam² s².
class KernelQuadrature {
 public:
  double operator()(double lam, double mu, double t) {
    require(std::isfinite(lam) && std::isfinite(mu) && std::isfinite(t), "kernel quadrature: non-finite input");
    const double d = mu * mu - lam * lam;
    auto P = [=](double s) {
      const double r = s * s + d;
      return r * r + 4.0 * lam * lam * s * s;
    };
    auto even = [=](double s) { return 2.0 * (s * s + d) / P(s); };
    auto odd = [=](double s) { return 4.0 * lam * s / P(s); };
    if (t == 0.0) {
      boost::math::quadrature::exp_sinh<double> es;
      return es.integrate(even, 0.0, std::numeric_limits<double>::infinity());
    }
    const double w = std::abs(t);
    auto& [ic, is] = integrators(w);
    const double c = ic.integrate(even, w).first;
    const double s = is.integrate(odd, w).first;
    return c + (t > 0 ? s : -s);
  }

 private:
  using Cos = boost::math::quadrature::ooura_fourier_cos<double>;
  using Sin = boost::math::quadrature::ooura_fourier_sin<double>;
  std::pair<Cos, Sin>& integrators(double w) {
    auto it = cache_.find(w);
    if (it == cache_.end()) it = cache_.emplace(w, std::make_pair(Cos(1e-13, 8), Sin(1e-13, 8))).first;
    return it->second;
  }
  std::map<double, std::pair<Cos, Sin>> cache_;
};

}  // namespace cgolab
