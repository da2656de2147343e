#pragma once

#include <ostream>
#include <vector>

#include "cgolab/core.hpp"

namespace cgolab {

/// s_r = 2r/(r-2).
inline double s_of(double r) {
  require(std::isfinite(r) && r > 2.0, "s_of: exponent must exceed 2");
  return 2.0 * r / (r - 2.0);
}

inline double conjugate_exponent(double p) {
  require(p > 1.0, "conjugate exponent needs p > 1");
  return std::isinf(p) ? 1.0 : p / (p - 1.0);
}

struct ExponentSet {
  double s = 0;
  double sigma = 1;
  double beta = 1;
  double alpha = 0;
  double r = 0;
  double p_prime = 0;
  double p = 0;
  double theta = 0;
  double p_tilde_prime = 0;
  double p_tilde = 0;
  double ell = 0;
  double ell_tilde = 0;
  double gamma = 0;
  double tau = 0;

  /// Names of violated invariants, empty when consistent. Equalities use rel. tolerance tol.
  std::vector<std::string> violations(double tol = 1e-12) const {
    std::vector<std::string> bad;
    auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
    if (!(alpha > 0 && alpha < 0.5)) bad.push_back("0 < alpha < 1/2");
    if (!(r > 2 && r < 2.0 / alpha - 2.0)) bad.push_back("2 < r < 2/alpha - 2");
    if (!(p_prime > 2 && p_prime < 4.0 * (1.0 - alpha))) bad.push_back("2 < p' < 4(1-alpha)");
    if (!(theta < 0.5)) bad.push_back("theta < 1/2");
    if (!close(1.0 / p + 1.0 / p_prime, 1.0)) bad.push_back("1/p + 1/p' = 1");
    if (!close(1.0 / p_tilde + 1.0 / p_tilde_prime, 1.0)) bad.push_back("1/p~ + 1/p~' = 1");
    if (!close(ell / 2.0, s)) bad.push_back("ell/2 = s");
    if (!close(p_prime, 2.0 + alpha * (r - 2.0))) bad.push_back("p' = 2 + alpha(r-2)");
    if (!close(theta, alpha * r / p_prime)) bad.push_back("theta = alpha r/p'");
    return bad;
  }
};

inline ExponentSet solve_exponents(double s, double sigma = 1.0, double beta = 1.0) {
  require(std::isfinite(s) && s > 2.0 && s < 3.0, "solve_exponents: s must lie in (2,3)");
  require(sigma > 0.0 && sigma <= 1.0, "solve_exponents: sigma must lie in (0,1]");
  require(beta > 0.0, "solve_exponents: beta must be positive");
  ExponentSet e;
  e.s = s;
  e.sigma = sigma;
  e.beta = beta;
  e.p_prime = 2.0 * s / (s - 1.0);
  e.alpha = (4.0 - e.p_prime) / 8.0;
  e.r = 2.0 + (e.p_prime - 2.0) / e.alpha;
  e.p = conjugate_exponent(e.p_prime);
  // alpha r / p' simplifies to (3p'-4)/(4p') with alpha pinned at the midpoint.
  e.theta = (3.0 * e.p_prime - 4.0) / (4.0 * e.p_prime);
  e.p_tilde_prime = 1.0 / e.theta;
  e.p_tilde = conjugate_exponent(e.p_tilde_prime);
  e.ell = s_of(e.p_prime);
  e.ell_tilde = s_of(e.p_tilde_prime);
  e.gamma = std::min(0.5, beta);
  e.tau = sigma * std::min(0.125, beta / 4.0);
  const auto bad = e.violations(1e-12);
  if (!bad.empty()) throw NumericalError("solve_exponents: inconsistent exponents (" + bad.front() + ")");
  return e;
}

inline void print_exponents(std::ostream& os, const ExponentSet& e) {
  os.precision(17);
  os << "s=" << e.s << "\nsigma=" << e.sigma << "\nbeta=" << e.beta << "\nalpha=" << e.alpha
     << "\nr=" << e.r << "\np_prime=" << e.p_prime << "\np=" << e.p << "\ntheta=" << e.theta
     << "\np_tilde_prime=" << e.p_tilde_prime << "\np_tilde=" << e.p_tilde << "\nell=" << e.ell
     << "\nell_tilde=" << e.ell_tilde << "\ngamma=" << e.gamma << "\ntau=" << e.tau << "\n";
}

}  // namespace cgolab
