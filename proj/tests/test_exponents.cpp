#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <random>

#include "cgolab/exponents.hpp"
#include "cgolab/spectral_basis.hpp"

using namespace cgolab;

TEST(SOf, Examples) {
  EXPECT_NEAR(s_of(4.0), 4.0, 1e-14);
  EXPECT_NEAR(s_of(10.0 / 3.0), 5.0, 1e-14);
  EXPECT_NEAR(s_of(3.0), 6.0, 1e-14);
}

TEST(SOf, RejectsAtOrBelowTwo) {
  EXPECT_THROW(s_of(2.0), ValidationError);
  EXPECT_THROW(s_of(1.5), ValidationError);
  EXPECT_THROW(s_of(kInf), ValidationError);
}

TEST(Exponents, WorkedValuesAtFiveHalves) {
  const ExponentSet e = solve_exponents(2.5, 1.0, 1.0);
  EXPECT_NEAR(e.p_prime, 10.0 / 3.0, 1e-14);
  EXPECT_NEAR(e.ell, 5.0, 1e-13);
  EXPECT_NEAR(e.alpha, 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(e.r, 18.0, 1e-12);
  EXPECT_LT(e.r, 22.0);
  EXPECT_NEAR(e.theta, 0.45, 1e-14);
  EXPECT_NEAR(e.p_tilde_prime, 20.0 / 9.0, 1e-14);
  EXPECT_NEAR(e.ell_tilde, 20.0, 1e-12);
  EXPECT_NEAR(e.p, 10.0 / 7.0, 1e-14);
}

TEST(Exponents, GammaAndTau) {
  const ExponentSet a = solve_exponents(2.5, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(a.gamma, 0.5);
  EXPECT_DOUBLE_EQ(a.tau, 0.125);
  const ExponentSet b = solve_exponents(2.5, 0.5, 0.2);
  EXPECT_DOUBLE_EQ(b.gamma, 0.2);
  EXPECT_DOUBLE_EQ(b.tau, 0.5 * 0.05);
  const ExponentSet c = solve_exponents(2.5, 1.0, kInf);
  EXPECT_DOUBLE_EQ(c.gamma, 0.5);
}

TEST(Exponents, RejectsOutOfRange) {
  EXPECT_THROW(solve_exponents(2.0), ValidationError);
  EXPECT_THROW(solve_exponents(3.0), ValidationError);
  EXPECT_THROW(solve_exponents(3.5), ValidationError);
  EXPECT_THROW(solve_exponents(std::nan("")), ValidationError);
  EXPECT_THROW(solve_exponents(2.5, 0.0), ValidationError);
  EXPECT_THROW(solve_exponents(2.5, 1.5), ValidationError);
  EXPECT_THROW(solve_exponents(2.5, 1.0, 0.0), ValidationError);
}

TEST(Exponents, InvariantsAcrossRange) {
  for (int i = 1; i < 200; ++i) {
    const double s = 2.0 + i / 200.0;
    const ExponentSet e = solve_exponents(s);
    EXPECT_TRUE(e.violations(1e-12).empty()) << "s=" << s;
    EXPECT_GT(e.alpha, 0.0);
    EXPECT_LT(e.alpha, 0.5);
    EXPECT_GT(e.r, 2.0);
    EXPECT_LT(e.r, 2.0 / e.alpha - 2.0);
    EXPECT_GT(e.p_prime, 2.0);
    EXPECT_LT(e.p_prime, 4.0 * (1.0 - e.alpha));
    EXPECT_LT(e.theta, 0.5);
    EXPECT_NEAR(1.0 / e.p + 1.0 / e.p_prime, 1.0, 1e-13);
    EXPECT_NEAR(1.0 / e.p_tilde + 1.0 / e.p_tilde_prime, 1.0, 1e-13);
    EXPECT_NEAR(e.ell / 2.0, s, 1e-12 * s);
    EXPECT_NEAR(e.p_prime, 2.0 + e.alpha * (e.r - 2.0), 1e-12);
    EXPECT_NEAR(e.theta, e.alpha * e.r / e.p_prime, 1e-13);
  }
}

TEST(Exponents, AlphaShrinksNearTwo) {
  // p' -> 4 as s -> 2, which drives alpha to zero
  EXPECT_LT(solve_exponents(2.0001).alpha, 1e-4);
  EXPECT_GT(solve_exponents(2.9).alpha, solve_exponents(2.1).alpha);
}

namespace {

Lattice slab(int n2, int n3, int n1 = 1, double x1lo = 1.0, double x1hi = 1.0) {
  return Lattice{Axis{x1lo, x1hi, n1}, Axis{0.0, 1.0, n2}, Axis{0.0, 1.0, n3}};
}

GridField random_grid(const Lattice& L, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  GridField g(L);
  for (auto& z : g.values()) z = Complex(N(rng), N(rng));
  return g;
}

}  // namespace

TEST(MixedNorm, ConstantAndZero) {
  const Lattice L = Lattice{Axis{0.5, 1.5, 33}, Axis{0, 1, 40}, Axis{0, 1, 40}};
  EXPECT_NEAR(mixed_norm(GridField(L, 1.0), kInf, 2.5), 1.0, 1e-13);
  EXPECT_NEAR(mixed_norm(GridField(L, 1.0), 3.0, 2.5), 1.0, 1e-13);
  EXPECT_EQ(mixed_norm(GridField(L, 0.0), kInf, 2.5), 0.0);
  EXPECT_EQ(mixed_norm(GridField(L, 0.0), 2.0, 2.0), 0.0);
}

TEST(MixedNorm, SeparableAgainstQuadrature) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto g1 = [](double x) { return 1.0 + 0.5 * std::cos(3.0 * x); };
  auto g2 = [](double y) { return std::sin(kPi * y) * std::sin(kPi * y); };
  const double r1 = 3.0, r2 = 2.5;
  // ‖g1(x1) g2(x2) g2(x3)‖_{r1,r2} = ‖g1‖_{r1} · ‖g2‖_{r2}²
  const double n1 = std::pow(GK::integrate([&](double x) { return std::pow(g1(x), r1); }, 0.5, 1.5, 8, 1e-14), 1 / r1);
  const double n2 = std::pow(GK::integrate([&](double y) { return std::pow(g2(y), r2); }, 0.0, 1.0, 8, 1e-14), 1 / r2);
  const Lattice L{Axis{0.5, 1.5, 201}, Axis{0, 1, 201}, Axis{0, 1, 201}};
  const GridField f = GridField::from_function(L, [&](double x1, double x2, double x3) { return g1(x1) * g2(x2) * g2(x3); });
  EXPECT_NEAR(mixed_norm(f, r1, r2), n1 * n2 * n2, 1e-4 * n1 * n2 * n2);
}

TEST(MixedNorm, TwoTwoIsPlainL2) {
  std::mt19937_64 rng(11);
  const Lattice L{Axis{0.5, 1.5, 9}, Axis{0, 1, 12}, Axis{0, 1, 10}};
  for (int t = 0; t < 10; ++t) {
    const GridField f = random_grid(L, rng);
    double s = 0;
    for (int i = 0; i < L.x1.n; ++i)
      for (int j = 0; j < L.x2.n; ++j)
        for (int k = 0; k < L.x3.n; ++k) s += L.weight(i, j, k) * std::norm(f(i, j, k));
    EXPECT_NEAR(mixed_norm(f, 2, 2), std::sqrt(s), 1e-12 * std::sqrt(s));
    EXPECT_NEAR(f.l2_norm(), std::sqrt(s), 1e-12 * std::sqrt(s));
  }
}

TEST(MixedNorm, HolderOnRandomFields) {
  std::mt19937_64 rng(7);
  const Lattice L{Axis{0.5, 1.5, 7}, Axis{0, 1, 10}, Axis{0, 1, 10}};
  const std::pair<double, double> pairs[] = {{2, 2}, {kInf, 1}, {1, kInf}};
  for (int t = 0; t < 100; ++t) {
    const GridField f = random_grid(L, rng), g = random_grid(L, rng);
    const double lhs = mixed_norm(hadamard(f, g), 1, 1);
    for (auto [a, ac] : pairs)
      for (auto [b, bc] : pairs) EXPECT_LE(lhs, mixed_norm(f, a, b) * mixed_norm(g, ac, bc) * (1 + 1e-12));
  }
}

TEST(MixedNorm, RejectsBadInput) {
  const Lattice L = slab(8, 8);
  GridField f(L, 1.0);
  EXPECT_THROW(mixed_norm(f, 0.5, 2), ValidationError);
  f(0, 3, 3) = Complex(std::nan(""), 0);
  EXPECT_THROW(mixed_norm(f, 2, 2), ValidationError);
  EXPECT_THROW(mixed_norm(GridField{}, 2, 2), ValidationError);
}
