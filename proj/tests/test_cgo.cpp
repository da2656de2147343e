#include <gtest/gtest.h>

#include <random>

#include "cgolab/cgo.hpp"
#include "cgolab/potential.hpp"

using namespace cgolab;

namespace {

const RectangleDomain kCross{1, 1, 32, 32};

Lattice cgo_lat(int n1 = 17, const RectangleDomain& d = kCross) { return cgo_lattice(make_axis(kAxialLo, kAxialHi, n1), d); }

GridField bump(double amp, const Lattice& L) {
  PotentialSpec p;
  p.amplitude = amp;
  p.radius = 0.2;
  return sample_on(p, L);
}

double phi_norm(const GridField& h0, double mu) {
  GridField p = h0;
  const Lattice& L = p.lattice();
  for (int i = 0; i < L.x1.n; ++i)
    for (std::size_t k = 0; k < L.slab_size(); ++k) p.slab(i)[k] *= std::exp(mu * L.x1.at(i));
  return p.l2_norm();
}

}  // namespace

TEST(Split, NegativeConstant) {
  const Lattice L = cgo_lat(5);
  const SplitPotential s = split_potential(GridField(L, -1.0));
  for (std::size_t p = 0; p < L.size(); ++p) {
    EXPECT_NEAR(std::abs(s.h0[p] - Complex(-1.0)), 0.0, 1e-15);
    EXPECT_EQ(s.h1[p], Complex(1.0));
  }
}

TEST(Split, ZeroHasZeroFactors) {
  const Lattice L = cgo_lat(5);
  const SplitPotential s = split_potential(GridField(L));
  EXPECT_EQ(s.h0.max_abs(), 0.0);
  EXPECT_EQ(s.h1.max_abs(), 0.0);
}

TEST(Split, RandomComplexFactorsExactly) {
  std::mt19937_64 rng(2);
  const Lattice L = cgo_lat(5);
  for (int t = 0; t < 10; ++t) {
    const GridField q = random_field(L, rng);
    const SplitPotential s = split_potential(q);
    EXPECT_LE((hadamard(s.h0, s.h1) - q).max_abs(), 1e-14 * (1 + q.max_abs()));
    for (auto z : s.h1.values()) {
      EXPECT_EQ(z.imag(), 0.0);
      EXPECT_GE(z.real(), 0.0);
    }
  }
  GridField bad(L);
  bad[3] = Complex(kInf, 0);
  EXPECT_THROW(split_potential(bad), ValidationError);
}

TEST(Contraction, ZeroFieldsGiveZero) {
  const Lattice L = cgo_lat();
  const EigenBasis B(kCross, 24);
  const Resolvent E(L, B);
  EXPECT_EQ(contraction_probe(GridField(L), GridField(L), 8.0, E).value, 0.0);
}

TEST(Contraction, DecreasesAsLambdaDoubles) {
  const GridField q = bump(1.0, cgo_lat());
  std::vector<double> v;
  for (double lam : {8.0, 16.0, 32.0, 64.0}) v.push_back(CgoContext(q, lam).contraction().value);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i], v[i - 1]) << i;
  EXPECT_GT(v.front(), 0.0);
}

TEST(Contraction, ScalesLinearlyWithAmplitude) {
  // h0 E h1 is linear in q, so doubling q doubles the operator norm
  const Lattice L = cgo_lat();
  const double a = CgoContext(bump(1.0, L), 8.0).contraction().value;
  const double b = CgoContext(bump(2.0, L), 8.0).contraction().value;
  EXPECT_NEAR(b / a, 2.0, 0.05);
}

TEST(LambdaZero, ZeroPotentialTakesFirstAdmissible) {
  const GridField q(cgo_lat());
  EXPECT_EQ(find_lambda0(q, {2, 3, 4.2, 8}), 4.2);
  CgoConfig cfg;
  cfg.t0 = 10;
  EXPECT_EQ(find_lambda0(q, {4, 8, 12, 16}, cfg), 12.0);
  // sqrt(2)·π is on the spectrum and must be skipped
  EXPECT_EQ(find_lambda0(q, {std::sqrt(2.0) * kPi, 6.0}), 6.0);
}

TEST(LambdaZero, MonotoneInAmplitude) {
  const Lattice L = cgo_lat();
  const std::vector<double> grid{8, 12, 16, 24, 32, 48, 64, 96};
  const double l1 = find_lambda0(bump(300.0, L), grid), l4 = find_lambda0(bump(1200.0, L), grid);
  EXPECT_GE(l4, l1);
  EXPECT_GT(l1, 8.0);
  EXPECT_GT(l4, l1);
}

TEST(LambdaZero, BundledBumpRegression) {
  const GridField q = bump(1.0, cgo_lattice(make_axis(kAxialLo, kAxialHi, 32), RectangleDomain{}));
  EXPECT_EQ(find_lambda0(q, {8, 16, 32, 64}), 8.0);
}

TEST(LambdaZero, ErrorsWhenGridTooShort) {
  const GridField q = bump(500.0, cgo_lat());
  EXPECT_THROW(find_lambda0(q, {8, 12}), NumericalError);
  EXPECT_THROW(find_lambda0(q, {}), ValidationError);
  EXPECT_THROW(find_lambda0(q, {12, 8}), ValidationError);
}

TEST(BuildCgo, ZeroPotentialIsPureExponential) {
  const Lattice L = cgo_lat();
  const GridField q(L);
  const std::array<double, 2> xi{0.6, 0.8};
  const CgoSolution s = build_cgo({16.0, -2.0, xi}, q);
  EXPECT_EQ(s.iterations, 0);
  EXPECT_EQ(s.v.max_abs(), 0.0);
  const double z = 18.0;
  double err = 0;
  for (int i = 0; i < L.x1.n; ++i)
    for (int j = 0; j < L.x2.n; ++j)
      for (int k = 0; k < L.x3.n; ++k) {
        const Complex want = std::exp(Complex(-z * L.x1.at(i), z * (xi[0] * L.x2.at(j) + xi[1] * L.x3.at(k))));
        err = std::max(err, std::abs(s.u(i, j, k) - want) / std::abs(want));
      }
  EXPECT_LT(err, 1e-12);
  EXPECT_TRUE(std::isfinite(s.residual));
}

TEST(BuildCgo, ZeroPotentialResidualIsSecondOrder) {
  // discrete Laplacian of an exact harmonic function: error shrinks like h²
  std::vector<double> r;
  for (int n : {17, 33, 65}) {
    const RectangleDomain d{1, 1, 2 * n, 2 * n};
    const Lattice L = cgo_lattice(make_axis(kAxialLo, kAxialHi, n), d);
    CgoConfig cfg;
    cfg.kmax = 8;
    r.push_back(build_cgo({4.5, 0.0, {1, 0}}, GridField(L), cfg).residual);
  }
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GT(r[i - 1] / r[i], 3.0) << r[i - 1] << " " << r[i];
}

TEST(BuildCgo, ResidualNearDiscretizationFloor) {
  const Lattice L = cgo_lat();
  const GridField q = bump(1.0, L);
  const double floor = CgoContext(GridField(L), 32.0).build(0.0, {1, 0}).residual_abs;
  for (double mu : {0.0, -1.0, -3.0}) {
    const CgoSolution s = CgoContext(q, 32.0).build(mu, {0.0, 1.0});
    EXPECT_LE(s.residual_abs, 10 * floor) << mu;
    EXPECT_LE(s.iterations, 64);
  }
}

TEST(BuildCgo, SolvesIntegralEquation) {
  // w = phi + h0 E(h1 w) holds at the returned iterate
  const Lattice L = cgo_lat();
  const GridField q = bump(30.0, L);
  const CgoContext ctx(q, 24.0);
  const CgoSolution s = ctx.build(-1.0, {1, 0});
  GridField phi = GridField::from_function(L, [](double x1, double x2, double) { return std::exp(Complex(-x1, 25.0 * x2)); });
  phi.mul(ctx.split().h0);
  const GridField rhs = phi + hadamard(ctx.split().h0, ctx.resolvent().apply(hadamard(ctx.split().h1, s.w), 24.0));
  EXPECT_LE((rhs - s.w).l2_norm(), 1e-9 * phi.l2_norm());
  // v = E(h1 w)
  EXPECT_LE((ctx.resolvent().apply(hadamard(ctx.split().h1, s.w), 24.0) - s.v).max_abs(), 1e-12 * (1 + s.v.max_abs()));
}

TEST(BuildCgo, NeumannConvergesGeometrically) {
  const Lattice L = cgo_lat();
  const GridField q = bump(60.0, L);
  const CgoContext ctx(q, 16.0);
  ASSERT_LE(ctx.contraction().value, 0.5);
  ASSERT_GT(ctx.contraction().value, 0.05);
  const CgoSolution s = ctx.build(0.0, {1, 0});
  ASSERT_GE(s.diff_history.size(), 3u);
  for (std::size_t i = 1; i < s.diff_history.size(); ++i) EXPECT_LE(s.diff_history[i] / s.diff_history[i - 1], 0.55) << i;
}

TEST(BuildCgo, NormBoundsOverMu) {
  const Lattice L = cgo_lat();
  const GridField q = bump(20.0, L);
  const ExponentSet e = solve_exponents(2.5);
  const CgoContext ctx(q, 24.0);
  const std::vector<double> mus{0, -1, -2, -4};
  double c0 = 0;
  for (double mu : mus) c0 = std::max(c0, phi_norm(ctx.split().h0, mu) / n_inf(mu));
  // the phi ratio is largest at mu = 0 and never exceeds it
  for (double mu : mus) EXPECT_LE(phi_norm(ctx.split().h0, mu) / n_inf(mu), phi_norm(ctx.split().h0, 0.0) / n_inf(0.0) * (1 + 1e-12));
  std::vector<double> vr;
  for (double mu : mus) {
    const CgoSolution s = ctx.build(mu, {1, 0});
    EXPECT_LE(s.w.l2_norm() / n_inf(mu), 2 * c0) << mu;
    vr.push_back(mixed_norm(s.v, e.p_tilde_prime, e.p_prime) / n_inf(mu));
  }
  for (double x : vr) EXPECT_LE(x, 2 * vr.front());
}

TEST(BuildCgo, H1GrowthBounded) {
  const Lattice L = cgo_lat();
  const GridField q = bump(1.0, L);
  std::vector<double> g;
  for (double lam : {8.0, 16.0, 32.0}) g.push_back(h1_norm(CgoContext(q, lam).build(0.0, {1, 0}).u) * std::exp(-2 * lam));
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LE(g[i], g.front());
}

TEST(BuildCgo, SampleReproducesLattice) {
  const Lattice L = cgo_lat();
  const CgoSolution s = CgoContext(bump(5.0, L), 16.0).build(-1.5, {std::sqrt(0.5), std::sqrt(0.5)});
  const GridField u = s.sample(L);
  EXPECT_LE((u - s.u).max_abs(), 1e-10 * s.u.max_abs());
  const Lattice off = cgo_lattice(Axis{0.7, 0.7, 1}, kCross);
  EXPECT_THROW(s.sample(off), ValidationError);
}

TEST(BuildCgo, RejectsBadParameters) {
  const Lattice L = cgo_lat();
  const CgoContext ctx(bump(1.0, L), 16.0);
  EXPECT_THROW(ctx.build(0.5, {1, 0}), ValidationError);
  EXPECT_THROW(ctx.build(0.0, {1, 1}), ValidationError);
  EXPECT_THROW(CgoContext(bump(1.0, L), 3.0), ValidationError);
  EXPECT_THROW(CgoContext(bump(2000.0, L), 8.0).build(0.0, {1, 0}), ValidationError);
  CgoConfig cfg;
  cfg.max_iter = 1;
  cfg.tol = 1e-15;
  EXPECT_THROW(CgoContext(bump(60.0, L), 16.0, cfg).build(0.0, {1, 0}), NumericalError);
}

TEST(RemainderDecay, ZeroPotentialIsDegenerate) {
  const GridField q(cgo_lat());
  const RemainderDecay rd = remainder_decay_probe(q, solve_exponents(2.5, 1, kInf), 1.0, {16, 24, 32});
  EXPECT_TRUE(rd.degenerate);
  EXPECT_THROW(remainder_decay_probe(q, solve_exponents(2.5), 1.0, {16, 24}), ValidationError);
}

TEST(RemainderDecay, BoundedPotentialDecays) {
  const GridField q = bump(1.0, cgo_lat());
  const RemainderDecay rd = remainder_decay_probe(q, solve_exponents(2.5, 1, kInf), 1.0, {16, 24, 32, 48});
  EXPECT_FALSE(rd.degenerate);
  EXPECT_LE(rd.slope, -0.45);
  EXPECT_TRUE(rd.split_sup_ok && rd.split_norm_ok && rd.split_tail_ok);
}

TEST(RemainderDecay, SingularPotentialDecays) {
  PotentialSpec p;
  p.kind = PotentialKind::singular_point;
  p.delta = 0.5;
  p.radius = 0.18;
  p.amplitude = 0.5;
  const GridField q = sample_on(p, cgo_lat());
  const RemainderDecay rd = remainder_decay_probe(q, solve_exponents(2.5, 1, 1.5), 10.0, {16, 24, 32, 48});
  EXPECT_LE(rd.slope, -0.45);
  EXPECT_TRUE(rd.split_sup_ok);
  EXPECT_TRUE(rd.split_norm_ok);
}

TEST(NNorm, Examples) {
  EXPECT_DOUBLE_EQ(n_norm(0.0, 1), 1.0);
  EXPECT_NEAR(n_norm(-2.0, 1), (std::exp(-1.0) - std::exp(-3.0)) / 2, 1e-15);
  EXPECT_NEAR(n_norm(-4.0, kInf), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(n_norm(-1e-9, 1), 1.0, 1e-8);
  EXPECT_THROW(n_norm(0.5, 1), ValidationError);
  EXPECT_THROW(n_norm(-1, 2), ValidationError);
}
