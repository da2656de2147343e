#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>
#include <numeric>
#include <set>

#include "cgolab/exponents.hpp"
#include "cgolab/spectral_basis.hpp"

using namespace cgolab;

namespace {

std::vector<Complex> random_slab(const RectangleDomain& d, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  std::vector<Complex> u(std::size_t(d.n2) * d.n3);
  for (int j = 0; j < d.n2; ++j)
    for (int k = 0; k < d.n3; ++k)
      if (j > 0 && k > 0 && j + 1 < d.n2 && k + 1 < d.n3) u[std::size_t(j) * d.n3 + k] = Complex(N(rng), N(rng));
  return u;
}

double slab_lr(const RectangleDomain& d, const std::vector<Complex>& u, double r) {
  const Axis a2 = d.axis2(), a3 = d.axis3();
  double s = 0;
  for (int j = 0; j < d.n2; ++j)
    for (int k = 0; k < d.n3; ++k) {
      const double v = std::abs(u[std::size_t(j) * d.n3 + k]);
      s = std::isinf(r) ? std::max(s, v) : s + a2.weight(j) * a3.weight(k) * std::pow(v, r);
    }
  return std::isinf(r) ? s : std::pow(s, 1 / r);
}

double slab_dot_re(const RectangleDomain& d, const std::vector<Complex>& u, const std::vector<Complex>& v) {
  const Axis a2 = d.axis2(), a3 = d.axis3();
  Complex s = 0;
  for (int j = 0; j < d.n2; ++j)
    for (int k = 0; k < d.n3; ++k) s += a2.weight(j) * a3.weight(k) * u[std::size_t(j) * d.n3 + k] * std::conj(v[std::size_t(j) * d.n3 + k]);
  return s.real();
}

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(EigenBasis, LowestEigenvalueMatchesFiniteDifferences) {
  const RectangleDomain d;  // 64² unit square
  const EigenBasis B(d, 16);
  // 1-D Dirichlet second-difference matrix; the 2-D spectrum is the sum of two 1-D spectra
  const int n = d.n2 - 2;
  const double h = 1.0 / (d.n2 - 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    T(i, i) = 2 / (h * h);
    if (i + 1 < n) T(i, i + 1) = T(i + 1, i) = -1 / (h * h);
  }
  const double fd = 2 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T).eigenvalues()(0);
  ASSERT_FALSE(B.modes().empty());
  EXPECT_NEAR(B.modes()[0].lambda, 2 * kPi * kPi, 1e-12);
  EXPECT_NEAR(B.modes()[0].lambda, fd, 1e-3 * fd);
}

TEST(EigenBasis, DegeneratePairRetained) {
  const EigenBasis B(RectangleDomain{}, 16);
  std::set<std::pair<int, int>> hit;
  for (const auto& m : B.modes())
    if (std::abs(m.lambda - 5 * kPi * kPi) < 1e-9) hit.insert({m.m, m.n});
  EXPECT_EQ(hit, (std::set<std::pair<int, int>>{{1, 2}, {2, 1}}));
}

TEST(EigenBasis, OrderingBandsAndCutoff) {
  const RectangleDomain d{1.0, 0.7, 64, 48};
  const EigenBasis B(d, 20);
  double prev = 0;
  for (const auto& m : B.modes()) {
    EXPECT_GE(m.lambda, prev);
    prev = m.lambda;
    EXPECT_NEAR(m.lambda, kPi * kPi * (m.m * m.m / (d.a * d.a) + m.n * m.n / (d.b * d.b)), 1e-9);
    EXPECT_LE(m.band * m.band, m.lambda);
    EXPECT_LT(m.lambda, (m.band + 1.0) * (m.band + 1.0));
    EXPECT_LT(std::sqrt(m.lambda), 21.0);
  }
  // every mode below the cutoff is present
  int expect = 0;
  for (int m = 1; m < 40; ++m)
    for (int n = 1; n < 40; ++n)
      if (rectangle_eigenvalue(d, m, n) < 21.0 * 21.0) ++expect;
  EXPECT_EQ(int(B.size()), expect);
  const auto cnt = B.band_counts();
  EXPECT_EQ(std::accumulate(cnt.begin(), cnt.end(), 0), expect);
}

TEST(EigenBasis, Normalization) {
  const RectangleDomain d;
  const EigenBasis B(d, 16);
  for (std::size_t j = 0; j < B.size(); ++j) {
    const auto p = B.phi(j);
    EXPECT_NEAR(slab_dot_re(d, p, p), 1.0, 1e-10) << j;
    if (j + 1 < B.size()) EXPECT_NEAR(slab_dot_re(d, p, B.phi(j + 1)), 0.0, 1e-10);
  }
}

TEST(EigenBasis, RejectsUnresolvedAndSmallKmax) {
  EXPECT_THROW(EigenBasis(RectangleDomain{1, 1, 8, 8}, 20), ValidationError);
  EXPECT_THROW(EigenBasis(RectangleDomain{}, 3), ValidationError);
  EXPECT_THROW(EigenBasis(RectangleDomain{1, 1, 4, 64}, 8), ValidationError);
  EXPECT_NO_THROW(EigenBasis(RectangleDomain{}, nyquist_kmax(RectangleDomain{})));
}

TEST(BandProject, FixesOwnRangeAndKillsOthers) {
  const RectangleDomain d;
  const EigenBasis B(d, 16);
  for (std::size_t j = 0; j < B.size(); j += 7) {
    const auto p = B.phi(j);
    const int k = B.modes()[j].band;
    EXPECT_LT(max_diff(B.band_project(p, k), p), 1e-10);
    const auto other = B.band_project(p, k + 1);
    EXPECT_LT(max_diff(other, std::vector<Complex>(p.size(), 0.0)), 1e-10);
  }
}

TEST(BandProject, IdempotentAndEmptyBands) {
  const RectangleDomain d;
  const EigenBasis B(d, 16);
  std::mt19937_64 rng(3);
  const auto cnt = B.band_counts();
  for (int t = 0; t < 5; ++t) {
    const auto u = random_slab(d, rng);
    for (int k = 0; k <= 16; ++k) {
      const auto p = B.band_project(u, k);
      EXPECT_LT(max_diff(B.band_project(p, k), p), 1e-10);
      if (cnt[std::size_t(k)] == 0) EXPECT_EQ(slab_lr(d, p, kInf), 0.0);
    }
  }
  EXPECT_EQ(cnt[0] + cnt[1] + cnt[2] + cnt[3], 0);  // 2π² > 16
  EXPECT_THROW(B.band_project(std::vector<Complex>(10), 5), ValidationError);
}

TEST(BandProject, ParsevalOnRetainedSpan) {
  const RectangleDomain d;
  const EigenBasis B(d, 16);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N;
  for (int t = 0; t < 10; ++t) {
    MatrixXcdR C = MatrixXcdR::Zero(B.max_m(), B.max_n());
    for (const auto& m : B.modes()) C(m.m - 1, m.n - 1) = Complex(N(rng), N(rng));
    const auto u = B.synthesize(C);
    double sum = 0;
    for (int k = 0; k <= 16; ++k) {
      const auto p = B.band_project(u, k);
      sum += slab_dot_re(d, p, p);
    }
    const double nu = slab_dot_re(d, u, u);
    EXPECT_NEAR(sum, nu, 1e-8 * nu);
  }
}

TEST(EigenBasis, GradientNormIsRootEigenvalue) {
  const RectangleDomain d{1, 1, 257, 257};
  const EigenBasis B(d, 12);
  const double h = 1.0 / 256;
  const Axis ax = d.axis2();
  for (std::size_t j = 0; j < B.size(); ++j) {
    if (B.modes()[j].m > 3 || B.modes()[j].n > 3) continue;
    const auto p = B.phi(j);
    auto at = [&](int a, int b) { return p[std::size_t(a) * d.n3 + b].real(); };
    double g = 0;
    for (int a = 0; a + 1 < d.n2; ++a)
      for (int b = 0; b < d.n3; ++b) {
        const double dx = (at(a + 1, b) - at(a, b)) / h, dy = (at(b, a + 1) - at(b, a)) / h;
        g += h * ax.weight(b) * (dx * dx + dy * dy);
      }
    EXPECT_NEAR(std::sqrt(g), std::sqrt(B.modes()[j].lambda), 1e-3 * std::sqrt(B.modes()[j].lambda)) << j;
  }
}

TEST(LambdaSet, Examples) {
  const RectangleDomain d;
  EXPECT_FALSE(in_lambda_set(2.0, d));
  EXPECT_FALSE(in_lambda_set(-3.9, d));
  EXPECT_FALSE(in_lambda_set(std::sqrt(2) * kPi, d));
  EXPECT_FALSE(in_lambda_set(-std::sqrt(5) * kPi, d));
  // 4.5² = 20.25, nearest eigenvalue π²(1+1) ≈ 19.74
  double best = kInf;
  for (int m = 1; m < 5; ++m)
    for (int n = 1; n < 5; ++n) best = std::min(best, std::abs(20.25 - kPi * kPi * (m * m + n * n)));
  EXPECT_EQ(in_lambda_set(4.5, d, 1e-3), best > 1e-3);
  EXPECT_TRUE(in_lambda_set(4.5, d, 1e-3));
  EXPECT_FALSE(in_lambda_set(4.5, d, 0.6));
  EXPECT_FALSE(in_lambda_set(kInf, d));
}

TEST(LambdaSet, SpectrumDistanceMatchesEnumeration) {
  const RectangleDomain d{1.0, 0.6, 64, 64};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(16, 4000);
  for (int t = 0; t < 200; ++t) {
    const double x = U(rng);
    double best = kInf;
    for (int m = 1; m < 40; ++m)
      for (int n = 1; n < 40; ++n) best = std::min(best, std::abs(x - rectangle_eigenvalue(d, m, n)));
    EXPECT_NEAR(spectrum_distance(d, x), best, 1e-9 * x);
  }
}

namespace {

/// max over random u of ‖χ_k u‖_r / ((k+1)^e ‖u‖₂), per band.
std::vector<double> band_ratios(const EigenBasis& B, double r, double e, int samples) {
  const RectangleDomain& d = B.domain();
  std::mt19937_64 rng(21);
  std::vector<double> out(std::size_t(B.kmax() + 1), 0.0);
  for (int t = 0; t < samples; ++t) {
    const auto u = random_slab(d, rng);
    const double nu = std::sqrt(slab_dot_re(d, u, u));
    for (int k = 0; k <= B.kmax(); ++k) {
      const auto p = B.band_project(u, k);
      out[std::size_t(k)] = std::max(out[std::size_t(k)], slab_lr(d, p, r) / (std::pow(k + 1.0, e) * nu));
    }
  }
  return out;
}

void expect_uniform(const std::vector<double>& ratio, const EigenBasis& B) {
  const auto cnt = B.band_counts();
  std::vector<double> nz;
  for (std::size_t k = 0; k < ratio.size(); ++k)
    if (cnt[k] > 0) nz.push_back(ratio[k]);
  ASSERT_GE(nz.size(), 6u);
  const double head = *std::max_element(nz.begin(), nz.begin() + 3);
  const double all = *std::max_element(nz.begin(), nz.end());
  // no growth with k beyond a modest factor of the first nonempty bands
  EXPECT_LE(all, 2.0 * head);
}

}  // namespace

TEST(BandEstimates, HigherLebesgueNormGrowsAtMostLinearly) {
  const EigenBasis B(RectangleDomain{1, 1, 48, 48}, 24);
  const ExponentSet e = solve_exponents(2.5);
  expect_uniform(band_ratios(B, e.r, 1.0, 100), B);
}

TEST(BandEstimates, InterpolatedNormGrowsLikeThetaPower) {
  const EigenBasis B(RectangleDomain{1, 1, 48, 48}, 24);
  const ExponentSet e = solve_exponents(2.5);
  expect_uniform(band_ratios(B, e.p_prime, e.theta, 100), B);
}
