#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "cgolab/grid.hpp"

namespace cgolab {

using MatrixXcdR = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Transverse rectangle Q' = (0,a) x (0,b) with its sampling lattice.
struct RectangleDomain {
  double a = 1.0;
  double b = 1.0;
  int n2 = 64;
  int n3 = 64;

  Axis axis2() const { return Axis{0.0, a, n2}; }
  Axis axis3() const { return Axis{0.0, b, n3}; }
  void validate() const {
    require(a > 0 && b > 0, "rectangle sides must be positive");
    require(n2 >= 8 && n3 >= 8, "transverse lattice needs at least 8 points per axis");
  }
};

struct Mode {
  int m = 1;
  int n = 1;
  double lambda = 0;  // eigenvalue of -Laplacian
  int band = 0;       // floor(sqrt(lambda))
};

inline double rectangle_eigenvalue(const RectangleDomain& d, int m, int n) {
  return kPi * kPi * (double(m) * m / (d.a * d.a) + double(n) * n / (d.b * d.b));
}

namespace detail {
inline int band_of(double lambda) {
  long double r = std::sqrt((long double)lambda);
  long k = (long)std::floor(r);
  // guard against sqrt rounding right at an integer
  while ((long double)(k + 1) * (k + 1) <= (long double)lambda) ++k;
  while ((long double)k * k > (long double)lambda) --k;
  return int(k);
}
}  // namespace detail

/// Largest band index whose modes all pass the Nyquist rule m <= n2/2, n <= n3/2.
inline int nyquist_kmax(const RectangleDomain& d) {
  const double lim = std::min(kPi * (d.n2 / 2 + 1) / d.a, kPi * (d.n3 / 2 + 1) / d.b);
  return int(std::ceil(lim)) - 2;
}

/// Dirichlet eigenpairs of the rectangle with band bookkeeping and separable transforms.
class EigenBasis {
 public:
  EigenBasis() = default;

  EigenBasis(const RectangleDomain& dom, int kmax) : dom_(dom), kmax_(kmax) {
    dom.validate();
    require(kmax >= 4, "build_basis: kmax must be at least 4");
    const double cut = double(kmax + 1) * double(kmax + 1);
    const int mcap = int(std::floor((kmax + 1) * dom.a / kPi)) + 1;
    const int ncap = int(std::floor((kmax + 1) * dom.b / kPi)) + 1;
    for (int m = 1; m <= mcap; ++m)
      for (int n = 1; n <= ncap; ++n) {
        const double lam = rectangle_eigenvalue(dom, m, n);
        if (lam >= cut) continue;
        if (m > dom.n2 / 2 || n > dom.n3 / 2)
          throw ValidationError("build_basis: kmax=" + std::to_string(kmax) + " needs mode (" +
                                std::to_string(m) + "," + std::to_string(n) +
                                ") which the transverse lattice does not resolve");
        modes_.push_back({m, n, lam, detail::band_of(lam)});
        M2_ = std::max(M2_, m);
        M3_ = std::max(M3_, n);
      }
    std::sort(modes_.begin(), modes_.end(), [](const Mode& x, const Mode& y) {
      if (x.lambda != y.lambda) return x.lambda < y.lambda;
      return x.m != y.m ? x.m < y.m : x.n < y.n;
    });
    mask_ = Eigen::MatrixXd::Zero(M2_, M3_);
    band_of_mn_ = Eigen::MatrixXi::Constant(M2_, M3_, -1);
    for (const auto& md : modes_) {
      mask_(md.m - 1, md.n - 1) = 1.0;
      band_of_mn_(md.m - 1, md.n - 1) = md.band;
    }
    const Axis ax2 = dom.axis2(), ax3 = dom.axis3();
    S2_ = sine_matrix(M2_, dom.a, ax2);
    S3_ = sine_matrix(M3_, dom.b, ax3);
    S2w_ = S2_;
    S3w_ = S3_;
    for (int j = 0; j < ax2.n; ++j) S2w_.col(j) *= ax2.weight(j);
    for (int k = 0; k < ax3.n; ++k) S3w_.col(k) *= ax3.weight(k);
    norm_ = 2.0 / std::sqrt(dom.a * dom.b);
  }

  const RectangleDomain& domain() const { return dom_; }
  int kmax() const { return kmax_; }
  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  int max_m() const { return M2_; }
  int max_n() const { return M3_; }
  double normalization() const { return norm_; }
  /// 1 where (m,n) is retained, indexed (m-1, n-1).
  const Eigen::MatrixXd& mask() const { return mask_; }
  int band(int m, int n) const { return band_of_mn_(m - 1, n - 1); }

  /// Slab coefficients (u|phi_mn) by trapezoid quadrature, as an M2 x M3 matrix; unretained entries zero.
  MatrixXcdR project(const Complex* slab) const {
    Eigen::Map<const MatrixXcdR> U(slab, dom_.n2, dom_.n3);
    MatrixXcdR C = norm_ * (S2w_.cast<Complex>() * U * S3w_.transpose().cast<Complex>());
    return C.cwiseProduct(mask_.cast<Complex>());
  }
  std::vector<Complex> project_vec(const std::vector<Complex>& slab) const {
    require(slab.size() == std::size_t(dom_.n2) * dom_.n3, "project: slab shape mismatch");
    const MatrixXcdR C = project(slab.data());
    std::vector<Complex> out(modes_.size());
    for (std::size_t j = 0; j < modes_.size(); ++j) out[j] = C(modes_[j].m - 1, modes_[j].n - 1);
    return out;
  }

  /// Inverse of project on the retained span, sampled on the basis lattice.
  void synthesize(const MatrixXcdR& C, Complex* slab) const {
    Eigen::Map<MatrixXcdR> U(slab, dom_.n2, dom_.n3);
    U.noalias() = norm_ * (S2_.transpose().cast<Complex>() * C * S3_.cast<Complex>());
  }
  std::vector<Complex> synthesize(const MatrixXcdR& C) const {
    std::vector<Complex> out(std::size_t(dom_.n2) * dom_.n3);
    synthesize(C, out.data());
    return out;
  }

  /// Sine table sin(m pi x/side) for m = 1..M at arbitrary points; used for off-lattice evaluation.
  static Eigen::MatrixXd sine_matrix(int M, double side, const std::vector<double>& xs) {
    Eigen::MatrixXd S(M, Eigen::Index(xs.size()));
    for (int m = 1; m <= M; ++m)
      for (std::size_t j = 0; j < xs.size(); ++j) S(m - 1, Eigen::Index(j)) = std::sin(m * kPi * xs[j] / side);
    return S;
  }
  static Eigen::MatrixXd sine_matrix(int M, double side, const Axis& ax) {
    std::vector<double> xs(ax.n);
    for (int j = 0; j < ax.n; ++j) xs[j] = ax.at(j);
    Eigen::MatrixXd S = sine_matrix(M, side, xs);
    // exact zeros at the Dirichlet ends
    S.col(0).setZero();
    if (std::abs(ax.hi - side) < 1e-14 * side) S.col(ax.n - 1).setZero();
    return S;
  }

  /// phi_j sampled on the basis lattice.
  std::vector<Complex> phi(std::size_t j) const {
    require(j < modes_.size(), "phi: mode index out of range");
    std::vector<Complex> out(std::size_t(dom_.n2) * dom_.n3);
    const int m = modes_[j].m - 1, n = modes_[j].n - 1;
    for (int p = 0; p < dom_.n2; ++p)
      for (int q = 0; q < dom_.n3; ++q) out[std::size_t(p) * dom_.n3 + q] = norm_ * S2_(m, p) * S3_(n, q);
    return out;
  }

  /// Orthogonal projection of a slab onto band k (zero for an empty band).
  std::vector<Complex> band_project(const std::vector<Complex>& u, int k) const {
    require(u.size() == std::size_t(dom_.n2) * dom_.n3, "band_project: slab shape mismatch");
    MatrixXcdR C = project(u.data());
    bool any = false;
    for (int m = 0; m < M2_; ++m)
      for (int n = 0; n < M3_; ++n) {
        if (band_of_mn_(m, n) != k) C(m, n) = 0.0;
        else any = true;
      }
    if (!any) return std::vector<Complex>(u.size(), 0.0);
    return synthesize(C);
  }

  /// Number of retained modes per band, index k = 0..kmax.
  std::vector<int> band_counts() const {
    std::vector<int> cnt(kmax_ + 1, 0);
    for (const auto& md : modes_) ++cnt[md.band];
    return cnt;
  }

 private:
  RectangleDomain dom_;
  int kmax_ = 0;
  std::vector<Mode> modes_;
  int M2_ = 0, M3_ = 0;
  Eigen::MatrixXd mask_;
  Eigen::MatrixXi band_of_mn_;
  Eigen::MatrixXd S2_, S3_, S2w_, S3w_;
  double norm_ = 1.0;
};

inline EigenBasis build_basis(const RectangleDomain& dom, int kmax) { return EigenBasis(dom, kmax); }

/// Distance from x to the full Dirichlet spectrum of the rectangle (not only the retained modes).
inline double spectrum_distance(const RectangleDomain& d, double x) {
  double best = kInf;
  const int mcap = int(std::sqrt(std::max(x, 0.0)) * d.a / kPi) + 2;
  for (int m = 1; m <= mcap; ++m) {
    // nearest n for this m from the continuous solution
    const double rest = (x / (kPi * kPi) - double(m) * m / (d.a * d.a)) * d.b * d.b;
    const int n0 = rest > 0 ? int(std::sqrt(rest)) : 1;
    for (int n = std::max(1, n0 - 1); n <= n0 + 2; ++n) best = std::min(best, std::abs(x - rectangle_eigenvalue(d, m, n)));
  }
  return best;
}

/// lam is admissible when |lam| >= 4 and lam^2 keeps distance > gap from the spectrum.
/// gap <= 0 selects the default 1e-3*|lam|.
inline bool in_lambda_set(double lam, const RectangleDomain& d, double gap = 0.0) {
  if (!std::isfinite(lam) || std::abs(lam) < 4.0) return false;
  if (gap <= 0.0) gap = 1e-3 * std::abs(lam);
  return spectrum_distance(d, lam * lam) > gap;
}
inline bool in_lambda_set(double lam, const EigenBasis& basis, double gap = 0.0) {
  return in_lambda_set(lam, basis.domain(), gap);
}

}  // namespace cgolab
