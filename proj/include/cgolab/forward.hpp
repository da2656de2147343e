#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SVD>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <memory>
#include <numeric>
#include <random>
#include <map>

#include "cgolab/grid.hpp"

namespace cgolab {

/// Axis-aligned box Ω with the same node count and spacing on every axis.
struct BoxOmega {
  std::array<double, 3> lo{0.8, 0.3, 0.3};
  std::array<double, 3> hi{1.2, 0.7, 0.7};
  int n = 24;
  int stencil = 27;  // 7, 19 or 27 point compact Laplacian

  double h() const { return (hi[0] - lo[0]) / double(n - 1); }
  Lattice lattice() const {
    return Lattice{Axis{lo[0], hi[0], n}, Axis{lo[1], hi[1], n}, Axis{lo[2], hi[2], n}};
  }
  /// Checks n, stencil, isotropy and strict containment in I x (0,a) x (0,b).
  void validate(double a = 1.0, double b = 1.0) const {
    require(n >= 16, "BoxOmega: need at least 16 points per axis");
    require(stencil == 7 || stencil == 19 || stencil == 27, "BoxOmega: stencil must be 7, 19 or 27");
    for (int d = 0; d < 3; ++d) require(hi[d] > lo[d], "BoxOmega: empty extent");
    const double s0 = hi[0] - lo[0];
    for (int d = 1; d < 3; ++d)
      require(std::abs((hi[d] - lo[d]) - s0) <= 1e-12 * s0, "BoxOmega: sides must be equal (isotropic spacing)");
    require(lo[0] > kAxialLo && hi[0] < kAxialHi, "BoxOmega: axial extent must lie strictly inside I");
    require(lo[1] > 0 && hi[1] < a && lo[2] > 0 && hi[2] < b, "BoxOmega: cross-section must lie strictly inside Q'");
  }
};

namespace detail {

inline std::uint32_t fnv1a32(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

inline bool on_boundary(int i, int j, int k, int n) {
  return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
}

/// Orthonormal DCT-II matrix, row k = s_k cos(pi k (p+1/2)/P).
inline Eigen::MatrixXd dct_matrix(int P) {
  Eigen::MatrixXd C(P, P);
  for (int k = 0; k < P; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / P) : std::sqrt(2.0 / P);
    for (int p = 0; p < P; ++p) C(k, p) = s * std::cos(kPi * k * (p + 0.5) / P);
  }
  return C;
}

}  // namespace detail

/// Orthonormal per-face DCT trace basis on the boundary nodes of Ω. Faces own disjoint node sets
/// (x1-faces all their nodes, x2-faces those with interior i, x3-faces those with interior i, j).
/// Basis functions are g_m = e_m/h so the boundary pairing h²Σ_b f g is the identity on coefficients.
struct TraceBasis {
  struct Face {
    int axis, side, P, R, offset;
  };
  struct ModeId {
    int face, kp, kr;
  };

  int n = 0;
  double h = 0;
  std::vector<int> boundary_nodes;  // lattice indices, face by face, (p, r) row-major
  std::vector<Face> faces;
  std::vector<ModeId> modes;        // basis order: |kappa|², then face, then indices
  std::vector<double> omega;        // (1 + |kappa|²)^{1/2}
  std::uint32_t id = 0;

  int rows() const { return int(boundary_nodes.size()); }
  int size() const { return int(modes.size()); }
  bool complete() const { return size() == rows(); }
  bool operator==(const TraceBasis& o) const { return id == o.id && n == o.n && size() == o.size(); }

  /// Boundary samples (rows in boundary_nodes order) of the listed basis functions.
  Eigen::MatrixXd columns(int first, int count) const {
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(rows(), count);
    for (int c = 0; c < count; ++c) {
      const ModeId& md = modes[std::size_t(first + c)];
      const Face& f = faces[std::size_t(md.face)];
      const Eigen::MatrixXd& Cp = dct(f.P);
      const Eigen::MatrixXd& Cr = dct(f.R);
      for (int p = 0; p < f.P; ++p)
        for (int r = 0; r < f.R; ++r) F(f.offset + p * f.R + r, c) = Cp(md.kp, p) * Cr(md.kr, r) / h;
    }
    return F;
  }

  /// Σ_b g_m(b) X(b, :) for all basis modes (M x k), by separable per-face transforms.
  Eigen::MatrixXd project(const Eigen::MatrixXd& X) const {
    require(X.rows() == rows(), "TraceBasis::project: row count mismatch");
    Eigen::MatrixXd out(size(), X.cols());
    const Eigen::Index k = X.cols();
    std::vector<Eigen::MatrixXd> coef(faces.size());
    for (Eigen::Index c = 0; c < k; ++c) {
      for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        const Face& f = faces[fi];
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0, Eigen::OuterStride<>>
            blk(X.col(c).data() + f.offset, f.P, f.R, Eigen::OuterStride<>(f.R));
        coef[fi].noalias() = dct(f.P) * blk * dct(f.R).transpose();
      }
      for (int m = 0; m < size(); ++m) {
        const ModeId& md = modes[std::size_t(m)];
        out(m, c) = coef[std::size_t(md.face)](md.kp, md.kr) / h;
      }
    }
    return out;
  }

 private:
  mutable std::map<int, Eigen::MatrixXd> dct_cache_;
  const Eigen::MatrixXd& dct(int P) const {
    auto it = dct_cache_.find(P);
    if (it == dct_cache_.end()) it = dct_cache_.emplace(P, detail::dct_matrix(P)).first;
    return it->second;
  }
};

/// Builds the trace basis with the M lowest-frequency modes (M = 0: complete basis).
inline TraceBasis make_trace_basis(const BoxOmega& dom, int M = 0) {
  const int n = dom.n;
  const double h = dom.h();
  const Lattice L = dom.lattice();
  TraceBasis tb;
  tb.n = n;
  tb.h = h;
  for (int side = 0; side < 2; ++side) tb.faces.push_back({0, side, n, n, 0});
  for (int side = 0; side < 2; ++side) tb.faces.push_back({1, side, n - 2, n, 0});
  for (int side = 0; side < 2; ++side) tb.faces.push_back({2, side, n - 2, n - 2, 0});
  for (auto& f : tb.faces) {
    f.offset = int(tb.boundary_nodes.size());
    const int fix = f.side ? n - 1 : 0;
    for (int p = 0; p < f.P; ++p)
      for (int r = 0; r < f.R; ++r) {
        int i, j, k;
        if (f.axis == 0) i = fix, j = p, k = r;
        else if (f.axis == 1) i = p + 1, j = fix, k = r;
        else i = p + 1, j = r + 1, k = fix;
        tb.boundary_nodes.push_back(int(L.index(i, j, k)));
      }
  }
  const int nb = int(tb.boundary_nodes.size());
  require(M >= 0 && M <= nb, "make_trace_basis: mode count exceeds boundary node count");
  if (M == 0) M = nb;
  struct Cand {
    double k2;
    int face, kp, kr;
  };
  std::vector<Cand> cands;
  for (int fi = 0; fi < 6; ++fi) {
    const auto& f = tb.faces[std::size_t(fi)];
    for (int kp = 0; kp < f.P; ++kp)
      for (int kr = 0; kr < f.R; ++kr) {
        const double a = kPi * kp / (f.P * h), b = kPi * kr / (f.R * h);
        cands.push_back({a * a + b * b, fi, kp, kr});
      }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.k2 != y.k2) return x.k2 < y.k2;
    if (x.face != y.face) return x.face < y.face;
    return x.kp != y.kp ? x.kp < y.kp : x.kr < y.kr;
  });
  for (int m = 0; m < M; ++m) {
    tb.modes.push_back({cands[m].face, cands[m].kp, cands[m].kr});
    tb.omega.push_back(std::sqrt(1.0 + cands[m].k2));
  }
  tb.id = detail::fnv1a32("face-dct:" + std::to_string(n) + ":" + std::to_string(M));
  return tb;
}

/// Coefficients of a boundary trace (full-lattice field; interior ignored), plus the relative
/// pairing-norm energy left outside the basis.
struct TraceCoefficients {
  Eigen::VectorXcd c;
  double outside_energy = 0;
};

inline TraceCoefficients trace_coefficients(const TraceBasis& tb, const GridField& f) {
  const int nb = tb.rows();
  Eigen::MatrixXd re(nb, 1), im(nb, 1);
  for (int b = 0; b < nb; ++b) {
    const Complex z = f[std::size_t(tb.boundary_nodes[std::size_t(b)])];
    re(b, 0) = z.real();
    im(b, 0) = z.imag();
  }
  TraceCoefficients tc;
  const double w = tb.h * tb.h;
  tc.c.resize(tb.size());
  tc.c.real() = w * tb.project(re).col(0);
  tc.c.imag() = w * tb.project(im).col(0);
  const double total = w * (re.squaredNorm() + im.squaredNorm());
  const double inside = tc.c.squaredNorm();
  tc.outside_energy = total > 0 ? std::max(0.0, total - inside) / total : 0.0;
  return tc;
}

/// Discrete Dirichlet problem (Δ_h + q)U = 0 on Ω from the energy B(U,V) = Σ_cubes stiffness - h³Σ w q U V.
class DirichletSolver {
 public:
  struct Options {
    int direct_limit = 32;      // n above this uses preconditioned BiCGSTAB
    double singular_ratio = 1e-9;
    double residual_tol = 1e-10;
    int block = 128;            // DtN columns per solve batch
  };

  DirichletSolver(const GridField& q, const BoxOmega& dom) : DirichletSolver(q, dom, Options{}) {}
  DirichletSolver(const GridField& q, const BoxOmega& dom, Options opt) : dom_(dom), q_(q), opt_(opt) {
    require(q.lattice() == dom.lattice(), "DirichletSolver: potential must be sampled on the Omega lattice");
    require(q.all_finite(), "DirichletSolver: non-finite potential");
    real_ = std::all_of(q.values().begin(), q.values().end(), [](Complex z) { return z.imag() == 0.0; });
    number_nodes();
    assemble();
    factor();
  }

  const BoxOmega& domain() const { return dom_; }
  const GridField& potential() const { return q_; }
  bool real_potential() const { return real_; }

  /// Full-lattice solution with the boundary values of f.
  GridField solve(const GridField& f) const {
    require(f.lattice() == dom_.lattice(), "solve_dirichlet: boundary data lattice mismatch");
    Eigen::MatrixXcd fb(nb_, 1);
    for (int b = 0; b < nb_; ++b) {
      fb(b, 0) = f[std::size_t(bnodes_[b])];
      require(is_finite(fb(b, 0)), "solve_dirichlet: non-finite boundary data");
    }
    const Eigen::MatrixXcd ui = solve_interior(fb);
    GridField u(dom_.lattice());
    for (int b = 0; b < nb_; ++b) u[std::size_t(bnodes_[b])] = fb(b, 0);
    for (int i = 0; i < ni_; ++i) u[std::size_t(inodes_[i])] = ui(i, 0);
    return u;
  }

  /// (B_q U) at boundary nodes, listed in lattice index order of boundary_nodes().
  Eigen::VectorXcd boundary_flux(const GridField& u) const {
    Eigen::VectorXcd ub(nb_), uI(ni_);
    for (int b = 0; b < nb_; ++b) ub[b] = u[std::size_t(bnodes_[b])];
    for (int i = 0; i < ni_; ++i) uI[i] = u[std::size_t(inodes_[i])];
    return Bbi_ * uI + Bbb_ * ub;
  }
  const std::vector<int>& boundary_nodes() const { return bnodes_; }

  /// B(U,V) including boundary rows.
  Complex energy(const GridField& u, const GridField& v) const {
    Eigen::Map<const Eigen::VectorXcd> U(u.values().data(), Eigen::Index(u.size()));
    Eigen::Map<const Eigen::VectorXcd> V(v.values().data(), Eigen::Index(v.size()));
    return V.transpose() * (Kfull_.cast<Complex>() * U - mass_.cwiseProduct(qvec_).cwiseProduct(U));
  }

  /// DtN matrix A_{m'm} = Σ_b g_m'(b) flux_b(U[g_m]) in the given basis.
  Eigen::MatrixXcd dtn_matrix(const TraceBasis& tb) const {
    require(tb.n == dom_.n && tb.rows() == nb_, "assemble_dtn: trace basis does not match Omega");
    // basis rows follow tb.boundary_nodes; the solver numbers boundary nodes in lattice order
    std::vector<int> perm(static_cast<std::size_t>(nb_));
    for (int r = 0; r < nb_; ++r) perm[std::size_t(r)] = idx_[std::size_t(tb.boundary_nodes[std::size_t(r)])];
    const int M = tb.size();
    Eigen::MatrixXcd A(M, M);
    for (int c0 = 0; c0 < M; c0 += opt_.block) {
      const int bs = std::min(opt_.block, M - c0);
      const Eigen::MatrixXd Ft = tb.columns(c0, bs);
      Eigen::MatrixXd F(nb_, bs);
      for (int r = 0; r < nb_; ++r) F.row(perm[std::size_t(r)]) = Ft.row(r);
      Eigen::MatrixXd fre(nb_, bs), fim(nb_, bs);
      try {
        if (ldlt_) {
          const RowMat rhs = -(BibR_ * F);
          const RowMat X = ldlt_solve_block(rhs);
          check_residual(AiiR_, X, rhs);
          fre = BbiR_ * X + BbbR_ * F;
          fim.setZero();
        } else {
          const Eigen::MatrixXcd X = solve_interior(F.cast<Complex>());
          const Eigen::MatrixXcd fl = Bbi_ * X + Bbb_ * F.cast<Complex>();
          fre = fl.real();
          fim = fl.imag();
        }
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (DtN columns " + std::to_string(c0) + ".." +
                             std::to_string(c0 + bs - 1) + ")");
      }
      Eigen::MatrixXd Rt(nb_, bs), It(nb_, bs);
      for (int r = 0; r < nb_; ++r) {
        Rt.row(r) = fre.row(perm[std::size_t(r)]);
        It.row(r) = fim.row(perm[std::size_t(r)]);
      }
      A.middleCols(c0, bs).real() = tb.project(Rt);
      A.middleCols(c0, bs).imag() = tb.project(It);
    }
    return A;
  }

 private:
  using SpD = Eigen::SparseMatrix<double>;
  using SpZ = Eigen::SparseMatrix<Complex>;

  void number_nodes() {
    const int n = dom_.n;
    const Lattice L = dom_.lattice();
    idx_.assign(L.size(), -1);
    isb_.assign(L.size(), 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const int p = int(L.index(i, j, k));
          if (detail::on_boundary(i, j, k, n)) {
            idx_[p] = int(bnodes_.size());
            isb_[std::size_t(p)] = 1;
            bnodes_.push_back(p);
          } else {
            idx_[p] = int(inodes_.size());
            inodes_.push_back(p);
          }
        }
    nb_ = int(bnodes_.size());
    ni_ = int(inodes_.size());
  }

  void assemble() {
    const int n = dom_.n;
    const double h = dom_.h();
    const Lattice L = dom_.lattice();
    double ce = 0, cd = 0, cb = 0;
    if (dom_.stencil == 7) ce = h / 4.0;
    else if (dom_.stencil == 19) ce = cd = h / 12.0;
    else ce = 7.0 * h / 60.0, cd = h / 20.0, cb = h / 30.0;
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(std::size_t(n - 1) * (n - 1) * (n - 1) * 28 * 4);
    for (int i = 0; i + 1 < n; ++i)
      for (int j = 0; j + 1 < n; ++j)
        for (int k = 0; k + 1 < n; ++k)
          for (int a = 0; a < 8; ++a)
            for (int b = a + 1; b < 8; ++b) {
              const int diff = __builtin_popcount(unsigned(a ^ b));
              const double c = diff == 1 ? ce : diff == 2 ? cd : cb;
              if (c == 0.0) continue;
              const int pa = int(L.index(i + (a >> 2 & 1), j + (a >> 1 & 1), k + (a & 1)));
              const int pb = int(L.index(i + (b >> 2 & 1), j + (b >> 1 & 1), k + (b & 1)));
              T.emplace_back(pa, pa, c);
              T.emplace_back(pb, pb, c);
              T.emplace_back(pa, pb, -c);
              T.emplace_back(pb, pa, -c);
            }
    Kfull_.resize(Eigen::Index(L.size()), Eigen::Index(L.size()));
    Kfull_.setFromTriplets(T.begin(), T.end());
    mass_.resize(Eigen::Index(L.size()));
    qvec_.resize(Eigen::Index(L.size()));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const auto p = L.index(i, j, k);
          mass_[Eigen::Index(p)] = L.weight(i, j, k);
          qvec_[Eigen::Index(p)] = q_[p];
        }
    // split K - M q into interior/boundary blocks
    std::vector<Eigen::Triplet<Complex>> tii, tib, tbi, tbb;
    std::vector<Eigen::Triplet<double>> tiiR;
    for (int col = 0; col < Kfull_.outerSize(); ++col)
      for (SpD::InnerIterator it(Kfull_, col); it; ++it) {
        const int r = int(it.row());
        Complex v = it.value();
        if (r == col) v -= mass_[r] * qvec_[r];
        const bool rb = is_bnode(r), cb2 = is_bnode(col);
        const int ri = idx_[r], ci = idx_[col];
        if (!rb && !cb2) {
          tii.emplace_back(ri, ci, v);
          tiiR.emplace_back(ri, ci, v.real());
        } else if (!rb && cb2) tib.emplace_back(ri, ci, v);
        else if (rb && !cb2) tbi.emplace_back(ri, ci, v);
        else tbb.emplace_back(ri, ci, v);
      }
    Aii_.resize(ni_, ni_);
    Aii_.setFromTriplets(tii.begin(), tii.end());
    if (real_) {
      AiiR_.resize(ni_, ni_);
      AiiR_.setFromTriplets(tiiR.begin(), tiiR.end());
    }
    Bib_.resize(ni_, nb_);
    Bib_.setFromTriplets(tib.begin(), tib.end());
    Bbi_.resize(nb_, ni_);
    Bbi_.setFromTriplets(tbi.begin(), tbi.end());
    Bbb_.resize(nb_, nb_);
    Bbb_.setFromTriplets(tbb.begin(), tbb.end());
    if (real_) {
      BibR_ = Bib_.real();
      BbiR_ = Bbi_.real();
      BbbR_ = Bbb_.real();
    }
  }

  bool is_bnode(int p) const { return isb_[std::size_t(p)] != 0; }

  void factor() {
    if (dom_.n > opt_.direct_limit) return;
    const std::string obstruction =
        "the discrete operator Delta_h + q is (nearly) singular on Omega: 0 is an eigenvalue obstruction";
    if (real_) {
      auto f = std::make_shared<Eigen::SimplicialLDLT<SpD>>();
      f->compute(AiiR_);
      if (f->info() != Eigen::Success) throw NumericalError(obstruction);
      const auto D = f->vectorD();
      const double mx = D.cwiseAbs().maxCoeff(), mn = D.cwiseAbs().minCoeff();
      if (!(mn > opt_.singular_ratio * mx)) throw NumericalError(obstruction);
      ldlt_ = f;
    } else {
      auto f = std::make_shared<Eigen::SparseLU<SpZ>>();
      f->analyzePattern(Aii_);
      f->factorize(Aii_);
      if (f->info() != Eigen::Success) throw NumericalError(obstruction);
      lu_ = f;
    }
  }

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// A_II⁻¹ applied to many right-hand sides at once: one sweep over the factor per block,
  /// rows of the block updated as vectors.
  RowMat ldlt_solve_block(const RowMat& B) const {
    const auto& L = ldlt_->matrixL().nestedExpression();
    const auto D = ldlt_->vectorD();
    RowMat Y = ldlt_->permutationP() * B;
    const int N = int(Y.rows());
    for (int j = 0; j < N; ++j)
      for (SpD::InnerIterator it(L, j); it; ++it)
        if (it.row() > j) Y.row(it.row()) -= it.value() * Y.row(j);
    for (int j = 0; j < N; ++j) Y.row(j) /= D[j];
    for (int j = N - 1; j >= 0; --j)
      for (SpD::InnerIterator it(L, j); it; ++it)
        if (it.row() > j) Y.row(j) -= it.value() * Y.row(it.row());
    return ldlt_->permutationPinv() * Y;
  }

  template <class Mat, class X>
  void check_residual(const Mat& A, const X& x, const X& rhs) const {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double rn = rhs.col(c).norm();
      if (rn == 0.0) continue;
      const double res = (A * x.col(c) - rhs.col(c)).norm();
      if (!(res <= opt_.residual_tol * rn))
        throw NumericalError("solve_dirichlet: residual " + std::to_string(res / rn) +
                             " above tolerance; Delta_h + q is near-singular on Omega");
    }
  }

  Eigen::MatrixXcd solve_interior(const Eigen::MatrixXcd& fb) const {
    const Eigen::MatrixXcd rhs = -(Bib_ * fb);
    Eigen::MatrixXcd x(ni_, fb.cols());
    if (ldlt_) {
      const bool cplx = rhs.imag().cwiseAbs().maxCoeff() > 0.0;
      const Eigen::Index k = rhs.cols();
      RowMat B(ni_, cplx ? 2 * k : k);
      B.leftCols(k) = rhs.real();
      if (cplx) B.rightCols(k) = rhs.imag();
      const RowMat X = ldlt_solve_block(B);
      x.real() = X.leftCols(k);
      if (cplx) x.imag() = X.rightCols(k);
      else x.imag().setZero();
    } else if (lu_) {
      x = lu_->solve(rhs);
    } else {
      Eigen::BiCGSTAB<SpZ, Eigen::DiagonalPreconditioner<Complex>> it;
      it.setTolerance(opt_.residual_tol * 1e-2);
      it.setMaxIterations(20000);
      it.compute(Aii_);
      for (Eigen::Index c = 0; c < fb.cols(); ++c) {
        x.col(c) = it.solve(rhs.col(c));
        if (it.info() != Eigen::Success) throw NumericalError("solve_dirichlet: BiCGSTAB failed to converge");
      }
    }
    check_residual(Aii_, x, rhs);
    return x;
  }

  BoxOmega dom_;
  GridField q_;
  Options opt_;
  bool real_ = true;
  std::vector<int> idx_, bnodes_, inodes_;
  std::vector<char> isb_;
  int nb_ = 0, ni_ = 0;
  SpD Kfull_;
  Eigen::VectorXd mass_;
  Eigen::VectorXcd qvec_;
  SpZ Aii_, Bib_, Bbi_, Bbb_;
  SpD AiiR_, BibR_, BbiR_, BbbR_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpD>> ldlt_;
  std::shared_ptr<Eigen::SparseLU<SpZ>> lu_;
};

inline GridField solve_dirichlet(const GridField& q, const GridField& f, const BoxOmega& dom) {
  return DirichletSolver(q, dom).solve(f);
}

struct DtNMap {
  Eigen::MatrixXcd matrix;
  std::shared_ptr<const TraceBasis> basis;
  int n = 0;
  std::uint64_t q_hash = 0;

  const std::vector<double>& omega() const { return basis->omega; }
};

inline std::uint64_t field_hash(const GridField& f) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  };
  const auto& L = f.lattice();
  const int dims[3] = {L.x1.n, L.x2.n, L.x3.n};
  mix(dims, sizeof dims);
  mix(f.values().data(), f.size() * sizeof(Complex));
  return h;
}

inline DtNMap assemble_dtn(const DirichletSolver& solver, std::shared_ptr<const TraceBasis> tb) {
  DtNMap d;
  d.matrix = solver.dtn_matrix(*tb);
  d.basis = std::move(tb);
  d.n = solver.domain().n;
  d.q_hash = field_hash(solver.potential());
  require(d.matrix.allFinite(), "assemble_dtn: non-finite entries");
  return d;
}

inline DtNMap assemble_dtn(const GridField& q, const BoxOmega& dom, int M = 0) {
  return assemble_dtn(DirichletSolver(q, dom), std::make_shared<const TraceBasis>(make_trace_basis(dom, M)));
}

/// Largest singular value of D with D_{m'm} = (A-B)_{m'm} / (ω_m' ω_m)^{1/2}.
/// Dense SVD up to dense_limit modes, block subspace iteration above.
inline double dtn_gap(const DtNMap& A, const DtNMap& B, int dense_limit = 400) {
  require(A.basis && B.basis && *A.basis == *B.basis, "dtn_gap: trace basis mismatch");
  require(A.matrix.rows() == B.matrix.rows() && A.matrix.cols() == B.matrix.cols(), "dtn_gap: shape mismatch");
  const int M = int(A.matrix.rows());
  Eigen::VectorXd s(M);
  for (int m = 0; m < M; ++m) s[m] = 1.0 / std::sqrt(A.omega()[m]);
  const Eigen::MatrixXcd D = s.asDiagonal() * (A.matrix - B.matrix) * s.asDiagonal();
  if (D.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  if (M <= dense_limit) return Eigen::BDCSVD<Eigen::MatrixXcd>(D).singularValues()[0];
  const int k = std::min(M, 8);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> N;
  Eigen::MatrixXcd X(M, k);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < M; ++r) X(r, c) = Complex(N(rng), N(rng));
  double prev = 0;
  for (int it = 0; it < 500; ++it) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(X);
    X = qr.householderQ() * Eigen::MatrixXcd::Identity(M, k);
    const Eigen::MatrixXcd Y = D * X;
    const double sig = Eigen::JacobiSVD<Eigen::MatrixXcd>(Y).singularValues()[0];
    if (it > 2 && std::abs(sig - prev) <= 1e-13 * sig) return sig;
    prev = sig;
    X = D.adjoint() * Y;
  }
  return prev;
}

/// ⟨(Σ2 - Σ1) f1, f2⟩ on trace coefficients (bilinear boundary pairing).
struct PairingResult {
  Complex value = 0;
  bool truncation_warning = false;  // a trace has > 1% energy outside the basis
};

inline PairingResult alessandrini_pair(const DtNMap& sigma2, const DtNMap& sigma1, const GridField& f1, const GridField& f2) {
  require(sigma1.basis && sigma2.basis && *sigma1.basis == *sigma2.basis, "alessandrini_pair: trace basis mismatch");
  const auto c1 = trace_coefficients(*sigma1.basis, f1);
  const auto c2 = trace_coefficients(*sigma1.basis, f2);
  PairingResult r;
  r.value = c2.c.transpose() * ((sigma2.matrix - sigma1.matrix) * c1.c);
  r.truncation_warning = c1.outside_energy > 0.01 || c2.outside_energy > 0.01;
  return r;
}

/// h³Σ w (q1 - q2) U1 U2 with the discrete solutions for the traces f1 (potential q1) and f2 (q2).
inline Complex volume_pairing(const DirichletSolver& s1, const DirichletSolver& s2, const GridField& f1, const GridField& f2) {
  const GridField U1 = s1.solve(f1), U2 = s2.solve(f2);
  const Lattice& L = U1.lattice();
  Complex sum = 0;
  for (int i = 0; i < L.x1.n; ++i)
    for (int j = 0; j < L.x2.n; ++j)
      for (int k = 0; k < L.x3.n; ++k) {
        const auto p = L.index(i, j, k);
        sum += L.weight(i, j, k) * (s1.potential()[p] - s2.potential()[p]) * U1[p] * U2[p];
      }
  return sum;
}

}  // namespace cgolab
