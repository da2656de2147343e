#pragma once

#include <memory>
#include <optional>
#include <random>

#include "cgolab/exponents.hpp"
#include "cgolab/resolvent.hpp"

namespace cgolab {

struct CgoConfig {
  double tol = 1e-10;        // Neumann stopping tolerance relative to ‖phi‖
  int max_iter = 64;
  int kmax = 0;              // 0: min(3|lam|, Nyquist limit)
  int probe_iters = 20;
  int probe_restarts = 3;
  double probe_rtol = 1e-3;  // relative change marking the power iteration as converged
  std::uint64_t seed = 0;
  double t0 = 0.0;           // class threshold; lambda0 is kept >= t0
  CutoffProfile psi{};
};

inline int auto_kmax(double lam, const RectangleDomain& d) {
  return std::max(4, std::min(int(std::ceil(3.0 * std::abs(lam))), nyquist_kmax(d)));
}

/// Lattice over an axial range times the full transverse rectangle.
inline Lattice cgo_lattice(const Axis& x1, const RectangleDomain& d) { return Lattice{x1, d.axis2(), d.axis3()}; }

struct SplitPotential {
  GridField h0;
  GridField h1;
};

/// q = h0·h1 with h1 = |q|^{1/2} and h0 = |q|^{1/2} e^{i arg q}; phase 0 where q = 0.
inline SplitPotential split_potential(const GridField& q) {
  require(q.all_finite(), "split_potential: non-finite potential");
  SplitPotential s{GridField(q.lattice()), GridField(q.lattice())};
  for (std::size_t p = 0; p < q.size(); ++p) {
    const double r = std::abs(q[p]);
    if (r == 0.0) continue;
    const double sr = std::sqrt(r);
    s.h1[p] = sr;
    s.h0[p] = q[p] / sr;
  }
  return s;
}

struct ContractionEstimate {
  double value = 0;
  bool converged = true;  // false: value is a lower bound
};

inline GridField random_field(const Lattice& lat, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  GridField g(lat);
  for (auto& z : g.values()) {
    const double re = N(rng);
    z = Complex(re, N(rng));
  }
  return g;
}

/// Random band-limited field: Gaussian coefficients on the products cos(πk(x1-lo)/len)·sin(πm x2/a)·sin(πn x3/b)
/// with all frequencies at most K. Independent of the lattice resolution.
inline GridField random_smooth_field(const Lattice& lat, double K, std::mt19937_64& rng) {
  require(K > 0, "random_smooth_field: bandwidth must be positive");
  std::normal_distribution<double> N(0.0, 1.0);
  const double a = lat.x2.hi, b = lat.x3.hi, len = lat.x1.hi - lat.x1.lo;
  require(a > 0 && b > 0 && len > 0, "random_smooth_field: degenerate lattice");
  struct Term {
    int m, n, k;
    double c;
  };
  std::vector<Term> terms;
  for (int m = 1; kPi * m / a <= K; ++m)
    for (int n = 1; kPi * std::hypot(m / a, n / b) <= K; ++n)
      for (int k = 0; kPi * k / len <= K; ++k) terms.push_back({m, n, k, N(rng)});
  require(!terms.empty(), "random_smooth_field: bandwidth below the lowest transverse mode");
  std::vector<double> c1(std::size_t(lat.x1.n)), s2(std::size_t(lat.x2.n)), s3(std::size_t(lat.x3.n));
  GridField g(lat);
  for (const auto& t : terms) {
    for (int i = 0; i < lat.x1.n; ++i) c1[std::size_t(i)] = std::cos(kPi * t.k * (lat.x1.at(i) - lat.x1.lo) / len);
    for (int j = 0; j < lat.x2.n; ++j) s2[std::size_t(j)] = std::sin(kPi * t.m * lat.x2.at(j) / a);
    for (int k = 0; k < lat.x3.n; ++k) s3[std::size_t(k)] = std::sin(kPi * t.n * lat.x3.at(k) / b);
    for (int i = 0; i < lat.x1.n; ++i)
      for (int j = 0; j < lat.x2.n; ++j)
        for (int k = 0; k < lat.x3.n; ++k) g(i, j, k) += t.c * c1[std::size_t(i)] * s2[std::size_t(j)] * s3[std::size_t(k)];
  }
  return g;
}

/// L²->L² norm of f ↦ h0·E(h1 f) by power iteration on AᴴA, max over restarts.
inline ContractionEstimate contraction_probe(const GridField& h0, const GridField& h1, double lam,
                                             const Resolvent& E, const CgoConfig& cfg = {}) {
  require(h0.lattice() == h1.lattice() && h0.lattice() == E.lattice(), "contraction_probe: lattice mismatch");
  ContractionEstimate best{0.0, true};
  if (h0.max_abs() == 0.0 || h1.max_abs() == 0.0) return best;
  GridField h0c = h0;
  for (auto& z : h0c.values()) z = std::conj(z);
  std::mt19937_64 rng(cfg.seed);
  for (int r = 0; r < cfg.probe_restarts; ++r) {
    GridField x = random_field(E.lattice(), rng);
    x *= 1.0 / x.l2_norm();
    double est = 0, prev = -1;
    for (int it = 0; it < cfg.probe_iters; ++it) {
      GridField y = hadamard(h0, E.apply(hadamard(h1, x), lam));
      prev = est;
      est = y.l2_norm();
      GridField z = hadamard(h1, E.apply_adjoint(hadamard(h0c, y), lam));
      const double nz = z.l2_norm();
      if (nz == 0.0) break;
      x = z * Complex(1.0 / nz);
    }
    const bool conv = std::abs(est - prev) <= cfg.probe_rtol * est;
    if (est > best.value) best = {est, conv};
  }
  return best;
}

/// Discrete H¹ norm over interior nodes, gradients by centered differences.
inline double h1_norm(const GridField& u) {
  const Lattice& L = u.lattice();
  const double d1 = L.x1.step(), d2 = L.x2.step(), d3 = L.x3.step();
  double s = 0;
  for (int i = 1; i + 1 < L.x1.n; ++i)
    for (int j = 1; j + 1 < L.x2.n; ++j)
      for (int k = 1; k + 1 < L.x3.n; ++k) {
        const double g1 = std::norm((u(i + 1, j, k) - u(i - 1, j, k)) / (2 * d1));
        const double g2 = std::norm((u(i, j + 1, k) - u(i, j - 1, k)) / (2 * d2));
        const double g3 = std::norm((u(i, j, k + 1) - u(i, j, k - 1)) / (2 * d3));
        s += L.weight(i, j, k) * (std::norm(u(i, j, k)) + g1 + g2 + g3);
      }
  return std::sqrt(s);
}

/// ‖(Δ_h + q)u‖₂ over interior nodes with centered second differences.
inline double equation_residual(const GridField& u, const GridField& q) {
  const Lattice& L = u.lattice();
  require(q.lattice() == L, "equation_residual: lattice mismatch");
  const double i1 = 1.0 / (L.x1.step() * L.x1.step()), i2 = 1.0 / (L.x2.step() * L.x2.step()),
               i3 = 1.0 / (L.x3.step() * L.x3.step());
  double s = 0;
  for (int i = 1; i + 1 < L.x1.n; ++i)
    for (int j = 1; j + 1 < L.x2.n; ++j)
      for (int k = 1; k + 1 < L.x3.n; ++k) {
        const Complex c = u(i, j, k);
        const Complex lap = (u(i + 1, j, k) - 2.0 * c + u(i - 1, j, k)) * i1 +
                            (u(i, j + 1, k) - 2.0 * c + u(i, j - 1, k)) * i2 +
                            (u(i, j, k + 1) - 2.0 * c + u(i, j, k - 1)) * i3;
        s += L.weight(i, j, k) * std::norm(lap + q(i, j, k) * c);
      }
  return std::sqrt(s);
}

struct CgoParams {
  double lam = 0;
  double mu = 0;
  std::array<double, 2> xi{1.0, 0.0};
  double zeta() const { return lam - mu; }
};

struct CgoSolution {
  CgoParams params;
  GridField w;
  GridField v;
  GridField u;
  ModalField v_modal;
  double residual = 0;      // ‖(Δ+q)u‖₂ / ‖u‖_{(1,2)}
  double residual_abs = 0;  // ‖(Δ+q)u‖₂
  int iterations = 0;
  double contraction_estimate = 0;
  bool contraction_converged = true;
  std::vector<double> diff_history;
  std::shared_ptr<const EigenBasis> basis;

  /// u sampled at the nodes of another lattice whose axial nodes are a subset of this solution's axial nodes.
  GridField sample(const Lattice& target) const {
    const Axis& ax = v_modal.x1;
    std::vector<int> idx(target.x1.n);
    for (int i = 0; i < target.x1.n; ++i) {
      const double x = target.x1.at(i);
      const double pos = ax.step() > 0 ? (x - ax.lo) / ax.step() : 0.0;
      const int r = int(std::lround(pos));
      require(r >= 0 && r < ax.n && std::abs(pos - r) < 1e-8, "CgoSolution::sample: axial node not on the CGO lattice");
      idx[i] = r;
    }
    std::vector<double> xs2(target.x2.n), xs3(target.x3.n);
    for (int j = 0; j < target.x2.n; ++j) xs2[j] = target.x2.at(j);
    for (int k = 0; k < target.x3.n; ++k) xs3[k] = target.x3.at(k);
    const auto& d = basis->domain();
    const Eigen::MatrixXcd S2 = EigenBasis::sine_matrix(basis->max_m(), d.a, xs2).cast<Complex>();
    const Eigen::MatrixXcd S3 = EigenBasis::sine_matrix(basis->max_n(), d.b, xs3).cast<Complex>();
    const double lam = params.lam, z = params.zeta();
    GridField out(target);
    for (int i = 0; i < target.x1.n; ++i) {
      const double x1 = target.x1.at(i);
      const Eigen::MatrixXcd V = basis->normalization() * (S2.transpose() * v_modal.coeffs[idx[i]] * S3);
      const double ev = std::exp(-lam * x1);
      for (int j = 0; j < target.x2.n; ++j)
        for (int k = 0; k < target.x3.n; ++k) {
          const double xp = xs2[j] * params.xi[0] + xs3[k] * params.xi[1];
          out(i, j, k) = std::exp(Complex(-z * x1, z * xp)) + ev * V(j, k);
        }
    }
    return out;
  }
};

/// Shared state for CGO builds at one (q, lam): eigenbasis, resolvent, potential split and the
/// contraction estimate, which does not depend on (mu, xi).
class CgoContext {
 public:
  CgoContext(const GridField& q, double lam, const CgoConfig& cfg = {}) : q_(q), lam_(lam), cfg_(cfg) {
    const Lattice& L = q.lattice();
    RectangleDomain dom{L.x2.hi, L.x3.hi, L.x2.n, L.x3.n};
    require(L.x2.lo == 0.0 && L.x3.lo == 0.0, "CGO lattice must span the full transverse rectangle");
    const int kmax = cfg.kmax > 0 ? cfg.kmax : auto_kmax(lam, dom);
    basis_ = std::make_shared<const EigenBasis>(dom, kmax);
    E_ = std::make_unique<Resolvent>(L, *basis_, cfg.psi);
    E_->check_lambda(lam);
    split_ = split_potential(q);
  }

  const GridField& potential() const { return q_; }
  double lam() const { return lam_; }
  const Resolvent& resolvent() const { return *E_; }
  const SplitPotential& split() const { return split_; }
  const std::shared_ptr<const EigenBasis>& basis() const { return basis_; }

  const ContractionEstimate& contraction() const {
    if (!probe_) probe_ = contraction_probe(split_.h0, split_.h1, lam_, *E_, cfg_);
    return *probe_;
  }

  CgoSolution build(double mu, std::array<double, 2> xi) const {
    require(mu <= 0.0 && std::isfinite(mu), "build_cgo: mu must be nonpositive");
    const double nx = std::hypot(xi[0], xi[1]);
    require(std::abs(nx - 1.0) < 1e-12, "build_cgo: xi must be a unit vector");
    const ContractionEstimate& ce = contraction();
    if (ce.value > 0.5)
      throw ValidationError("build_cgo: contraction estimate " + std::to_string(ce.value) +
                            " exceeds 1/2 at lam=" + std::to_string(lam_) + "; lam is below lambda0");
    const Lattice& L = q_.lattice();
    CgoSolution s;
    s.params = {lam_, mu, xi};
    s.contraction_estimate = ce.value;
    s.contraction_converged = ce.converged;
    s.basis = basis_;
    const double zeta = lam_ - mu;
    const GridField& h0 = split_.h0;
    const GridField& h1 = split_.h1;
    GridField phi = GridField::from_function(L, [&](double x1, double x2, double x3) {
      return std::exp(Complex(mu * x1, zeta * (x2 * xi[0] + x3 * xi[1])));
    });
    phi.mul(h0);
    const double nphi = phi.l2_norm();
    GridField w = phi;
    if (nphi > 0) {
      bool done = false;
      for (int it = 1; it <= cfg_.max_iter; ++it) {
        GridField wn = phi + hadamard(h0, E_->apply(hadamard(h1, w), lam_));
        const double diff = (wn - w).l2_norm();
        w = std::move(wn);
        s.diff_history.push_back(diff);
        s.iterations = it;
        if (diff <= cfg_.tol * nphi) {
          done = true;
          break;
        }
      }
      if (!done) throw NumericalError("build_cgo: Neumann iteration did not converge within " + std::to_string(cfg_.max_iter) + " iterations");
    }
    s.v_modal = E_->apply_modal(hadamard(h1, w), lam_);
    s.v = E_->synthesize(s.v_modal);
    s.w = std::move(w);
    s.u = GridField::from_function(L, [&](double x1, double x2, double x3) {
      return std::exp(Complex(-zeta * x1, zeta * (x2 * xi[0] + x3 * xi[1])));
    });
    for (int i = 0; i < L.x1.n; ++i) {
      const double e = std::exp(-lam_ * L.x1.at(i));
      Complex* us = s.u.slab(i);
      const Complex* vs = s.v.slab(i);
      for (std::size_t p = 0; p < L.slab_size(); ++p) us[p] += e * vs[p];
    }
    s.residual_abs = equation_residual(s.u, q_);
    const double hn = h1_norm(s.u);
    s.residual = hn > 0 ? s.residual_abs / hn : 0.0;
    return s;
  }

 private:
  GridField q_;
  double lam_;
  CgoConfig cfg_;
  std::shared_ptr<const EigenBasis> basis_;
  std::unique_ptr<Resolvent> E_;
  SplitPotential split_;
  mutable std::optional<ContractionEstimate> probe_;
};

inline CgoSolution build_cgo(const CgoParams& p, const GridField& q, const CgoConfig& cfg = {}) {
  return CgoContext(q, p.lam, cfg).build(p.mu, p.xi);
}

/// Smallest admissible grid lam (>= t0) whose contraction estimate is at most 1/2.
inline double find_lambda0(const GridField& q, const std::vector<double>& lam_grid, const CgoConfig& cfg = {}) {
  require(!lam_grid.empty(), "find_lambda0: empty grid");
  require(std::is_sorted(lam_grid.begin(), lam_grid.end()), "find_lambda0: grid must be increasing");
  const Lattice& L = q.lattice();
  const RectangleDomain dom{L.x2.hi, L.x3.hi, L.x2.n, L.x3.n};
  for (double lam : lam_grid) {
    if (lam < std::max(4.0, cfg.t0) || !in_lambda_set(lam, dom)) continue;
    if (CgoContext(q, lam, cfg).contraction().value <= 0.5) return lam;
  }
  throw NumericalError("find_lambda0: no grid value up to " + std::to_string(lam_grid.back()) +
                       " reaches contraction <= 1/2; extend the sweep");
}

/// N_j(mu) = ‖e^{mu x1}‖_{L^j(I)} for mu <= 0, j = 1 or ∞ (pass kInf).
inline double n_norm(double mu, double j) {
  require(mu <= 0.0 && std::isfinite(mu), "n_norm: mu must be nonpositive");
  require(j == 1.0 || std::isinf(j), "n_norm: j must be 1 or infinity");
  if (std::isinf(j)) return std::exp(mu * kAxialLo);
  if (mu == 0.0) return kAxialHi - kAxialLo;
  // (e^{3mu/2} - e^{mu/2})/mu, written to stay accurate for small |mu|
  return std::exp(mu * kAxialLo) * std::expm1(mu * (kAxialHi - kAxialLo)) / mu;
}
inline double n_inf(double mu) { return n_norm(mu, kInf); }

struct RemainderDecay {
  double slope = 0;
  bool degenerate = false;  // all remainders zero
  std::vector<double> lams;
  std::vector<double> v_norms;
  bool split_sup_ok = true;    // ‖h0⁰‖_∞ <= lam^{1/2}
  bool split_norm_ok = true;   // ‖h0⁰‖_{ℓ̃,ℓ} <= ‖h0‖_{ℓ̃,ℓ}
  bool split_tail_ok = true;   // ‖h0¹‖_{ℓ̃,ℓ} <= varkappa lam^{-beta}
};

/// Fits log(‖v‖₂ / N_∞(mu)) against log lam over the list.
inline RemainderDecay remainder_decay_probe(const GridField& q, const ExponentSet& ex, double varkappa,
                                            const std::vector<double>& lam_list, double mu = 0.0,
                                            std::array<double, 2> xi = {1.0, 0.0}, const CgoConfig& cfg = {}) {
  require(lam_list.size() >= 3, "remainder_decay_probe: need at least three lam values");
  RemainderDecay rd;
  const SplitPotential sp = split_potential(q);
  const double h0norm = mixed_norm(sp.h0, ex.ell_tilde, ex.ell);
  for (double lam : lam_list) {
    CgoContext ctx(q, lam, cfg);
    const CgoSolution s = ctx.build(mu, xi);
    rd.lams.push_back(lam);
    rd.v_norms.push_back(s.v.l2_norm());
    GridField lo = sp.h0, hi = sp.h0;
    const double cut = std::sqrt(std::abs(lam));
    for (std::size_t p = 0; p < lo.size(); ++p) {
      if (std::abs(sp.h0[p]) <= cut) hi[p] = 0.0;
      else lo[p] = 0.0;
    }
    rd.split_sup_ok = rd.split_sup_ok && lo.max_abs() <= cut;
    rd.split_norm_ok = rd.split_norm_ok && mixed_norm(lo, ex.ell_tilde, ex.ell) <= h0norm * (1 + 1e-12);
    rd.split_tail_ok = rd.split_tail_ok && mixed_norm(hi, ex.ell_tilde, ex.ell) <= varkappa * std::pow(std::abs(lam), -ex.beta);
  }
  if (std::all_of(rd.v_norms.begin(), rd.v_norms.end(), [](double v) { return v == 0.0; })) {
    rd.degenerate = true;
    return rd;
  }
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < rd.lams.size(); ++i) {
    require(rd.v_norms[i] > 0, "remainder_decay_probe: zero remainder at some lam");
    X.push_back(std::log(rd.lams[i]));
    Y.push_back(std::log(rd.v_norms[i] / n_inf(mu)));
  }
  rd.slope = fit_line(X, Y).slope;
  return rd;
}

}  // namespace cgolab
