#pragma once

// The acceptance checks, shared by the acceptance binary and `cgolab selftest`.

#include <chrono>
#include <functional>
#include <sstream>

#include "cgolab/cgo.hpp"
#include "cgolab/exponents.hpp"
#include "cgolab/forward.hpp"
#include "cgolab/kernel_quadrature.hpp"
#include "cgolab/potential.hpp"
#include "cgolab/recovery.hpp"
#include "cgolab/resolvent.hpp"

namespace cgolab {

/// The bump shipped as configs/bump.pot: amplitude 1, Gaussian width 0.2, cut off at radius 0.2.
inline PotentialSpec bundled_bump() {
  PotentialSpec p;
  p.kind = PotentialKind::gaussian_bump;
  p.amplitude = 1.0;
  p.width = 0.2;
  p.radius = 0.2;
  return p;
}

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0;

  static CriterionResult make(int id, std::string name) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    return r;
  }

  std::string line() const {
    std::ostringstream os;
    os << (skipped ? "SKIP" : pass ? "PASS" : "FAIL") << " [" << (id < 10 ? " " : "") << id << "] " << name << ": " << detail;
    os.precision(3);
    os << " (" << std::fixed << seconds << " s)";
    return os.str();
  }
};

namespace accept {

inline std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

inline CriterionResult kernel_correctness() {
  CriterionResult r = CriterionResult::make(1, "kernel vs quadrature");
  const auto t0 = std::chrono::steady_clock::now();
  KernelQuadrature Q;
  double worst = 0;
  int count = 0;
  for (int lam = 4; lam <= 20; ++lam)
    for (int mu = 0; mu <= 25; ++mu) {
      if (mu == lam) continue;  // double pole on the real axis: the integral diverges
      for (int it = 0; it <= 40; ++it) {
        const double t = it == 20 ? 0.0 : -2.0 + 0.1 * it;
        const double c = kernel_h(lam, mu, t).value, o = Q(lam, mu, t);
        worst = std::max(worst, std::abs(c - o) / std::max({std::abs(c), std::abs(o), 1e-6}));
        ++count;
      }
    }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = worst <= 1e-6 && r.seconds < 60;
  r.detail = "worst rel err " + num(worst) + " over " + std::to_string(count) + " points";
  return r;
}

inline CriterionResult kernel_majorant() {
  CriterionResult r = CriterionResult::make(2, "kernel majorant");
  double best = 0;
  int bad = 0;
  for (int lam = 4; lam <= 20; ++lam)
    for (int k = 1; k <= 25; ++k)
      for (int it = 0; it <= 40; ++it) {
        const double t = -2.0 + 0.1 * it;
        if (k == lam) continue;
        const double ratio = std::abs(kernel_h(lam, k, t).value) / (2 * kPi * kernel_band_bound(lam, k, t));
        best = std::max(best, ratio);
        if (!(ratio <= 1.0)) ++bad;
      }
  r.pass = bad == 0;
  r.detail = "measured constant " + num(best) + ", violations " + std::to_string(bad);
  return r;
}

namespace detail {
inline double b0(double z) { return std::abs(z) >= 1 ? 0 : std::pow(1 - z * z, 6); }
inline double b1(double z) { return std::abs(z) >= 1 ? 0 : -12 * z * std::pow(1 - z * z, 5); }
inline double b2(double z) { return std::abs(z) >= 1 ? 0 : -12 * std::pow(1 - z * z, 5) + 120 * z * z * std::pow(1 - z * z, 4); }
}  // namespace detail

/// E applied to f = e^{lam x1}(-Δ)(e^{-lam x1} g) must return g on I; g a smooth bump.
inline std::vector<double> resolvent_identity_errors(double lam, int nt, int kmax, const std::vector<int>& n1s) {
  using namespace detail;
  const RectangleDomain d{1, 1, nt, nt};
  const EigenBasis B(d, kmax);
  const double w1 = 0.4, w = 0.35, c1 = 1.0;
  std::vector<double> errs;
  for (int n1 : n1s) {
    const Lattice L{Axis{kAxialTildeLo, kAxialTildeHi, n1}, d.axis2(), d.axis3()};
    const GridField f = GridField::from_function(L, [&](double x, double y, double z) {
      const double X = (x - c1) / w1, Y = (y - .5) / w, Z = (z - .5) / w;
      const double g = b0(X) * b0(Y) * b0(Z), g1 = b1(X) / w1 * b0(Y) * b0(Z), g11 = b2(X) / (w1 * w1) * b0(Y) * b0(Z);
      const double lap = b0(X) * (b2(Y) * b0(Z) + b0(Y) * b2(Z)) / (w * w);
      return Complex(-g11 + 2 * lam * g1 - lam * lam * g - lap);
    });
    const GridField g = GridField::from_function(L, [&](double x, double y, double z) {
      return Complex(b0((x - c1) / w1) * b0((y - .5) / w) * b0((z - .5) / w));
    });
    const GridField E = apply_E(f, lam, B);
    double num = 0, den = 0;
    for (int i = 0; i < n1; ++i) {
      const double x = L.x1.at(i);
      if (x < kAxialLo - 1e-12 || x > kAxialHi + 1e-12) continue;
      for (int j = 0; j < nt; ++j)
        for (int k = 0; k < nt; ++k) {
          num += std::norm(E(i, j, k) - g(i, j, k));
          den += std::norm(g(i, j, k));
        }
    }
    errs.push_back(std::sqrt(num / den));
  }
  return errs;
}

inline CriterionResult resolvent_identity() {
  CriterionResult r = CriterionResult::make(3, "resolvent identity O(h^2)");
  const std::vector<int> n1s{32, 64, 128};
  const auto e = resolvent_identity_errors(8.0, 64, 96, n1s);
  // err(h/2)/err(h) normalized by the O(h²) factor; 1 means exact second order
  double worst = 0;
  std::string s = "errors";
  for (double v : e) s += " " + num(v, 3);
  s += "; normalized ratios";
  for (std::size_t i = 1; i < e.size(); ++i) {
    const double h0 = 2.0 / (n1s[i - 1] - 1), h1 = 2.0 / (n1s[i] - 1);
    const double ratio = (e[i] / e[i - 1]) / ((h1 / h0) * (h1 / h0));
    worst = std::max(worst, ratio);
    s += " " + num(ratio);
  }
  r.pass = worst <= 1.2;
  r.detail = s;
  return r;
}

inline CriterionResult estimate_scaling(std::uint64_t seed) {
  CriterionResult r = CriterionResult::make(4, "resolvent estimate scaling");
  const RectangleDomain d{1, 1, 32, 32};
  const Lattice L = cgo_lattice(Axis{kAxialTildeLo, kAxialTildeHi, 64}, d);
  std::mt19937_64 rng(seed);
  std::vector<GridField> fs;
  for (int i = 0; i < 20; ++i) fs.push_back(random_smooth_field(L, 16.0, rng));
  const std::vector<double> lams{8, 16, 32, 64};
  std::vector<std::vector<double>> Y(fs.size());
  for (double lam : lams) {
    const EigenBasis B(d, auto_kmax(lam, d));
    const Resolvent E(L, B);
    for (std::size_t i = 0; i < fs.size(); ++i) Y[i].push_back(std::log(E.apply(fs[i], lam).l2_norm() / fs[i].l2_norm()));
  }
  std::vector<double> X;
  for (double l : lams) X.push_back(std::log(l));
  double worst = -kInf, best = kInf;
  for (const auto& y : Y) {
    const double s = fit_line(X, y).slope;
    worst = std::max(worst, s);
    best = std::min(best, s);
  }
  r.pass = worst <= -0.9;
  r.detail = "slopes over 20 fields in [" + num(best) + ", " + num(worst) + "]";
  return r;
}

inline GridField bump_on_cgo_lattice(int n) {
  const RectangleDomain d{1, 1, n, n};
  return sample_on(bundled_bump(), cgo_lattice(make_axis(kAxialLo, kAxialHi, n), d));
}

inline CriterionResult contraction_threshold() {
  CriterionResult r = CriterionResult::make(5, "contraction threshold");
  const GridField q = bump_on_cgo_lattice(32);
  const std::vector<double> lams{8, 16, 32, 64};
  double lam0 = kInf;
  try {
    lam0 = find_lambda0(q, lams);
  } catch (const NumericalError&) {
  }
  std::vector<double> v;
  for (double lam : lams) v.push_back(CgoContext(q, lam).contraction().value);
  bool mono = true;
  for (std::size_t i = 1; i < v.size(); ++i) mono = mono && v[i] < v[i - 1];
  r.pass = std::isfinite(lam0) && mono;
  r.detail = "lambda0 " + num(lam0) + ", contraction";
  for (double x : v) r.detail += " " + num(x, 3);
  return r;
}

inline CriterionResult cgo_residual() {
  CriterionResult r = CriterionResult::make(6, "CGO residual vs floor");
  const GridField q = bump_on_cgo_lattice(32);
  const GridField z(q.lattice());
  const double res = CgoContext(q, 32.0).build(0.0, {1, 0}).residual_abs;
  const double floor = CgoContext(z, 32.0).build(0.0, {1, 0}).residual_abs;
  r.pass = res <= 10 * floor;
  r.detail = "residual " + num(res) + ", floor " + num(floor) + ", ratio " + num(res / floor);
  return r;
}

inline CriterionResult remainder_decay() {
  CriterionResult r = CriterionResult::make(7, "remainder decay");
  const GridField q = bump_on_cgo_lattice(32);
  const ExponentSet ex = solve_exponents(2.5, 1.0, kInf);
  const RemainderDecay rd = remainder_decay_probe(q, ex, 1.0, {16, 24, 32, 48});
  // the bound -0.9γ with 15% slack
  const double bound = -0.9 * ex.gamma * (1 - 0.15);
  r.pass = !rd.degenerate && rd.slope <= bound;
  r.detail = "slope " + num(rd.slope) + " (bound " + num(bound) + ")";
  return r;
}

inline CriterionResult alessandrini_closure(std::uint64_t seed) {
  CriterionResult r = CriterionResult::make(8, "pairing identity closure");
  const auto t0 = std::chrono::steady_clock::now();
  BoxOmega dom;
  const Lattice L = dom.lattice();
  const GridField q0(L);
  const GridField q1 = GridField::from_function(L, [](double x, double y, double z) {
    const double r2 = (x - 1) * (x - 1) + (y - .5) * (y - .5) + (z - .5) * (z - .5);
    return Complex(0.5 * std::exp(-r2 / 0.01));
  });
  const DirichletSolver S0(q0, dom), S1(q1, dom);
  auto tb = std::make_shared<const TraceBasis>(make_trace_basis(dom));
  const DtNMap A0 = assemble_dtn(S0, tb), A1 = assemble_dtn(S1, tb);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  GridField f1(L), f2(L);
  for (auto& z : f1.values()) z = N(rng);
  for (auto& z : f2.values()) {
    const double re = N(rng);
    z = Complex(re, N(rng));
  }
  const Complex P = alessandrini_pair(A0, A1, f1, f2).value;
  const Complex V = volume_pairing(S1, S0, f1, f2);
  const double rel = std::abs(P - V) / std::abs(V);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = rel <= 1e-3 && r.seconds < 300;
  r.detail = "relative mismatch " + num(rel) + " at " + std::to_string(dom.n) + "^3, M=" + std::to_string(tb->size());
  return r;
}

/// q̂(η) by a fine trapezoid rule over the support square; independent of the slab transforms.
inline Complex tensor_bump_transform(double amp, double wid, std::array<double, 2> c, std::array<double, 2> eta, int n = 801) {
  Complex s = 0;
  const double h = 2 * wid / (n - 1);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double x2 = c[0] - wid + a * h, x3 = c[1] - wid + b * h;
      const double w = (a == 0 || a == n - 1 ? 0.5 : 1) * (b == 0 || b == n - 1 ? 0.5 : 1) * h * h;
      s += w * amp * detail::b0((x2 - c[0]) / wid) * detail::b0((x3 - c[1]) / wid) * std::exp(Complex(0, -(eta[0] * x2 + eta[1] * x3)));
    }
  return s;
}

inline CriterionResult fourier_recovery() {
  CriterionResult r = CriterionResult::make(9, "Fourier recovery");
  const double amp = 0.5, wid = 0.18, lam = 32;
  const TransverseProfile q = [=](double x2, double x3) { return Complex(amp * detail::b0((x2 - .5) / wid) * detail::b0((x3 - .5) / wid)); };
  const TransverseProfile zero = [](double, double) { return Complex(0); };
  ProbeSetup setup;
  const BoxOmega& dom = setup.omega;
  auto tb = std::make_shared<const TraceBasis>(make_trace_basis(dom));
  const DtNMap A1 = assemble_dtn(DirichletSolver(omega_potential(q, dom), dom), tb);
  const DtNMap A2 = assemble_dtn(DirichletSolver(omega_potential(zero, dom), dom), tb);
  const FourierProbe probe(A1, A2, cgo_potential(q, setup), cgo_potential(zero, setup), lam, setup);
  const std::vector<std::array<double, 2>> etas{{0, 0}, {2, 0}, {4, 0}, {0, 4}, {-4, 0}, {2.828, 2.828}, {-2.828, 2.828}, {0, -2}, {1, -3}};
  double worst = 0;
  for (const auto& e : etas) {
    const Complex est = probe(e).value, orc = tensor_bump_transform(amp, wid, {.5, .5}, e);
    worst = std::max(worst, std::abs(est - orc) / std::abs(orc));
  }
  r.pass = worst <= 0.1;
  r.detail = "worst rel err " + num(worst) + " over " + std::to_string(etas.size()) + " frequencies, lam " + num(lam);
  return r;
}

inline CriterionResult stability_shape() {
  CriterionResult r = CriterionResult::make(10, "stability sweep shape");
  const SweepResult sw = stability_sweep(OscillationFamily{}, SweepConfig{});
  auto recs = sw.records;
  bool ok = recs.size() == 4;
  for (const auto& x : recs) ok = ok && !x.degenerate && !x.partial && x.gap > 0 && x.h_minus_sigma_error > 0;
  std::string s;
  if (ok) {
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.gap > b.gap; });
    for (std::size_t i = 1; i < recs.size(); ++i)
      ok = ok && recs[i].gap < recs[i - 1].gap && recs[i].h_minus_sigma_error < recs[i - 1].h_minus_sigma_error;
    for (const auto& x : recs) ok = ok && std::abs(x.rho - std::pow(x.lam, 0.5 / 4)) <= 1e-12 * x.rho;
    std::vector<double> slope;
    for (std::size_t i = 1; i < recs.size(); ++i)
      slope.push_back(std::log(recs[i - 1].h_minus_sigma_error / recs[i].h_minus_sigma_error) / std::log(recs[i - 1].gap / recs[i].gap));
    for (std::size_t i = 0; i < slope.size(); ++i) ok = ok && slope[i] > 0 && (i == 0 || slope[i] < slope[i - 1]);
    s = "gaps";
    for (const auto& x : recs) s += " " + num(x.gap, 3);
    s += "; errors";
    for (const auto& x : recs) s += " " + num(x.h_minus_sigma_error, 3);
    s += "; local slopes";
    for (double v : slope) s += " " + num(v, 3);
  } else {
    s = "sweep produced degenerate or partial records";
  }
  r.pass = ok;
  r.detail = s;
  return r;
}

inline CriterionResult class_tooling() {
  CriterionResult r = CriterionResult::make(11, "class exponent estimate");
  PotentialSpec s;
  s.kind = PotentialKind::singular_point;
  s.delta = 0.5;
  s.cls.s = 2.5;
  const GridField q = sample(s, RectangleDomain{1, 1, 1025, 1025});
  const TruncationDecay td = truncation_decay(q, {4, 5, 6.5, 8, 10}, 2.5);
  r.pass = std::abs(td.beta_hat - 1.5) <= 0.15;
  r.detail = "beta_hat " + num(td.beta_hat) + " (expected 1.5)";
  return r;
}

inline CriterionResult exponent_suite() {
  CriterionResult r = CriterionResult::make(12, "exponent suite");
  int bad = 0;
  for (int i = 0; i < 19; ++i) {
    const double s = 2.05 + 0.05 * i;
    if (!solve_exponents(s).violations().empty()) ++bad;
  }
  const ExponentSet e = solve_exponents(2.5);
  auto eq = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::abs(b); };
  const bool worked = eq(e.p_prime, 10.0 / 3.0) && eq(e.ell, 5.0) && eq(e.theta, 0.45) && eq(e.ell_tilde, 20.0);
  r.pass = bad == 0 && worked;
  r.detail = std::to_string(bad) + " invariant failures over 19 values of s; s=5/2 p'=" + num(e.p_prime, 17) + " ell=" + num(e.ell, 17) +
             " theta=" + num(e.theta, 17) + " ell~=" + num(e.ell_tilde, 17);
  return r;
}

inline CriterionResult n_norm_inequalities() {
  CriterionResult r = CriterionResult::make(13, "N-norm inequalities");
  int bad = 0;
  for (int i = 0; i < 500; ++i) {
    const double e = 50.0 * i / 499.0;
    const double n1 = n_norm(-e, 1), ni = n_inf(-e);
    if (!(n1 >= std::exp(-2 * e))) ++bad;
    if (!(ni / n1 <= 1 + e)) ++bad;
  }
  r.pass = bad == 0;
  r.detail = std::to_string(bad) + " violations over 500 points";
  return r;
}

}  // namespace accept

struct AcceptanceOptions {
  bool quick = false;  // run only the criteria that take a few seconds
  std::uint64_t seed = 0;
};

/// Runs every criterion in order, reporting each as it completes. Exceptions count as failures.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, const std::function<void(const CriterionResult&)>& report = {}) {
  using Fn = std::function<CriterionResult()>;
  const std::vector<std::tuple<int, std::string, bool, Fn>> all{
      {1, "kernel vs quadrature", true, accept::kernel_correctness},
      {2, "kernel majorant", true, accept::kernel_majorant},
      {3, "resolvent identity O(h^2)", false, accept::resolvent_identity},
      {4, "resolvent estimate scaling", false, [&] { return accept::estimate_scaling(opt.seed); }},
      {5, "contraction threshold", true, accept::contraction_threshold},
      {6, "CGO residual vs floor", true, accept::cgo_residual},
      {7, "remainder decay", true, accept::remainder_decay},
      {8, "pairing identity closure", false, [&] { return accept::alessandrini_closure(opt.seed); }},
      {9, "Fourier recovery", false, accept::fourier_recovery},
      {10, "stability sweep shape", false, accept::stability_shape},
      {11, "class exponent estimate", true, accept::class_tooling},
      {12, "exponent suite", true, accept::exponent_suite},
      {13, "N-norm inequalities", true, accept::n_norm_inequalities},
  };
  std::vector<CriterionResult> out;
  for (const auto& [id, name, cheap, fn] : all) {
    CriterionResult r = CriterionResult::make(id, name);
    if (opt.quick && !cheap) {
      r.skipped = true;
      r.pass = true;
      r.detail = "skipped in quick mode";
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        r = fn();
      } catch (const std::exception& e) {
        r = CriterionResult::make(id, name);
        r.detail = std::string("exception: ") + e.what();
      }
      if (r.seconds == 0) r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (report) report(r);
    out.push_back(r);
  }
  return out;
}

}  // namespace cgolab
