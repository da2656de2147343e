#pragma once

#include <functional>
#include <optional>

#include "cgolab/cgo.hpp"
#include "cgolab/forward.hpp"
#include "cgolab/potential.hpp"

namespace cgolab {

using TransverseProfile = std::function<Complex(double, double)>;

/// Frequency lattice of the zero-extended slab: η_k = 2πk/(N h) per axis with N = pad·n.
struct FrequencyLattice {
  int N2 = 0, N3 = 0;
  double d2 = 0, d3 = 0;  // frequency spacing

  double eta2(int k) const { return d2 * (k < N2 / 2 ? k : k - N2); }
  double eta3(int k) const { return d3 * (k < N3 / 2 ? k : k - N3); }
};

inline FrequencyLattice frequency_lattice(const Lattice& slab, int pad = 8) {
  require(pad >= 1, "frequency lattice: pad must be >= 1");
  require(slab.x2.n >= 2 && slab.x3.n >= 2, "frequency lattice: slab needs two nodes per axis");
  FrequencyLattice F;
  F.N2 = pad * slab.x2.n;
  F.N3 = pad * slab.x3.n;
  F.d2 = 2 * kPi / (F.N2 * slab.x2.step());
  F.d3 = 2 * kPi / (F.N3 * slab.x3.step());
  return F;
}

namespace detail {

inline Eigen::MatrixXcd phase_matrix(const std::vector<double>& eta, const Axis& ax, double sign) {
  Eigen::MatrixXcd E(Eigen::Index(eta.size()), ax.n);
  for (std::size_t r = 0; r < eta.size(); ++r)
    for (int j = 0; j < ax.n; ++j) E(Eigen::Index(r), j) = std::polar(1.0, sign * eta[r] * ax.at(j));
  return E;
}

inline Eigen::MatrixXcd slab_matrix(const GridField& q) {
  const Lattice& L = q.lattice();
  require(L.x1.n == 1, "expected a single transverse slab");
  Eigen::MatrixXcd Q(L.x2.n, L.x3.n);
  for (int j = 0; j < L.x2.n; ++j)
    for (int k = 0; k < L.x3.n; ++k) Q(j, k) = L.x2.weight(j) * L.x3.weight(k) * q(0, j, k);
  return Q;
}

}  // namespace detail

/// q̂(η) = Σ w q(x') e^{-iη·x'} on the slab lattice, at arbitrary frequencies.
inline Complex slab_transform(const GridField& q, std::array<double, 2> eta) {
  const Eigen::MatrixXcd Q = detail::slab_matrix(q);
  const Lattice& L = q.lattice();
  const Eigen::MatrixXcd e2 = detail::phase_matrix({eta[0]}, L.x2, -1);
  const Eigen::MatrixXcd e3 = detail::phase_matrix({eta[1]}, L.x3, -1);
  return (e2 * Q * e3.transpose())(0, 0);
}

/// The whole zero-extended transform on the frequency lattice (N2 x N3), by separable direct DFT.
inline Eigen::MatrixXcd slab_spectrum(const GridField& q, const FrequencyLattice& F) {
  const Lattice& L = q.lattice();
  std::vector<double> e2(std::size_t(F.N2)), e3(std::size_t(F.N3));
  for (int k = 0; k < F.N2; ++k) e2[std::size_t(k)] = F.eta2(k);
  for (int k = 0; k < F.N3; ++k) e3[std::size_t(k)] = F.eta3(k);
  return detail::phase_matrix(e2, L.x2, -1) * detail::slab_matrix(q) * detail::phase_matrix(e3, L.x3, -1).transpose();
}

/// (Σ_{ρ_lo <= |η| < ρ_hi} (1+|η|²)^{-σ} |q̂(η)|² Δη₂Δη₃)^{1/2}; the full sum is the H^{-σ} norm.
inline double h_minus_sigma_norm(const GridField& q, double sigma, int pad = 8, double rho_lo = 0, double rho_hi = kInf) {
  require(sigma >= 0 && std::isfinite(sigma), "h_minus_sigma_norm: sigma must be nonnegative");
  require(q.all_finite(), "h_minus_sigma_norm: non-finite samples");
  const FrequencyLattice F = frequency_lattice(q.lattice(), pad);
  const Eigen::MatrixXcd S = slab_spectrum(q, F);
  double s = 0;
  for (int a = 0; a < F.N2; ++a)
    for (int b = 0; b < F.N3; ++b) {
      const double e2 = F.eta2(a) * F.eta2(a) + F.eta3(b) * F.eta3(b), e = std::sqrt(e2);
      if (e < rho_lo || e >= rho_hi) continue;
      s += std::pow(1 + e2, -sigma) * std::norm(S(a, b));
    }
  return std::sqrt(s * F.d2 * F.d3);
}

/// Frequencies of the lattice with |η| <= rho.
inline std::vector<std::array<double, 2>> eta_disc(const FrequencyLattice& F, double rho) {
  require(rho > 0, "eta grid: rho must be positive");
  std::vector<std::array<double, 2>> out;
  const int k2 = int(std::floor(rho / F.d2)), k3 = int(std::floor(rho / F.d3));
  for (int a = -k2; a <= k2; ++a)
    for (int b = -k3; b <= k3; ++b) {
      const double e2 = a * F.d2, e3 = b * F.d3;
      if (std::hypot(e2, e3) <= rho) out.push_back({e2, e3});
    }
  return out;
}

/// Inverse transform of given spectral samples on the slab lattice: Σ q̂(η) e^{iη·x'} Δη₂Δη₃/(2π)².
inline GridField inverse_transform(const Lattice& slab, const FrequencyLattice& F, const std::vector<std::array<double, 2>>& eta,
                                   const std::vector<Complex>& values) {
  require(eta.size() == values.size(), "inverse_transform: size mismatch");
  GridField out(slab);
  const double c = F.d2 * F.d3 / (4 * kPi * kPi);
  for (std::size_t m = 0; m < eta.size(); ++m) {
    if (values[m] == Complex(0)) continue;
    for (int j = 0; j < slab.x2.n; ++j) {
      const Complex p2 = std::polar(1.0, eta[m][0] * slab.x2.at(j));
      for (int k = 0; k < slab.x3.n; ++k) out(0, j, k) += c * values[m] * p2 * std::polar(1.0, eta[m][1] * slab.x3.at(k));
    }
  }
  return out;
}

/// Hard low-pass of q at radius rho on the frequency lattice.
inline GridField lowpass(const GridField& q, double rho, int pad = 8) {
  const FrequencyLattice F = frequency_lattice(q.lattice(), pad);
  const auto eta = eta_disc(F, rho);
  std::vector<Complex> v;
  for (const auto& e : eta) v.push_back(slab_transform(q, e));
  return inverse_transform(q.lattice(), F, eta, v);
}

/// Σ w e^{mu x1} over the axial nodes of Ω: the x1 factor of the volume integral of u₁u₂.
inline double n_omega(double mu, const Axis& x1) {
  double s = 0;
  for (int i = 0; i < x1.n; ++i) s += x1.weight(i) * std::exp(mu * x1.at(i));
  return s;
}

/// Geometry and solver settings shared by all probes.
struct ProbeSetup {
  BoxOmega omega;
  RectangleDomain cross{1.0, 1.0, 64, 64};
  int axial_refine = 1;  // CGO axial lattice = Ω axial nodes refined by this factor
  CgoConfig cgo;
};

/// A transverse profile on the CGO lattice (Ω's axial extent times Q'), zero outside Ω's cross-section.
inline GridField cgo_potential(const TransverseProfile& q, const ProbeSetup& s) {
  const Axis ax = s.omega.lattice().x1;
  const Lattice L = cgo_lattice(Axis{ax.lo, ax.hi, s.axial_refine * (ax.n - 1) + 1}, s.cross);
  const auto& lo = s.omega.lo;
  const auto& hi = s.omega.hi;
  return GridField::from_function(L, [&](double, double x2, double x3) {
    const bool in = x2 >= lo[1] && x2 <= hi[1] && x3 >= lo[2] && x3 <= hi[2];
    return in ? q(x2, x3) : Complex(0);
  });
}

inline GridField omega_potential(const TransverseProfile& q, const BoxOmega& dom) {
  return GridField::from_function(dom.lattice(), [&](double, double x2, double x3) { return q(x2, x3); });
}

struct ProbeValue {
  std::array<double, 2> eta{0, 0};
  Complex value = 0;
  bool ok = true;
  bool truncation_warning = false;
  std::string error;
};

/// Estimates q̂(η) for q = q₁ - q₂ from the two DtN maps and CGO traces.
class FourierProbe {
 public:
  FourierProbe(const DtNMap& A1, const DtNMap& A2, const GridField& q1_cgo, const GridField& q2_cgo, double lam, ProbeSetup setup)
      : A1_(&A1), A2_(&A2), setup_(std::move(setup)),
        ctx1_(q1_cgo, lam, setup_.cgo), ctx2_(q2_cgo, -lam, setup_.cgo) {
    require(A1.basis && A2.basis && *A1.basis == *A2.basis, "fourier_probe: DtN maps use different trace bases");
    require(A1.n == setup_.omega.n, "fourier_probe: DtN resolution does not match Omega");
    require(lam > 0, "fourier_probe: lam must be positive");
  }

  double lam() const { return ctx1_.lam(); }
  const ProbeSetup& setup() const { return setup_; }

  ProbeValue operator()(std::array<double, 2> eta) const {
    ProbeValue r;
    r.eta = eta;
    const double ne = std::hypot(eta[0], eta[1]);
    const double mu = -ne;
    const std::array<double, 2> xi = ne > 0 ? std::array<double, 2>{-eta[0] / ne, -eta[1] / ne} : std::array<double, 2>{1.0, 0.0};
    const Lattice OL = setup_.omega.lattice();
    const GridField f1 = ctx1_.build(mu, xi).sample(OL);
    const GridField f2 = ctx2_.build(0.0, xi).sample(OL);
    const PairingResult p = alessandrini_pair(*A2_, *A1_, f1, f2);
    r.value = p.value / n_omega(mu, OL.x1);
    r.truncation_warning = p.truncation_warning;
    return r;
  }

 private:
  const DtNMap* A1_;
  const DtNMap* A2_;
  ProbeSetup setup_;
  CgoContext ctx1_, ctx2_;
};

inline Complex fourier_probe(std::array<double, 2> eta, double lam, const DtNMap& A1, const DtNMap& A2, const GridField& q1_cgo,
                             const GridField& q2_cgo, const ProbeSetup& setup = {}) {
  return FourierProbe(A1, A2, q1_cgo, q2_cgo, lam, setup)(eta).value;
}

struct RecoveryConfig {
  double sigma = 1.0;
  double lam = 32.0;
  double gamma = 0.5;
  std::optional<double> rho;  // default lam^{gamma/4}
  int pad = 8;

  double radius() const { return rho ? *rho : std::pow(lam, gamma / 4); }
  void validate(double lam0 = 0) const {
    require(sigma > 0 && sigma <= 1, "recovery: sigma must lie in (0,1]");
    require(std::isfinite(lam) && lam >= lam0 && lam > 0, "recovery: lam must be finite and >= lambda0");
    require(gamma > 0 && gamma <= 0.5, "recovery: gamma must lie in (0,1/2]");
    require(radius() > 0 && std::isfinite(radius()), "recovery: rho must be positive");
  }
};

struct EtaResidual {
  std::array<double, 2> eta{0, 0};
  Complex probe = 0;
  Complex truth = 0;
  bool ok = true;
};

struct StabilityRecord {
  double epsilon = 0;
  double gap = 0;
  double h_minus_sigma_error = 0;
  double truncation_floor = 0;
  double lam = 0;
  double rho = 0;
  double c0 = 0;
  bool degenerate = false;
  bool partial = false;  // some probes failed
  std::vector<EtaResidual> residuals;
};

struct Reconstruction {
  GridField q_rec;
  StabilityRecord record;
};

/// Low-pass reconstruction from probes on the η disc, compared against q_true (a slab over Q').
inline Reconstruction reconstruct(const FourierProbe& probe, const DtNMap& A1, const DtNMap& A2, const RecoveryConfig& cfg,
                                  const GridField& q_true) {
  cfg.validate();
  require(q_true.lattice().x1.n == 1, "reconstruct: q_true must be a transverse slab");
  const Lattice slab = q_true.lattice();
  const FrequencyLattice F = frequency_lattice(slab, cfg.pad);
  const double rho = cfg.radius();
  const auto eta = eta_disc(F, rho);
  Reconstruction out;
  StabilityRecord& rec = out.record;
  rec.lam = probe.lam();
  rec.rho = rho;
  rec.gap = dtn_gap(A1, A2);
  std::vector<Complex> vals;
  for (const auto& e : eta) {
    EtaResidual er;
    er.eta = e;
    er.truth = slab_transform(q_true, e);
    try {
      er.probe = probe(e).value;
    } catch (const Error&) {
      er.ok = false;
      rec.partial = true;
    }
    vals.push_back(er.ok ? er.probe : Complex(0));
    rec.residuals.push_back(er);
  }
  out.q_rec = inverse_transform(slab, F, eta, vals);
  rec.h_minus_sigma_error = h_minus_sigma_norm(out.q_rec - q_true, cfg.sigma, cfg.pad);
  rec.truncation_floor = h_minus_sigma_norm(lowpass(q_true, rho, cfg.pad) - q_true, cfg.sigma, cfg.pad);
  return out;
}

/// ‖ω^{1/2}c(u₁)‖·‖ω^{1/2}c(u₂)‖/N_Ω(0) for the exponential pair at η = 0: the factor by which a unit
/// gap can move the probe.
inline double probe_sensitivity(const TraceBasis& tb, const BoxOmega& dom, double lam) {
  const Lattice L = dom.lattice();
  const GridField f1 = GridField::from_function(L, [&](double x1, double x2, double) { return std::exp(Complex(-lam * x1, lam * x2)); });
  const GridField f2 = GridField::from_function(L, [&](double x1, double x2, double) { return std::exp(Complex(lam * x1, -lam * x2)); });
  Eigen::VectorXd w(tb.size());
  for (int m = 0; m < tb.size(); ++m) w[m] = std::sqrt(tb.omega[std::size_t(m)]);
  const auto c1 = trace_coefficients(tb, f1), c2 = trace_coefficients(tb, f2);
  return w.cwiseProduct(c1.c.cwiseAbs()).norm() * w.cwiseProduct(c2.c.cwiseAbs()).norm() / n_omega(0.0, L.x1);
}

/// Exponential rate c₀ of probe_sensitivity over the grid.
inline double fit_sensitivity_rate(const TraceBasis& tb, const BoxOmega& dom, const std::vector<double>& lams) {
  std::vector<double> X, Y;
  for (double l : lams) {
    X.push_back(l);
    Y.push_back(std::log(probe_sensitivity(tb, dom, l)));
  }
  return fit_line(X, Y).slope;
}

/// Largest grid lam >= lam_min with e^{c0 lam}·gap <= lam^{-sigma gamma/4}; the smallest admissible
/// grid value when none qualifies.
inline double balance_lambda(double gap, double c0, double sigma, double gamma, const std::vector<double>& grid, double lam_min) {
  std::optional<double> best, first;
  for (double l : grid) {
    if (l < lam_min) continue;
    if (!first) first = l;
    if (std::exp(c0 * l) * gap <= std::pow(l, -sigma * gamma / 4)) best = l;
  }
  require(first.has_value(), "balance_lambda: no grid value above lambda0");
  return best ? *best : *first;
}

/// Oscillating family q_ε(x') = A·b((x₂-c₂)/w)·b((x₃-c₃)/w)·cos(k₀(x₂-c₂)/ε), b(z) = (1-z²)⁶₊.
/// Its H^{-σ} size and its DtN signature both vanish as ε -> 0; ε = 0 gives the zero potential.
struct OscillationFamily {
  double amplitude = 0.5;
  std::array<double, 2> center{0.5, 0.5};
  double width = 0.18;
  double k0 = 4.0;

  TransverseProfile operator()(double eps) const {
    if (eps == 0) return [](double, double) { return Complex(0); };
    const auto c = center;
    const double A = amplitude, w = width, k = k0 / eps;
    return [=](double x2, double x3) {
      return Complex(A * detail::poly_bump((x2 - c[0]) / w) * detail::poly_bump((x3 - c[1]) / w) * std::cos(k * (x2 - c[0])));
    };
  }
};

struct SweepConfig {
  std::vector<double> levels{0.4, 0.2, 0.1, 0.05};
  std::vector<double> lam_grid{8, 12, 16, 24, 32, 48};
  double sigma = 1.0;
  double gamma = 0.5;
  int modes = 0;  // trace basis size, 0 = complete
  int pad = 8;
  ProbeSetup setup;
};

struct SweepResult {
  std::vector<StabilityRecord> records;
  double c0 = 0;
  double fitted_tau = 0;  // error ~ |log gap|^{-tau}
  bool fit_ok = false;
};

/// Runs the reconstruction at each amplitude level against the zero background.
inline SweepResult stability_sweep(const OscillationFamily& fam, const SweepConfig& cfg) {
  require(cfg.levels.size() >= 4, "stability_sweep: need at least four levels");
  require(!cfg.lam_grid.empty() && std::is_sorted(cfg.lam_grid.begin(), cfg.lam_grid.end()), "stability_sweep: lam grid must be increasing");
  const BoxOmega& dom = cfg.setup.omega;
  dom.validate(cfg.setup.cross.a, cfg.setup.cross.b);
  auto tb = std::make_shared<const TraceBasis>(make_trace_basis(dom, cfg.modes));
  const TransverseProfile zero = fam(0.0);
  const DtNMap A2 = assemble_dtn(DirichletSolver(omega_potential(zero, dom), dom), tb);
  const GridField q2c = cgo_potential(zero, cfg.setup);
  SweepResult res;
  res.c0 = fit_sensitivity_rate(*tb, dom, cfg.lam_grid);
  const Lattice slab = slab_lattice(cfg.setup.cross);
  for (double eps : cfg.levels) {
    StabilityRecord rec;
    rec.epsilon = eps;
    rec.c0 = res.c0;
    const TransverseProfile q = fam(eps);
    const DtNMap A1 = assemble_dtn(DirichletSolver(omega_potential(q, dom), dom), tb);
    rec.gap = dtn_gap(A1, A2);
    if (!(rec.gap > 0)) {
      rec.degenerate = true;
      res.records.push_back(rec);
      continue;
    }
    const GridField q1c = cgo_potential(q, cfg.setup);
    const double lam0 = find_lambda0(q1c, cfg.lam_grid, cfg.setup.cgo);
    const double lam = balance_lambda(rec.gap, res.c0, cfg.sigma, cfg.gamma, cfg.lam_grid, lam0);
    RecoveryConfig rc;
    rc.sigma = cfg.sigma;
    rc.lam = lam;
    rc.gamma = cfg.gamma;
    rc.pad = cfg.pad;
    const FourierProbe probe(A1, A2, q1c, q2c, lam, cfg.setup);
    const GridField q_true = GridField::from_function(slab, [&](double, double x2, double x3) { return q(x2, x3); });
    Reconstruction r = reconstruct(probe, A1, A2, rc, q_true);
    r.record.epsilon = eps;
    r.record.c0 = res.c0;
    res.records.push_back(std::move(r.record));
  }
  std::vector<double> X, Y;
  for (const auto& r : res.records)
    if (!r.degenerate && r.gap < 1 && r.h_minus_sigma_error > 0) {
      X.push_back(std::log(std::abs(std::log(r.gap))));
      Y.push_back(std::log(r.h_minus_sigma_error));
    }
  if (X.size() >= 2) {
    res.fitted_tau = -fit_line(X, Y).slope;
    res.fit_ok = true;
  }
  return res;
}

}  // namespace cgolab
