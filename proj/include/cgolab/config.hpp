#pragma once

#include "cgolab/exponents.hpp"
#include "cgolab/io.hpp"
#include "cgolab/recovery.hpp"

namespace cgolab {

/// All run parameters, validated as a whole before any computation.
struct ExperimentConfig {
  RectangleDomain cross;
  int n1 = 32;  // CGO axial nodes on I
  BoxOmega omega;
  double s = 2.5, sigma = 1.0, beta = kInf;
  CgoConfig cgo;
  int modes = 0;  // trace basis size, 0 = complete
  std::vector<double> lam_grid{8, 12, 16, 24, 32, 48};
  std::uint64_t seed = 0;
  int workers = 1;
  SweepConfig sweep;
  OscillationFamily family;
  double lam = 32;
  std::optional<double> rho;
  int pad = 8;

  ExponentSet exponents() const { return solve_exponents(s, sigma, beta); }
  ProbeSetup probe_setup() const { return ProbeSetup{omega, cross, 1, cgo}; }

  void validate() const {
    cross.validate();
    require(n1 >= 4, "domain.n1 must be >= 4");
    omega.validate(cross.a, cross.b);
    (void)exponents();
    require(cgo.tol > 0 && cgo.max_iter >= 1 && cgo.probe_iters >= 1 && cgo.probe_restarts >= 1, "solver: tolerances and caps must be positive");
    require(cgo.kmax >= 0, "solver.kmax must be >= 0 (0 = automatic)");
    require(modes >= 0, "solver.modes must be >= 0 (0 = complete basis)");
    require(!lam_grid.empty() && std::is_sorted(lam_grid.begin(), lam_grid.end()), "solver.lam_grid must be increasing");
    require(workers >= 1, "run.workers must be >= 1");
    require(sweep.levels.size() >= 4, "sweep.levels needs at least four values");
    for (double e : sweep.levels) require(e >= 0 && std::isfinite(e), "sweep.levels must be nonnegative");
    require(family.width > 0 && family.k0 > 0, "sweep.width and sweep.k0 must be positive");
    require(pad >= 1, "recovery.pad must be >= 1");
    require(!rho || *rho > 0, "recovery.rho must be positive");
    require(lam > 0, "recovery.lam must be positive");
  }

  static ExperimentConfig from(const Config& c) {
    ExperimentConfig e;
    e.cross.a = c.num("domain.a", e.cross.a);
    e.cross.b = c.num("domain.b", e.cross.b);
    e.cross.n2 = c.integer("domain.n2", e.cross.n2);
    e.cross.n3 = c.integer("domain.n3", e.cross.n3);
    e.n1 = c.integer("domain.n1", e.n1);
    const auto lo = c.list("omega.lo", {e.omega.lo[0], e.omega.lo[1], e.omega.lo[2]});
    const auto hi = c.list("omega.hi", {e.omega.hi[0], e.omega.hi[1], e.omega.hi[2]});
    require(lo.size() == 3 && hi.size() == 3, "omega.lo and omega.hi need three values");
    for (int d = 0; d < 3; ++d) {
      e.omega.lo[std::size_t(d)] = lo[std::size_t(d)];
      e.omega.hi[std::size_t(d)] = hi[std::size_t(d)];
    }
    e.omega.n = c.integer("omega.n", e.omega.n);
    e.omega.stencil = c.integer("omega.stencil", e.omega.stencil);
    e.s = c.num("exponent.s", e.s);
    e.sigma = c.num("exponent.sigma", e.sigma);
    e.beta = c.num("exponent.beta", e.beta);
    e.cgo.tol = c.num("solver.tol", e.cgo.tol);
    e.cgo.max_iter = c.integer("solver.max_iter", e.cgo.max_iter);
    e.cgo.kmax = c.integer("solver.kmax", e.cgo.kmax);
    e.cgo.probe_iters = c.integer("solver.probe_iters", e.cgo.probe_iters);
    e.cgo.probe_restarts = c.integer("solver.probe_restarts", e.cgo.probe_restarts);
    e.cgo.t0 = c.num("solver.t0", e.cgo.t0);
    e.modes = c.integer("solver.modes", e.modes);
    e.lam_grid = c.list("solver.lam_grid", e.lam_grid);
    e.seed = std::uint64_t(c.integer("run.seed", 0));
    e.cgo.seed = e.seed;
    e.workers = c.integer("run.workers", e.workers);
    e.sweep.levels = c.list("sweep.levels", e.sweep.levels);
    e.family.amplitude = c.num("sweep.amplitude", e.family.amplitude);
    e.family.width = c.num("sweep.width", e.family.width);
    e.family.k0 = c.num("sweep.k0", e.family.k0);
    e.lam = c.num("recovery.lam", e.lam);
    if (c.has("recovery.rho")) e.rho = c.num("recovery.rho", 1.0);
    e.pad = c.integer("recovery.pad", e.pad);
    e.sweep.lam_grid = e.lam_grid;
    e.sweep.sigma = e.sigma;
    e.sweep.gamma = e.exponents_gamma();
    e.sweep.modes = e.modes;
    e.sweep.pad = e.pad;
    e.sweep.setup = e.probe_setup();
    return e;
  }

 private:
  double exponents_gamma() const { return std::min(0.5, beta); }
};

/// Potential spec file: flat key=value (kind, center, width, amplitude, delta, radius, modes, seed, K, varkappa, t0, beta, s).
inline PotentialSpec potential_spec_from(const Config& c) {
  PotentialSpec p;
  p.kind = parse_kind(c.str("kind", kind_name(p.kind)));
  const auto ctr = c.list("center", {p.center[0], p.center[1]});
  require(ctr.size() == 2, "potential spec: center needs two values");
  p.center = {ctr[0], ctr[1]};
  p.width = c.num("width", p.width);
  p.amplitude = c.num("amplitude", p.amplitude);
  p.delta = c.num("delta", p.delta);
  p.radius = c.num("radius", p.radius);
  p.modes = c.integer("modes", p.modes);
  p.seed = std::uint64_t(c.integer("seed", 0));
  p.cls.K = c.num("K", p.cls.K);
  p.cls.varkappa = c.num("varkappa", p.cls.varkappa);
  p.cls.t0 = c.num("t0", p.cls.t0);
  p.cls.beta = c.num("beta", p.cls.beta);
  p.cls.s = c.num("s", p.cls.s);
  p.validate();
  return p;
}

inline PotentialSpec load_potential_spec(const std::string& path) { return potential_spec_from(Config::load(path)); }

}  // namespace cgolab
