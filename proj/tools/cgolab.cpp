// cgolab command-line harness.

#include <CLI11.hpp>
#include <deque>
#include <iostream>

#include "cgolab/cgolab.hpp"

using namespace cgolab;

namespace {

struct PotentialInput {
  std::optional<PotentialSpec> spec;
  std::optional<RawField> field;
  std::string path;
};

/// A potential file is either an FLD1 field or a key=value spec.
PotentialInput load_potential(const std::string& path) {
  PotentialInput p;
  p.path = path;
  const std::string data = read_file(path);
  if (data.rfind("FLD1", 0) == 0) p.field = decode_field(data, path);
  else p.spec = potential_spec_from(Config::parse(data, path));
  return p;
}

/// Samples the potential on L. Fields must match L, or be one slab matching L's cross-section.
GridField potential_on(const PotentialInput& p, const Lattice& L) {
  if (p.spec) return sample_on(*p.spec, L);
  const RawField& f = *p.field;
  if (f.dims[0] == 1 && f.dims[1] == std::uint32_t(L.x2.n) && f.dims[2] == std::uint32_t(L.x3.n)) {
    GridField out(L);
    for (int i = 0; i < L.x1.n; ++i) std::copy(f.values.begin(), f.values.end(), out.slab(i));
    return out;
  }
  return to_grid(f, L);
}

std::string joined(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

std::string json_record(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s = "{";
  for (std::size_t i = 0; i < kv.size(); ++i) s += (i ? ", \"" : "\"") + kv[i].first + "\": " + kv[i].second;
  return s + "}\n";
}

std::string str_lattice(const Lattice& L) {
  return std::to_string(L.x1.n) + "x" + std::to_string(L.x2.n) + "x" + std::to_string(L.x3.n);
}

int run(int argc, char** argv) {
  CLI::App app{"cgolab: CGO stability laboratory for the Schrodinger inverse problem"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(CGOLAB_VERSION));
  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "Experiment config file (key=value with block prefixes)");
  app.add_option("--set", sets, "Override a config entry, block.key=value (repeatable)");

  // flag -> config key overrides, applied after the file and environment
  std::deque<std::pair<std::string, std::optional<std::string>>> flag_keys;
  auto keyed = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    flag_keys.push_back({key, std::nullopt});
    sub->add_option(flag, flag_keys.back().second, help);
  };

  auto* exps = app.add_subcommand("exponents", "Print the exponent set for (s, sigma, beta)");
  keyed(exps, "--s", "exponent.s", "Integrability exponent s in (2,3)");
  keyed(exps, "--sigma", "exponent.sigma", "Sobolev index sigma in (0,1]");
  keyed(exps, "--beta", "exponent.beta", "Truncation decay exponent (inf for bounded potentials)");
  std::string exp_out;
  exps->add_option("--out", exp_out, "Also write the key=value lines to this file");

  auto* bas = app.add_subcommand("basis", "Band occupancy table of the transverse eigenbasis");
  int bas_kmax = 16;
  std::string bas_out;
  bas->add_option("--kmax", bas_kmax, "Band cutoff")->check(CLI::PositiveNumber);
  bas->add_option("--out", bas_out, "CSV output (stdout when omitted)");

  auto* pk = app.add_subcommand("probe-kernel", "Closed-form kernel against quadrature and the band bound");
  double pk_lam = 8, pk_mu = 5, pk_tmin = -2, pk_tmax = 2;
  int pk_n = 81;
  std::string pk_out;
  pk->add_option("--lam", pk_lam, "lambda");
  pk->add_option("--mu", pk_mu, "mu >= 0");
  pk->add_option("--tmin", pk_tmin, "Smallest t");
  pk->add_option("--tmax", pk_tmax, "Largest t");
  pk->add_option("--n", pk_n, "Number of t samples")->check(CLI::Range(2, 1000000));
  pk->add_option("--out", pk_out, "CSV output")->required();

  auto* gp = app.add_subcommand("gen-potential", "Sample a potential spec to a field file");
  std::string gp_spec, gp_out, gp_on = "slab";
  gp->add_option("--spec", gp_spec, "Potential spec file")->required()->check(CLI::ExistingFile);
  gp->add_option("--out", gp_out, "Field file output")->required();
  gp->add_option("--on", gp_on, "Lattice: slab (one x1 node over Q'), omega or cgo")->check(CLI::IsMember({"slab", "omega", "cgo"}));

  auto* cc = app.add_subcommand("check-class", "Class membership and truncation-decay fit");
  std::string cc_pot, cc_out;
  std::optional<double> cc_K, cc_kappa, cc_t0, cc_beta, cc_s;
  cc->add_option("--potential", cc_pot, "Potential spec or field file")->required()->check(CLI::ExistingFile);
  cc->add_option("--K", cc_K, "Norm cap");
  cc->add_option("--varkappa", cc_kappa, "Decay constant");
  cc->add_option("--t0", cc_t0, "Threshold floor");
  cc->add_option("--beta", cc_beta, "Decay exponent");
  cc->add_option("--s", cc_s, "Integrability exponent of the class norm");
  cc->add_option("--out", cc_out, "Also write the report to this file");
  int cc_n = 0;
  std::vector<double> cc_t;
  cc->add_option("--n", cc_n, "Transverse resolution for spec input (default domain.n2 x domain.n3)")->check(CLI::Range(8, 1 << 14));
  cc->add_option("--thresholds", cc_t, "Thresholds for the decay fit (default t0*2^{k/2} below max|q|)")->delimiter(',');

  auto* fw = app.add_subcommand("forward", "Assemble the DtN matrix of a potential on Omega");
  std::string fw_pot, fw_omega, fw_out;
  fw->add_option("--potential", fw_pot, "Potential spec or field file")->required()->check(CLI::ExistingFile);
  fw->add_option("--omega", fw_omega, "File with omega.* entries overriding the config")->check(CLI::ExistingFile);
  keyed(fw, "--modes", "solver.modes", "Trace basis size (0 = complete)");
  fw->add_option("--out", fw_out, "DTN1 output")->required();

  auto* cg = app.add_subcommand("cgo", "Build one CGO solution");
  double cg_lam = 32, cg_mu = 0, cg_angle = 0;
  std::string cg_pot, cg_out;
  cg->add_option("--lam", cg_lam, "lambda");
  cg->add_option("--mu", cg_mu, "mu <= 0");
  cg->add_option("--xi-angle", cg_angle, "Direction of xi in radians");
  cg->add_option("--potential", cg_pot, "Potential spec or field file")->required()->check(CLI::ExistingFile);
  cg->add_option("--out", cg_out, "Output prefix")->required();

  auto* rc = app.add_subcommand("recover", "Low-pass reconstruction of q1 - q2 from two DtN maps");
  std::string rc_d1, rc_d2, rc_p1, rc_p2, rc_out;
  rc->add_option("--dtn1", rc_d1, "DTN1 file of q1")->required()->check(CLI::ExistingFile);
  rc->add_option("--dtn2", rc_d2, "DTN1 file of q2")->required()->check(CLI::ExistingFile);
  rc->add_option("--potential1", rc_p1, "Spec of q1, used for the CGO and the error")->required()->check(CLI::ExistingFile);
  rc->add_option("--potential2", rc_p2, "Spec of q2")->required()->check(CLI::ExistingFile);
  keyed(rc, "--sigma", "exponent.sigma", "Sobolev index of the error norm");
  keyed(rc, "--rho", "recovery.rho", "Frequency cutoff (default lam^{gamma/4})");
  keyed(rc, "--lam", "recovery.lam", "lambda");
  rc->add_option("--out", rc_out, "Output prefix")->required();

  auto* sw = app.add_subcommand("sweep", "Stability sweep over the oscillating family");
  std::string sw_family, sw_out;
  sw->add_option("--family", sw_family, "Family file (amplitude, width, k0, center)")->check(CLI::ExistingFile);
  keyed(sw, "--levels", "sweep.levels", "Comma-separated epsilon levels");
  sw->add_option("--out", sw_out, "CSV output (default sweep.out or sweep.csv)");

  auto* st = app.add_subcommand("selftest", "Run the acceptance suite");
  bool st_quick = false;
  std::string st_out;
  st->add_flag("--quick", st_quick, "Only the criteria that finish in seconds");
  st->add_option("--out", st_out, "Also write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc0 = app.exit(e);
    return rc0 == 0 ? 0 : int(ExitCode::validation);
  }

  Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
  cfg.apply_env();
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects block.key=value, got '" + s + "'");
    cfg.set(Config::trim(s.substr(0, eq)), Config::trim(s.substr(eq + 1)));
  }
  if (fw->parsed() && !fw_omega.empty())
    for (const auto& [k, v] : Config::load(fw_omega).entries()) cfg.set(k.rfind("omega.", 0) == 0 ? k : "omega." + k, v);
  for (const auto& [k, v] : flag_keys)
    if (v) cfg.set(k, *v);
  const ExperimentConfig ex = ExperimentConfig::from(cfg);
  if (!exps->parsed()) ex.validate();
  Eigen::setNbThreads(ex.workers);
  Manifest man(joined(argc, argv), cfg, ex.seed);

  if (exps->parsed()) {
    std::ostringstream os;
    print_exponents(os, ex.exponents());
    std::cout << os.str();
    if (!exp_out.empty()) {
      man.write(exp_out, os.str());
      man.save(exp_out + ".manifest");
    }
    return 0;
  }

  if (bas->parsed()) {
    const EigenBasis B(ex.cross, bas_kmax);
    std::vector<double> lo(std::size_t(bas_kmax) + 1, kInf), hi(std::size_t(bas_kmax) + 1, -kInf);
    for (const auto& m : B.modes()) {
      lo[std::size_t(m.band)] = std::min(lo[std::size_t(m.band)], m.lambda);
      hi[std::size_t(m.band)] = std::max(hi[std::size_t(m.band)], m.lambda);
    }
    const auto cnt = B.band_counts();
    CsvWriter csv({"k", "count", "lambda_min", "lambda_max"});
    for (int k = 0; k <= bas_kmax; ++k) {
      const auto i = std::size_t(k);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      csv.row({double(k), double(cnt[i]), cnt[i] ? lo[i] : nan, cnt[i] ? hi[i] : nan});
    }
    if (bas_out.empty()) {
      std::cout << csv.text();
    } else {
      man.write(bas_out, csv.text());
      man.save(bas_out + ".manifest");
    }
    return 0;
  }

  if (pk->parsed()) {
    require(pk_tmax > pk_tmin, "probe-kernel: tmax must exceed tmin");
    KernelQuadrature Q;
    CsvWriter csv({"t", "closed_form", "quadrature", "band_bound"});
    const int band = int(std::floor(pk_mu));
    for (int i = 0; i < pk_n; ++i) {
      const double t = pk_tmin + (pk_tmax - pk_tmin) * i / (pk_n - 1);
      const double bound = band >= 1 ? kernel_band_bound(pk_lam, band, t) : std::numeric_limits<double>::quiet_NaN();
      csv.row({t, kernel_h(pk_lam, pk_mu, t).value, Q(pk_lam, pk_mu, t), bound});
    }
    man.write(pk_out, csv.text());
    man.save(pk_out + ".manifest");
    return 0;
  }

  const Lattice cgo_L = cgo_lattice(make_axis(kAxialLo, kAxialHi, ex.n1), ex.cross);

  if (gp->parsed()) {
    const PotentialSpec spec = load_potential_spec(gp_spec);
    const Lattice L = gp_on == "slab" ? slab_lattice(ex.cross) : gp_on == "omega" ? ex.omega.lattice() : cgo_L;
    const GridField q = sample_on(spec, L);
    man.write(gp_out, encode_field(q));
    man.save(gp_out + ".manifest");
    std::cout << "wrote " << gp_out << " (" << str_lattice(L) << ")\n";
    return 0;
  }

  if (cc->parsed()) {
    const PotentialInput in = load_potential(cc_pot);
    ClassParams cp = in.spec ? in.spec->cls : ClassParams{};
    if (cc_K) cp.K = *cc_K;
    if (cc_kappa) cp.varkappa = *cc_kappa;
    if (cc_t0) cp.t0 = *cc_t0;
    if (cc_beta) cp.beta = *cc_beta;
    if (cc_s) cp.s = *cc_s;
    RectangleDomain cross = ex.cross;
    if (cc_n > 0) cross.n2 = cross.n3 = cc_n;
    const GridField q = in.spec ? sample(*in.spec, cross)
                                : potential_on(in, in.field->dims[0] == 1 ? slab_lattice(ex.cross) : cgo_L);
    const auto& o = ex.omega;
    const MembershipReport m = class_membership(q, cp, std::array<double, 4>{o.lo[1], o.hi[1], o.lo[2], o.hi[2]}, cc_t);
    std::ostringstream os;
    os.precision(17);
    os << "member=" << m.member << "\nsupport_ok=" << m.support_ok << "\nnorm_ok=" << m.norm_ok << "\ndecay_ok=" << m.decay_ok
       << "\nnorm=" << m.norm << "\nworst_decay=" << m.worst_decay << "\n";
    std::vector<double> t;
    const double top = q.max_abs();
    for (double x : m.thresholds)
      if (x >= cp.t0 && x < top) t.push_back(x);
    if (t.size() >= 4) {
      const TruncationDecay td = truncation_decay(q, t, cp.s);
      os << "beta_hat=" << td.beta_hat << "\nvarkappa_hat=" << td.varkappa_hat << "\neffectively_bounded=" << td.effectively_bounded
         << "\nmax_residual=" << td.max_residual << "\n";
    }
    std::cout << os.str();
    if (!cc_out.empty()) {
      man.write(cc_out, os.str());
      man.save(cc_out + ".manifest");
    }
    return 0;
  }

  if (fw->parsed()) {
    const PotentialInput in = load_potential(fw_pot);
    if (in.spec) in.spec->validate(ex.omega);
    const GridField q = potential_on(in, ex.omega.lattice());
    const DtNMap A = assemble_dtn(q, ex.omega, ex.modes);
    man.write(fw_out, encode_dtn(A));
    man.save(fw_out + ".manifest");
    std::cout << "wrote " << fw_out << " (M=" << A.matrix.rows() << ", n=" << ex.omega.n << ")\n";
    return 0;
  }

  if (cg->parsed()) {
    const PotentialInput in = load_potential(cg_pot);
    const GridField q = potential_on(in, cgo_L);
    CgoContext ctx(q, cg_lam, ex.cgo);
    const CgoSolution s = ctx.build(cg_mu, {std::cos(cg_angle), std::sin(cg_angle)});
    man.write(cg_out + "_u.fld", encode_field(s.u));
    man.write(cg_out + "_v.fld", encode_field(s.v));
    const std::string diag = json_record({{"residual", fmt_num(s.residual)},
                                          {"residual_abs", fmt_num(s.residual_abs)},
                                          {"iterations", std::to_string(s.iterations)},
                                          {"contraction_estimate", fmt_num(s.contraction_estimate)},
                                          {"contraction_converged", s.contraction_converged ? "true" : "false"}});
    man.write(cg_out + "_diag.json", diag);
    man.save(cg_out + ".manifest");
    std::cout << diag;
    return 0;
  }

  if (rc->parsed()) {
    const PotentialSpec s1 = load_potential_spec(rc_p1), s2 = load_potential_spec(rc_p2);
    s1.validate(ex.omega);
    s2.validate(ex.omega);
    const DtNMap A1 = read_dtn(rc_d1, ex.omega), A2 = read_dtn(rc_d2, ex.omega);
    const ProbeSetup setup = ex.probe_setup();
    const Lattice probe_L = cgo_potential([](double, double) { return Complex(0); }, setup).lattice();
    const FourierProbe probe(A1, A2, sample_on(s1, probe_L), sample_on(s2, probe_L), ex.lam, setup);
    RecoveryConfig cfgr;
    cfgr.sigma = ex.sigma;
    cfgr.lam = ex.lam;
    cfgr.gamma = ex.exponents().gamma;
    cfgr.rho = ex.rho;
    cfgr.pad = ex.pad;
    const GridField q_true = sample(s1, ex.cross) - sample(s2, ex.cross);
    const Reconstruction r = reconstruct(probe, A1, A2, cfgr, q_true);
    CsvWriter probes({"eta2", "eta3", "probe_re", "probe_im", "truth_re", "truth_im", "ok"});
    for (const auto& e : r.record.residuals)
      probes.row({e.eta[0], e.eta[1], e.probe.real(), e.probe.imag(), e.truth.real(), e.truth.imag(), e.ok ? 1.0 : 0.0});
    CsvWriter sum({"gap", "lambda", "rho", "error_hsigma", "truncation_floor", "partial"});
    const StabilityRecord& rec = r.record;
    sum.row({rec.gap, rec.lam, rec.rho, rec.h_minus_sigma_error, rec.truncation_floor, rec.partial ? 1.0 : 0.0});
    man.write(rc_out + "_qrec.fld", encode_field(r.q_rec));
    man.write(rc_out + "_probes.csv", probes.text());
    man.write(rc_out + "_summary.csv", sum.text());
    man.save(rc_out + ".manifest");
    std::cout << sum.text();
    return rec.partial ? int(ExitCode::numerical) : 0;
  }

  if (sw->parsed()) {
    OscillationFamily fam = ex.family;
    if (!sw_family.empty()) {
      const Config fc = Config::load(sw_family);
      fam.amplitude = fc.num("amplitude", fam.amplitude);
      fam.width = fc.num("width", fam.width);
      fam.k0 = fc.num("k0", fam.k0);
      const auto c = fc.list("center", {fam.center[0], fam.center[1]});
      require(c.size() == 2, "family: center needs two values");
      fam.center = {c[0], c[1]};
      require(fam.width > 0 && fam.k0 > 0, "family: width and k0 must be positive");
    }
    const SweepResult res = stability_sweep(fam, ex.sweep);
    CsvWriter csv({"epsilon", "gap", "lambda", "rho", "error_hsigma", "fitted_tau", "flag"});
    const double tau = res.fit_ok ? res.fitted_tau : std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : res.records) {
      const std::string flag = r.degenerate ? "degenerate" : r.partial ? "partial" : "ok";
      csv.row_strings({fmt_num(r.epsilon), fmt_num(r.gap), fmt_num(r.lam), fmt_num(r.rho), fmt_num(r.h_minus_sigma_error), fmt_num(tau), flag});
    }
    const std::string out = !sw_out.empty() ? sw_out : cfg.str("sweep.out", "sweep.csv");
    man.write(out, csv.text());
    man.save(out + ".manifest");
    std::cout << csv.text();
    return 0;
  }

  if (st->parsed()) {
    AcceptanceOptions opt;
    opt.quick = st_quick;
    opt.seed = ex.seed;
    std::string report;
    const auto results = run_acceptance(opt, [&](const CriterionResult& r) {
      std::cout << r.line() << std::endl;
      report += r.line() + "\n";
    });
    const bool ok = std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
    if (!st_out.empty()) {
      man.write(st_out, report);
      man.save(st_out + ".manifest");
    }
    return ok ? 0 : int(ExitCode::numerical);
  }
  return int(ExitCode::validation);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "cgolab: " << e.what() << "\n";
    return int(e.code());
  } catch (const std::exception& e) {
    std::cerr << "cgolab: " << e.what() << "\n";
    return int(ExitCode::numerical);
  }
}
