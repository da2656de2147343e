#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "cgolab/config.hpp"
#include "cgolab/io.hpp"

using namespace cgolab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "cgolab_test_io";
  fs::create_directories(d);
  return d / name;
}

std::uint32_t u32_at(const std::string& b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[off + std::size_t(i)])) << (8 * i);
  return v;
}

double f64_at(const std::string& b, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[off + std::size_t(i)])) << (8 * i);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

GridField random_field(const Lattice& L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  GridField f(L);
  for (auto& z : f.values()) z = Complex(N(rng), N(rng));
  return f;
}

}  // namespace

TEST(Field, ByteLayout) {
  const Lattice L{Axis{0, 1, 2}, Axis{0, 1, 3}, Axis{0, 1, 4}};
  GridField f(L);
  f(1, 2, 3) = Complex(1.5, -2.25);
  const std::string b = encode_field(f);
  ASSERT_EQ(b.size(), 16u + 24u * 16u);
  EXPECT_EQ(b.substr(0, 4), "FLD1");
  EXPECT_EQ(u32_at(b, 4), 2u);
  EXPECT_EQ(u32_at(b, 8), 3u);
  EXPECT_EQ(u32_at(b, 12), 4u);
  // row-major: x3 fastest
  const std::size_t last = 16 + 23 * 16;
  EXPECT_EQ(f64_at(b, last), 1.5);
  EXPECT_EQ(f64_at(b, last + 8), -2.25);
  EXPECT_EQ(f64_at(b, 16), 0.0);
}

TEST(Field, RoundTrip) {
  const Lattice L{Axis{0.5, 1.5, 5}, Axis{0, 1, 7}, Axis{0, 2, 6}};
  const GridField f = random_field(L, 3);
  const fs::path p = scratch("rt.fld");
  write_field(p.string(), f);
  const RawField raw = read_field(p.string());
  EXPECT_EQ(raw.dims, (std::array<std::uint32_t, 3>{5, 7, 6}));
  const GridField g = to_grid(raw, L);
  EXPECT_EQ((g - f).max_abs(), 0.0);
  EXPECT_THROW(to_grid(raw, Lattice{Axis{0, 1, 5}, Axis{0, 1, 6}, Axis{0, 1, 7}}), ValidationError);
}

TEST(Field, CorruptInputs) {
  const Lattice L{Axis{0, 1, 2}, Axis{0, 1, 2}, Axis{0, 1, 2}};
  std::string b = encode_field(GridField(L, 1.0));
  std::string bad = b;
  bad[3] = '2';
  EXPECT_THROW(decode_field(bad), IoError);
  EXPECT_THROW(decode_field(b.substr(0, b.size() - 1)), IoError);
  EXPECT_THROW(decode_field(b.substr(0, 10)), IoError);
  EXPECT_THROW(decode_field(b + "x"), IoError);
  EXPECT_THROW(read_field(scratch("missing.fld").string()), IoError);
}

TEST(Dtn, RoundTripAndMismatch) {
  BoxOmega d;
  d.n = 16;
  DtNMap A;
  A.basis = std::make_shared<const TraceBasis>(make_trace_basis(d, 30));
  A.matrix = Eigen::MatrixXcd::Random(30, 30);
  A.n = d.n;
  const std::string b = encode_dtn(A);
  EXPECT_EQ(b.substr(0, 4), "DTN1");
  EXPECT_EQ(u32_at(b, 4), 30u);
  EXPECT_EQ(u32_at(b, 12), A.basis->id);
  EXPECT_EQ(b.size(), 16u + 900u * 16u + 30u * 8u);
  EXPECT_EQ(f64_at(b, 16 + 900 * 16 + 8 * 29), A.basis->omega[29]);
  const fs::path p = scratch("a.dtn");
  write_dtn(p.string(), A);
  const DtNMap B = read_dtn(p.string(), d);
  EXPECT_EQ((A.matrix - B.matrix).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(*A.basis == *B.basis);
  BoxOmega other = d;
  other.n = 17;
  EXPECT_THROW(read_dtn(p.string(), other), ValidationError);
  std::string bad = b;
  bad[0] = 'X';
  EXPECT_THROW(decode_dtn(bad), IoError);
  EXPECT_THROW(decode_dtn(b.substr(0, b.size() - 8)), IoError);
}

TEST(AtomicWrite, NoTempLeftAndParentsCreated) {
  const fs::path p = scratch("nested/deeper/out.txt");
  fs::remove_all(p.parent_path().parent_path());
  write_file_atomic(p.string(), "hello");
  EXPECT_EQ(read_file(p.string()), "hello");
  write_file_atomic(p.string(), "bye");
  EXPECT_EQ(read_file(p.string()), "bye");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
  EXPECT_THROW(write_file_atomic("/proc/cgolab_no/such.txt", "x"), IoError);
}

TEST(ConfigFile, ParseAndTypedAccess) {
  const Config c = Config::parse("# comment\n a.x = 1.5 \nb.list = 1, 2 ,3\n\nc.s= word # trailing\nd.n=7\ne.i=inf\n");
  EXPECT_EQ(c.num("a.x", 0), 1.5);
  EXPECT_EQ(c.list("b.list", {}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.str("c.s", ""), "word");
  EXPECT_EQ(c.integer("d.n", 0), 7);
  EXPECT_EQ(c.num("e.i", 0), kInf);
  EXPECT_EQ(c.num("zz", 4.0), 4.0);
  EXPECT_THROW(c.num("c.s", 0), ValidationError);
  EXPECT_THROW(c.integer("a.x", 0), ValidationError);
  EXPECT_THROW(Config::parse("novalue\n"), ValidationError);
  EXPECT_THROW(Config::parse("=3\n"), ValidationError);
  EXPECT_THROW(Config::parse("a=1.5x\n").num("a", 0), ValidationError);
}

TEST(ConfigFile, CanonicalHashIgnoresLayout) {
  const Config a = Config::parse("x.b=2\nx.a=1\n"), b = Config::parse("# c\n  x.a = 1\n\nx.b=2 # z\n");
  EXPECT_EQ(a.canonical(), "x.a=1\nx.b=2\n");
  EXPECT_EQ(a.hash(), b.hash());
  Config c = a;
  c.set("x.a", "1.0");
  EXPECT_NE(c.hash(), a.hash());
}

TEST(ConfigFile, EnvironmentOverrides) {
  ::setenv("CGOLAB_SOLVER_MAX_ITER", "12", 1);
  ::setenv("CGOLAB_BROKEN", "1", 1);
  Config c = Config::parse("solver.max_iter=64\n");
  c.apply_env();
  EXPECT_EQ(c.integer("solver.max_iter", 0), 12);
  EXPECT_FALSE(c.has("broken."));
  ::unsetenv("CGOLAB_SOLVER_MAX_ITER");
  ::unsetenv("CGOLAB_BROKEN");
}

TEST(Experiment, DefaultsAndExampleFileValidate) {
  EXPECT_NO_THROW(ExperimentConfig::from(Config{}).validate());
  const ExperimentConfig e = ExperimentConfig::from(Config::load(CGOLAB_SOURCE_DIR "/configs/example.cfg"));
  EXPECT_NO_THROW(e.validate());
  EXPECT_EQ(e.omega.n, 24);
  EXPECT_EQ(e.lam_grid.size(), 6u);
  EXPECT_EQ(e.sweep.lam_grid, e.lam_grid);
  EXPECT_EQ(e.sweep.gamma, 0.5);
  EXPECT_EQ(e.sweep.setup.omega.n, e.omega.n);
}

TEST(Experiment, RejectsInvalidEntries) {
  const std::pair<const char*, const char*> bad[] = {
      {"exponent.s", "3.5"},        {"exponent.sigma", "0"},   {"domain.n2", "4"},       {"omega.n", "8"},
      {"omega.hi", "1.2, 0.7"},     {"omega.stencil", "13"},   {"solver.tol", "0"},      {"solver.lam_grid", "16, 8"},
      {"sweep.levels", "0.4, 0.2"}, {"run.workers", "0"},      {"recovery.rho", "-1"},   {"omega.lo", "0.8, 0.1, 0.3"},
      {"domain.n1", "2.5"},         {"sweep.levels", "1,2,3,-1"}};
  for (auto [k, v] : bad) {
    Config c;
    c.set(k, v);
    EXPECT_THROW(ExperimentConfig::from(c).validate(), ValidationError) << k << "=" << v;
  }
}

TEST(PotentialFile, BundledSpecsLoad) {
  for (const char* name : {"bump.pot", "singular.pot", "tensor_bump.pot", "zero.pot"}) {
    const PotentialSpec p = load_potential_spec(std::string(CGOLAB_SOURCE_DIR "/configs/") + name);
    EXPECT_NO_THROW(p.validate(BoxOmega{})) << name;
  }
  EXPECT_EQ(load_potential_spec(CGOLAB_SOURCE_DIR "/configs/bump.pot").kind, PotentialKind::gaussian_bump);
  EXPECT_THROW(potential_spec_from(Config::parse("kind=singular-point\ndelta=0.9\n")), ValidationError);
  EXPECT_THROW(potential_spec_from(Config::parse("center=0.5\n")), ValidationError);
}

TEST(Csv, Rows) {
  CsvWriter w({"a", "b"});
  w.row({1.0, 0.1});
  EXPECT_EQ(w.text(), "a,b\n1,0.10000000000000001\n");
  EXPECT_THROW(w.row({1.0}), ValidationError);
  EXPECT_EQ(std::stod(fmt_num(kPi)), kPi);
}

TEST(ManifestRecord, Contents) {
  const Config c = Config::parse("run.seed=5\n");
  Manifest m("cgolab exponents", c, 5);
  const fs::path p = scratch("m_out.txt");
  m.write(p.string(), "payload");
  const std::string t = m.text();
  EXPECT_NE(t.find("command=cgolab exponents\n"), std::string::npos);
  EXPECT_NE(t.find("version=" CGOLAB_VERSION "\n"), std::string::npos);
  EXPECT_NE(t.find("config_hash=" + hex64(c.hash())), std::string::npos);
  EXPECT_NE(t.find("seed=5\n"), std::string::npos);
  EXPECT_NE(t.find("output=m_out.txt fnv64=" + hex64(fnv1a64("payload"))), std::string::npos);
  EXPECT_EQ(read_file(p.string()), "payload");
  // standard FNV-1a test vectors
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}
