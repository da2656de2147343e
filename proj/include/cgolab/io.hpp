#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "cgolab/forward.hpp"
#include "cgolab/grid.hpp"

#ifndef CGOLAB_VERSION
#define CGOLAB_VERSION "0.1.0"
#endif

extern char** environ;

namespace cgolab {

namespace detail {

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xffu));
}
inline void put_f64(std::string& b, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  for (int i = 0; i < 8; ++i) b.push_back(char((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  Reader(std::string data, std::string name) : d_(std::move(data)), name_(std::move(name)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(d_[p_ + i])) << (8 * i);
    p_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(d_[p_ + i])) << (8 * i);
    p_ += 8;
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = d_.substr(p_, n);
    p_ += n;
    return s;
  }
  bool done() const { return p_ == d_.size(); }

 private:
  void need(std::size_t n) const {
    if (p_ + n > d_.size()) throw IoError(name_ + ": truncated file");
  }
  std::string d_;
  std::string name_;
  std::size_t p_ = 0;
};

}  // namespace detail

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read error on '" + path + "'");
  return ss.str();
}

/// Writes to a sibling temp file and renames it into place, so an abort never leaves a truncated file.
inline void write_file_atomic(const std::string& path, const std::string& data) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for '" + path + "': " + ec.message());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out.write(data.data(), std::streamsize(data.size()));
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw IoError("write error on '" + tmp + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

// ---- FLD1 ----

inline std::string encode_field(const GridField& f) {
  const Lattice& L = f.lattice();
  std::string b = "FLD1";
  detail::put_u32(b, std::uint32_t(L.x1.n));
  detail::put_u32(b, std::uint32_t(L.x2.n));
  detail::put_u32(b, std::uint32_t(L.x3.n));
  b.reserve(b.size() + f.size() * 16);
  for (auto z : f.values()) {
    detail::put_f64(b, z.real());
    detail::put_f64(b, z.imag());
  }
  return b;
}

struct RawField {
  std::array<std::uint32_t, 3> dims{0, 0, 0};
  std::vector<Complex> values;
};

inline RawField decode_field(const std::string& data, const std::string& name = "field") {
  detail::Reader r(data, name);
  if (r.bytes(4) != "FLD1") throw IoError(name + ": bad magic, expected FLD1");
  RawField f;
  for (auto& d : f.dims) d = r.u32();
  const std::uint64_t n = std::uint64_t(f.dims[0]) * f.dims[1] * f.dims[2];
  if (n == 0 || n * 16 != data.size() - 16) throw IoError(name + ": dimensions do not match the payload size");
  f.values.resize(std::size_t(n));
  for (auto& z : f.values) {
    const double re = r.f64();
    z = Complex(re, r.f64());
  }
  return f;
}

inline void write_field(const std::string& path, const GridField& f) { write_file_atomic(path, encode_field(f)); }
inline RawField read_field(const std::string& path) { return decode_field(read_file(path), path); }

/// Attaches a lattice to raw samples; the dimensions must agree.
inline GridField to_grid(const RawField& raw, const Lattice& L) {
  if (raw.dims[0] != std::uint32_t(L.x1.n) || raw.dims[1] != std::uint32_t(L.x2.n) || raw.dims[2] != std::uint32_t(L.x3.n))
    throw ValidationError("field dimensions " + std::to_string(raw.dims[0]) + "x" + std::to_string(raw.dims[1]) + "x" +
                          std::to_string(raw.dims[2]) + " do not match the configured lattice");
  return GridField(L, raw.values);
}

// ---- DTN1 ----

inline std::string encode_dtn(const DtNMap& d) {
  std::string b = "DTN1";
  const auto rows = std::uint32_t(d.matrix.rows()), cols = std::uint32_t(d.matrix.cols());
  detail::put_u32(b, rows);
  detail::put_u32(b, cols);
  detail::put_u32(b, d.basis ? d.basis->id : 0u);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      detail::put_f64(b, d.matrix(i, j).real());
      detail::put_f64(b, d.matrix(i, j).imag());
    }
  for (std::uint32_t j = 0; j < cols; ++j) detail::put_f64(b, d.basis ? d.basis->omega[j] : 0.0);
  return b;
}

struct RawDtN {
  std::uint32_t rows = 0, cols = 0, basis_id = 0;
  Eigen::MatrixXcd matrix;
  std::vector<double> omega;
};

inline RawDtN decode_dtn(const std::string& data, const std::string& name = "dtn") {
  detail::Reader r(data, name);
  if (r.bytes(4) != "DTN1") throw IoError(name + ": bad magic, expected DTN1");
  RawDtN d;
  d.rows = r.u32();
  d.cols = r.u32();
  d.basis_id = r.u32();
  const std::uint64_t expect = 16 + std::uint64_t(d.rows) * d.cols * 16 + std::uint64_t(d.cols) * 8;
  if (expect != data.size()) throw IoError(name + ": header does not match the payload size");
  d.matrix.resize(d.rows, d.cols);
  for (std::uint32_t i = 0; i < d.rows; ++i)
    for (std::uint32_t j = 0; j < d.cols; ++j) {
      const double re = r.f64();
      d.matrix(i, j) = Complex(re, r.f64());
    }
  d.omega.resize(d.cols);
  for (auto& w : d.omega) w = r.f64();
  return d;
}

inline void write_dtn(const std::string& path, const DtNMap& d) { write_file_atomic(path, encode_dtn(d)); }

/// Reads a DTN1 file and re-attaches the trace basis of Ω, checking the basis id and weights.
inline DtNMap read_dtn(const std::string& path, const BoxOmega& dom) {
  const RawDtN raw = decode_dtn(read_file(path), path);
  if (raw.rows != raw.cols) throw ValidationError(path + ": DtN matrix must be square");
  auto tb = std::make_shared<const TraceBasis>(make_trace_basis(dom, int(raw.cols)));
  if (tb->id != raw.basis_id) throw ValidationError(path + ": trace basis id does not match the configured Omega");
  for (std::uint32_t j = 0; j < raw.cols; ++j)
    if (std::abs(tb->omega[j] - raw.omega[j]) > 1e-9 * tb->omega[j]) throw ValidationError(path + ": trace weights do not match");
  DtNMap d;
  d.matrix = raw.matrix;
  d.basis = std::move(tb);
  d.n = dom.n;
  return d;
}

// ---- configuration ----

/// Flat key=value configuration with block prefixes (domain.a=1.0). '#' starts a comment.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& name = "config") {
    Config c;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ValidationError(name + ":" + std::to_string(no) + ": expected key=value");
      const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
      if (k.empty()) throw ValidationError(name + ":" + std::to_string(no) + ": empty key");
      c.kv_[k] = v;
    }
    return c;
  }
  static Config load(const std::string& path) { return parse(read_file(path), path); }

  /// CGOLAB_<BLOCK>_<KEY> overrides block.key (key lower-cased, underscores kept).
  void apply_env() {
    for (char** e = environ; e && *e; ++e) {
      const std::string s(*e);
      if (s.rfind("CGOLAB_", 0) != 0) continue;
      const auto eq = s.find('=');
      if (eq == std::string::npos) continue;
      std::string name = s.substr(7, eq - 7);
      const auto us = name.find('_');
      if (us == std::string::npos || us == 0 || us + 1 >= name.size()) continue;
      for (auto& ch : name) ch = char(std::tolower(static_cast<unsigned char>(ch)));
      kv_[name.substr(0, us) + "." + name.substr(us + 1)] = s.substr(eq + 1);
    }
  }

  void set(const std::string& k, const std::string& v) { kv_[k] = v; }
  bool has(const std::string& k) const { return kv_.count(k) != 0; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  std::string str(const std::string& k, const std::string& def) const {
    auto it = kv_.find(k);
    return it == kv_.end() ? def : it->second;
  }
  double num(const std::string& k, double def) const {
    auto it = kv_.find(k);
    if (it == kv_.end()) return def;
    return to_double(k, it->second);
  }
  int integer(const std::string& k, int def) const {
    const double d = num(k, def);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ValidationError("config: " + k + " must be an integer");
    return int(d);
  }
  std::vector<double> list(const std::string& k, std::vector<double> def) const {
    auto it = kv_.find(k);
    if (it == kv_.end()) return def;
    std::vector<double> out;
    std::string tok;
    std::istringstream in(it->second);
    while (std::getline(in, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) out.push_back(to_double(k, tok));
    }
    return out;
  }

  /// Canonical text (sorted key=value lines); its hash identifies the run configuration.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : kv_) s += k + "=" + v + "\n";
    return s;
  }
  std::uint64_t hash() const { return fnv1a64(canonical()); }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
  }

 private:
  static double to_double(const std::string& k, const std::string& v) {
    if (v == "inf" || v == "infinity") return kInf;
    std::size_t pos = 0;
    double d;
    try {
      d = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw ValidationError("config: " + k + "='" + v + "' is not a number");
    }
    if (pos != v.size()) throw ValidationError("config: " + k + "='" + v + "' is not a number");
    return d;
  }
  std::map<std::string, std::string> kv_;
};

// ---- CSV and manifest ----

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }
  CsvWriter& row(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double d : v) s.push_back(fmt_num(d));
    return row_strings(s);
  }
  CsvWriter& row_strings(const std::vector<std::string>& v) {
    require(v.size() == cols_, "csv: row has the wrong number of columns");
    for (std::size_t i = 0; i < v.size(); ++i) text_ += (i ? "," : "") + v[i];
    text_ += "\n";
    return *this;
  }
  const std::string& text() const { return text_; }

 private:
  std::size_t cols_;
  std::string text_;
};

/// Record of one run: configuration hash, version, seed and every output written (with content hash).
class Manifest {
 public:
  Manifest(std::string command, const Config& cfg, std::uint64_t seed) : command_(std::move(command)), cfg_hash_(cfg.hash()), seed_(seed) {}

  /// Writes data atomically and records it.
  void write(const std::string& path, const std::string& data) {
    write_file_atomic(path, data);
    files_.push_back({path, fnv1a64(data)});
  }
  const std::vector<std::pair<std::string, std::uint64_t>>& files() const { return files_; }

  std::string text() const {
    std::string s;
    s += "command=" + command_ + "\n";
    s += "version=" CGOLAB_VERSION "\n";
    s += "eigen=" + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION) + "\n";
    s += "config_hash=" + hex64(cfg_hash_) + "\n";
    s += "seed=" + std::to_string(seed_) + "\n";
    for (const auto& [p, h] : files_) s += "output=" + std::filesystem::path(p).filename().string() + " fnv64=" + hex64(h) + "\n";
    return s;
  }
  void save(const std::string& path) const { write_file_atomic(path, text()); }

 private:
  std::string command_;
  std::uint64_t cfg_hash_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::uint64_t>> files_;
};

}  // namespace cgolab
