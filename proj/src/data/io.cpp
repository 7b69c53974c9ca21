#include "siegelnet/data/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace siegelnet::data {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kMagic[4] = {'S', 'G', 'N', 'B'};
constexpr std::uint32_t kBlobVersion = 1;

[[noreturn]] void format_error(const std::string& where, const std::string& what) {
  fail(ErrorKind::FormatError, where + ": " + what);
}

// ---- little-endian primitives

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& data() const { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> buf, std::string file) : buf_(std::move(buf)), file_(std::move(file)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str(std::size_t n) {
    const char* p = take(n);
    return {p, n};
  }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }
  [[noreturn]] void error(const std::string& what) const {
    format_error(file_ + " @ byte " + std::to_string(pos_), what);
  }

 private:
  const char* take(std::size_t n) {
    if (n > remaining()) error("truncated (need " + std::to_string(n) + " bytes, have " + std::to_string(remaining()) + ")");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t le(int n) {
    const char* p = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }

  std::vector<char> buf_;
  std::string file_;
  std::size_t pos_ = 0;
};

std::vector<char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) format_error(path.string(), "cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::ConfigError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::ConfigError, "write failed for " + path.string());
}

// ---- manifest helpers

json read_manifest(const fs::path& path, const std::string& kind) {
  const auto bytes = slurp(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    format_error(path.string() + " @ byte " + std::to_string(e.byte), "invalid JSON");
  }
  if (!j.is_object()) format_error(path.string(), "manifest must be a JSON object");
  const std::string where = path.string();
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    format_error(where + ": /schema_version", "missing or not an integer");
  }
  if (j["schema_version"].get<int>() != kSchemaVersion) {
    format_error(where + ": /schema_version", "unsupported version " + j["schema_version"].dump());
  }
  if (!j.contains("kind") || j["kind"] != kind) {
    format_error(where + ": /kind", "expected \"" + kind + "\"");
  }
  return j;
}

template <class T>
T field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) format_error(where + ": /" + key, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    format_error(where + ": /" + key, "wrong type");
  }
}

json base_manifest(const std::string& kind, const fs::path& manifest) {
  return json{{"schema_version", kSchemaVersion}, {"kind", kind}, {"blob", blob_path(manifest).filename().string()}};
}

Blob load_blob_for(const json& j, const fs::path& manifest) {
  const auto name = field<std::string>(j, "blob", manifest.string());
  return read_blob(manifest.parent_path() / name);
}

const Mat& need_real(const Blob& b, const std::string& key, Eigen::Index r, Eigen::Index c, const std::string& file) {
  auto it = b.real.find(key);
  if (it == b.real.end()) format_error(file, "missing real matrix '" + key + "'");
  if (it->second.rows() != r || it->second.cols() != c) format_error(file, "matrix '" + key + "' has wrong shape");
  return it->second;
}

const CMat& need_complex(const Blob& b, const std::string& key, Eigen::Index r, Eigen::Index c,
                         const std::string& file) {
  auto it = b.complex.find(key);
  if (it == b.complex.end()) format_error(file, "missing complex matrix '" + key + "'");
  if (it->second.rows() != r || it->second.cols() != c) format_error(file, "matrix '" + key + "' has wrong shape");
  return it->second;
}

std::string point_key(std::size_t i, std::size_t k) { return "x/" + std::to_string(i) + "/" + std::to_string(k); }

/// Rebuilds a point; invalid manifold data is a malformed file.
template <class F>
auto validated(const std::string& where, F&& make) {
  try {
    return make();
  } catch (const Error& e) {
    format_error(where, std::string("invalid point: ") + e.what());
  }
}

void check_labels(const std::vector<int>& labels, int classes, const std::string& where) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) format_error(where + ": /labels/" + std::to_string(i), "label out of range");
  }
}

json spec_to_json(const diff::ModelSpec& s) {
  return json{{"model", diff::to_string(s.kind)},
              {"input", signature_to_json(s.input)},
              {"classes", s.classes},
              {"dfc_dims", s.dfc_dims}};
}

diff::ModelSpec spec_from_json(const json& j, const std::string& where) {
  diff::ModelSpec s;
  try {
    s.kind = diff::parse_model_kind(field<std::string>(j, "model", where));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::FormatError) throw;
    format_error(where + ": /model", e.what());
  }
  if (!j.contains("input")) format_error(where + ": /input", "missing field");
  s.input = signature_from_json(j["input"], where + ": /input");
  s.classes = field<int>(j, "classes", where);
  s.dfc_dims = field<std::vector<Eigen::Index>>(j, "dfc_dims", where);
  return s;
}

}  // namespace

// ---- blobs

void write_blob(const Blob& blob, const fs::path& path) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kBlobVersion);
  w.u32(static_cast<std::uint32_t>(blob.real.size() + blob.complex.size()));
  auto header = [&](const std::string& name, bool cplx_flag, Eigen::Index r, Eigen::Index c) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(cplx_flag ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(r));
    w.u64(static_cast<std::uint64_t>(c));
  };
  for (const auto& [name, m] : blob.real) {
    header(name, false, m.rows(), m.cols());
    for (Eigen::Index k = 0; k < m.size(); ++k) w.f64(m.data()[k]);
  }
  for (const auto& [name, m] : blob.complex) {
    header(name, true, m.rows(), m.cols());
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      w.f64(m.data()[k].real());
      w.f64(m.data()[k].imag());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::ConfigError, "cannot write " + path.string());
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) fail(ErrorKind::ConfigError, "write failed for " + path.string());
}

Blob read_blob(const fs::path& path) {
  Reader r(slurp(path), path.string());
  if (r.remaining() < 4 || r.str(4) != std::string(kMagic, 4)) r.error("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kBlobVersion) r.error("unsupported blob version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  Blob out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t len = r.u32();
    if (len == 0 || len > 4096) r.error("bad record name length");
    std::string name = r.str(len);
    const std::uint8_t kind = r.u8();
    if (kind > 1) r.error("bad element kind " + std::to_string(kind));
    const std::uint64_t rows = r.u64(), cols = r.u64();
    const std::uint64_t width = kind == 1 ? 16 : 8;
    if (rows > (1ULL << 31) || cols > (1ULL << 31) || rows * cols > r.remaining() / width) {
      r.error("record '" + name + "' shape " + std::to_string(rows) + "x" + std::to_string(cols) +
              " exceeds the file");
    }
    if (out.real.count(name) || out.complex.count(name)) r.error("duplicate record '" + name + "'");
    const auto er = static_cast<Eigen::Index>(rows), ec = static_cast<Eigen::Index>(cols);
    if (kind == 0) {
      Mat m(er, ec);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
      out.real.emplace(std::move(name), std::move(m));
    } else {
      CMat m(er, ec);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double re = r.f64();
        m.data()[i] = cplx(re, r.f64());
      }
      out.complex.emplace(std::move(name), std::move(m));
    }
  }
  if (!r.done()) r.error("trailing bytes after last record");
  return out;
}

fs::path blob_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

// ---- signatures

json signature_to_json(const gyro::Signature& sig) {
  json out = json::array();
  for (const auto& f : sig) out.push_back({{"kind", f.kind == gyro::FactorKind::Spd ? "spd" : "siegel"}, {"m", f.dim}});
  return out;
}

gyro::Signature signature_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) format_error(where, "signature must be a non-empty array");
  gyro::Signature sig;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "/" + std::to_string(i);
    if (!j[i].is_object()) format_error(at, "factor must be an object");
    const auto kind = field<std::string>(j[i], "kind", at);
    const auto m = field<Eigen::Index>(j[i], "m", at);
    if (m < 1) format_error(at + "/m", "must be >= 1");
    if (kind == "spd") {
      sig.push_back({gyro::FactorKind::Spd, m});
    } else if (kind == "siegel") {
      sig.push_back({gyro::FactorKind::Siegel, m});
    } else {
      format_error(at + "/kind", "unknown factor kind \"" + kind + "\"");
    }
  }
  return sig;
}

// ---- dataset

void save(const Dataset& d, const fs::path& manifest) {
  if (d.points.size() != d.labels.size()) fail(ErrorKind::ShapeMismatch, "points and labels differ in count");
  Blob blob;
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    if (d.points[i].signature() != d.signature) fail(ErrorKind::ShapeMismatch, "point signature mismatch");
    const auto& fs_ = d.points[i].factors();
    for (std::size_t k = 0; k < fs_.size(); ++k) {
      if (const auto* p = std::get_if<gyro::SPDPoint>(&fs_[k])) {
        blob.real.emplace(point_key(i, k), p->p.mat());
      } else {
        blob.complex.emplace(point_key(i, k), std::get<siegel::SiegelUpperPoint>(fs_[k]).complex());
      }
    }
  }
  json j = base_manifest("dataset", manifest);
  j["signature"] = signature_to_json(d.signature);
  j["classes"] = d.classes;
  j["labels"] = d.labels;
  j["split"] = {{"train", d.split.train}, {"test", d.split.test}};
  j["seed"] = d.seed;
  j["meta"] = d.meta;
  write_blob(blob, blob_path(manifest));
  spit(manifest, j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& manifest) {
  const json j = read_manifest(manifest, "dataset");
  const std::string where = manifest.string();
  Dataset d;
  if (!j.contains("signature")) format_error(where + ": /signature", "missing field");
  d.signature = signature_from_json(j["signature"], where + ": /signature");
  d.classes = field<int>(j, "classes", where);
  if (d.classes < 2) format_error(where + ": /classes", "need at least 2 classes");
  d.labels = field<std::vector<int>>(j, "labels", where);
  check_labels(d.labels, d.classes, where);
  d.seed = field<std::uint64_t>(j, "seed", where);
  if (!j.contains("split") || !j["split"].is_object()) format_error(where + ": /split", "missing or not an object");
  d.split.train = field<std::vector<std::size_t>>(j["split"], "train", where + ": /split");
  d.split.test = field<std::vector<std::size_t>>(j["split"], "test", where + ": /split");
  for (auto* part : {&d.split.train, &d.split.test}) {
    for (std::size_t idx : *part) {
      if (idx >= d.labels.size()) format_error(where + ": /split", "index " + std::to_string(idx) + " out of range");
    }
  }
  if (j.contains("meta")) d.meta = j["meta"];

  const Blob blob = load_blob_for(j, manifest);
  const std::string bfile = (manifest.parent_path() / j["blob"].get<std::string>()).string();
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    std::vector<gyro::Factor> factors;
    for (std::size_t k = 0; k < d.signature.size(); ++k) {
      const auto [kind, m] = d.signature[k];
      const std::string key = point_key(i, k);
      if (kind == gyro::FactorKind::Spd) {
        const Mat& p = need_real(blob, key, m, m, bfile);
        factors.emplace_back(validated(bfile + " '" + key + "'", [&] { return gyro::SPDPoint(p); }));
      } else {
        const CMat& z = need_complex(blob, key, m, m, bfile);
        factors.emplace_back(validated(bfile + " '" + key + "'", [&] { return siegel::SiegelUpperPoint::from_complex(z); }));
      }
    }
    d.points.emplace_back(std::move(factors));
  }
  if (blob.real.size() + blob.complex.size() != d.labels.size() * d.signature.size()) {
    format_error(bfile, "record count does not match the manifest");
  }
  return d;
}

// ---- embeddings

void save(const Embeddings& e, const fs::path& manifest) {
  if (e.points.empty()) fail(ErrorKind::InvalidInput, "no embedding points");
  if (!e.labels.empty() && e.labels.size() != e.points.size()) {
    fail(ErrorKind::ShapeMismatch, "points and labels differ in count");
  }
  Blob blob;
  for (std::size_t i = 0; i < e.points.size(); ++i) {
    if (e.points[i].dim() != e.points.front().dim()) fail(ErrorKind::ShapeMismatch, "embedding sizes differ");
    blob.complex.emplace(point_key(i, 0), e.points[i].complex());
  }
  json j = base_manifest("embeddings", manifest);
  j["signature"] = signature_to_json({{gyro::FactorKind::Siegel, e.points.front().dim()}});
  j["count"] = e.points.size();
  j["labels"] = e.labels;
  j["average_distortion"] = e.average_distortion;
  j["seed"] = e.seed;
  j["meta"] = e.meta;
  write_blob(blob, blob_path(manifest));
  spit(manifest, j.dump(2) + "\n");
}

Embeddings load_embeddings(const fs::path& manifest) {
  const json j = read_manifest(manifest, "embeddings");
  const std::string where = manifest.string();
  Embeddings e;
  if (!j.contains("signature")) format_error(where + ": /signature", "missing field");
  const gyro::Signature sig = signature_from_json(j["signature"], where + ": /signature");
  if (sig.size() != 1 || sig[0].kind != gyro::FactorKind::Siegel) {
    format_error(where + ": /signature", "embeddings must be single Siegel points");
  }
  const auto count = field<std::size_t>(j, "count", where);
  e.labels = field<std::vector<int>>(j, "labels", where);
  if (!e.labels.empty() && e.labels.size() != count) format_error(where + ": /labels", "length differs from count");
  e.average_distortion = field<double>(j, "average_distortion", where);
  e.seed = field<std::uint64_t>(j, "seed", where);
  if (j.contains("meta")) e.meta = j["meta"];
  const Blob blob = load_blob_for(j, manifest);
  const std::string bfile = (manifest.parent_path() / j["blob"].get<std::string>()).string();
  if (blob.real.size() + blob.complex.size() != count) format_error(bfile, "record count does not match the manifest");
  for (std::size_t i = 0; i < count; ++i) {
    const std::string key = point_key(i, 0);
    const CMat& z = need_complex(blob, key, sig[0].dim, sig[0].dim, bfile);
    e.points.push_back(validated(bfile + " '" + key + "'", [&] { return siegel::SiegelUpperPoint::from_complex(z); }));
  }
  return e;
}

// ---- checkpoints

void save(const Checkpoint& c, const fs::path& manifest) {
  const diff::Model model(c.spec);
  if (c.params.size() != model.layout().size()) fail(ErrorKind::ShapeMismatch, "parameter vector does not match the model");
  Blob blob;
  blob.real.emplace("params", c.params);
  json j = base_manifest("checkpoint", manifest);
  j["spec"] = spec_to_json(c.spec);
  j["seed"] = c.seed;
  j["meta"] = c.meta;
  write_blob(blob, blob_path(manifest));
  spit(manifest, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& manifest) {
  const json j = read_manifest(manifest, "checkpoint");
  const std::string where = manifest.string();
  Checkpoint c;
  if (!j.contains("spec") || !j["spec"].is_object()) format_error(where + ": /spec", "missing or not an object");
  c.spec = spec_from_json(j["spec"], where + ": /spec");
  c.seed = field<std::uint64_t>(j, "seed", where);
  if (j.contains("meta")) c.meta = j["meta"];
  Eigen::Index n = 0;
  try {
    n = diff::Model(c.spec).layout().size();
  } catch (const Error& e) {
    format_error(where + ": /spec", e.what());
  }
  const Blob blob = load_blob_for(j, manifest);
  const std::string bfile = (manifest.parent_path() / j["blob"].get<std::string>()).string();
  c.params = need_real(blob, "params", n, 1, bfile);
  return c;
}

// ---- helpers

Split stratified_split(const std::vector<int>& labels, int classes, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail(ErrorKind::ConfigError, "test fraction must be in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) fail(ErrorKind::InvalidInput, "label out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::mt19937_64 rng(seed);
  Split s;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

FeatureTable read_feature_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) format_error(path.string(), "cannot open");
  auto split_line = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) format_error(path.string(), "empty file (expected a header row)");
  const auto header = split_line(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  const long label_col = label_it == header.end() ? -1 : static_cast<long>(label_it - header.begin());

  FeatureTable t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    const std::string at = path.string() + ", line " + std::to_string(lineno);
    if (cells.size() != header.size()) {
      format_error(at, "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
    }
    Vec f(static_cast<Eigen::Index>(header.size()) - (label_col >= 0 ? 1 : 0));
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[c].size() || !std::isfinite(v)) {
        format_error(at + ", column " + std::to_string(c + 1), "not a finite number: \"" + cells[c] + "\"");
      }
      if (static_cast<long>(c) == label_col) {
        if (v != std::floor(v) || v < 0) format_error(at + ", column " + std::to_string(c + 1), "label must be a non-negative integer");
        t.labels.push_back(static_cast<int>(v));
      } else {
        f(k++) = v;
      }
    }
    t.features.push_back(std::move(f));
  }
  if (t.features.empty()) format_error(path.string(), "no data rows");
  if (t.features.front().size() == 0) format_error(path.string(), "no feature columns");
  return t;
}

}  // namespace siegelnet::data
