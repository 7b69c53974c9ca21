#pragma once

// On-disk artifacts. Every artifact is a JSON manifest `<name>.json` plus a
// sibling blob `<name>.bin` of named float64 matrices:
//
//   "SGNB" u32 version u32 count
//   count × { u32 name_len, name, u8 complex, u64 rows, u64 cols, payload }
//
// Integers and doubles are little-endian, payload is column-major and complex
// entries are interleaved (re, im).

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "siegelnet/diff/model.hpp"

namespace siegelnet::data {

inline constexpr int kSchemaVersion = 1;

struct Blob {
  std::map<std::string, Mat> real;
  std::map<std::string, CMat> complex;
};

void write_blob(const Blob& blob, const std::filesystem::path& path);
/// FormatError naming the file and byte offset on truncation or bad headers.
Blob read_blob(const std::filesystem::path& path);

std::filesystem::path blob_path(const std::filesystem::path& manifest);

nlohmann::json signature_to_json(const gyro::Signature& sig);
gyro::Signature signature_from_json(const nlohmann::json& j, const std::string& where);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct Dataset {
  gyro::Signature signature;
  std::vector<gyro::ProductPoint> points;
  std::vector<int> labels;
  int classes = 0;
  Split split;
  std::uint64_t seed = 0;
  /// Generator settings and other provenance, stored verbatim.
  nlohmann::json meta = nlohmann::json::object();
};

struct Embeddings {
  std::vector<siegel::SiegelUpperPoint> points;
  std::vector<int> labels;  // may be empty
  double average_distortion = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json meta = nlohmann::json::object();
};

struct Checkpoint {
  diff::ModelSpec spec;
  Vec params;
  std::uint64_t seed = 0;
  nlohmann::json meta = nlohmann::json::object();
};

void save(const Dataset& d, const std::filesystem::path& manifest);
void save(const Embeddings& e, const std::filesystem::path& manifest);
void save(const Checkpoint& c, const std::filesystem::path& manifest);

Dataset load_dataset(const std::filesystem::path& manifest);
Embeddings load_embeddings(const std::filesystem::path& manifest);
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

/// Seeded stratified split: within each class a shuffled `test_fraction` share
/// goes to test. Indices are returned sorted.
Split stratified_split(const std::vector<int>& labels, int classes, double test_fraction, std::uint64_t seed);

/// Reads a numeric CSV with one header row. A column named "label" (if any)
/// is returned separately; FormatError with line number on bad rows.
struct FeatureTable {
  std::vector<Vec> features;
  std::vector<int> labels;  // empty without a label column
};
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace siegelnet::data
