#pragma once

// Experiment commands behind the `siegelnet` executable. Each takes a parsed
// JSON config (relative paths resolve against `base_dir`), writes its
// artifact to `out` and returns the summary it printed or wrote.

#include <filesystem>
#include <optional>

#include "json.hpp"

#include "siegelnet/data/io.hpp"
#include "siegelnet/error.hpp"

namespace siegelnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// 1 for usage/config/format/input errors, 2 for numerical failures.
int exit_code(ErrorKind kind);

/// Parses a JSON file; FormatError with the byte offset on bad syntax.
nlohmann::json read_json(const std::filesystem::path& path);

struct CommandContext {
  std::filesystem::path base_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::optional<int> runs;            // overrides the config run count
};

/// Radar config keys (see README); writes a dataset artifact.
nlohmann::json cmd_gen_radar(const nlohmann::json& config, const std::filesystem::path& out, const CommandContext& ctx);

/// {"features": csv, "m", "epochs", "lr", "lr_final_ratio", "init_spread", "seed"}; writes embeddings.
nlohmann::json cmd_embed_graph(const nlohmann::json& config, const std::filesystem::path& out, const CommandContext& ctx);

/// {"model", "dataset", "runs", "seed", "train": {...}, "dfc_dims", "test_fraction", "checkpoint_dir"};
/// writes a metrics file.
nlohmann::json cmd_train_eval(const nlohmann::json& config, const std::filesystem::path& out, const CommandContext& ctx);

/// {"kind": "knn" | "logfeat-mlr", "dataset", "k", "seed", "test_fraction", "logfeat": {...}}; writes metrics.
nlohmann::json cmd_baseline(const nlohmann::json& config, const std::filesystem::path& out, const CommandContext& ctx);

/// Points, labels and a train/test split from a dataset or embeddings
/// artifact. Embeddings carry no split, so one is drawn from `split_seed`.
struct LabeledData {
  std::vector<gyro::ProductPoint> points;
  std::vector<int> labels;
  int classes = 0;
  gyro::Signature signature;
  data::Split split;
  std::string kind;  // "dataset" or "embeddings"
};
LabeledData load_labeled(const std::filesystem::path& manifest, double test_fraction, std::uint64_t split_seed);

}  // namespace siegelnet::cli
