#include "siegelnet/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "siegelnet/data/baselines.hpp"
#include "siegelnet/data/graph.hpp"
#include "siegelnet/data/radar.hpp"
#include "siegelnet/diff/trainer.hpp"

namespace siegelnet::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr int kMetricsSchema = 1;

/// Typed access to a flat config object that rejects unknown keys.
class ConfigReader {
 public:
  ConfigReader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) fail(ErrorKind::ConfigError, what_ + " config must be a JSON object");
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::ConfigError, what_ + " config: \"" + key + "\" has the wrong type");
    }
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) fail(ErrorKind::ConfigError, what_ + " config: missing \"" + key + "\"");
    return get<T>(key, T{});
  }

  const json& sub(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return j_.contains(key) ? j_.at(key) : empty;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) fail(ErrorKind::ConfigError, what_ + " config: unknown key \"" + key + "\"");
    }
  }

 private:
  const json& j_;
  std::string what_;
  std::set<std::string> used_;
};

fs::path resolve(const CommandContext& ctx, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : ctx.base_dir / path;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::ConfigError, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorKind::ConfigError, "write failed for " + path.string());
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

json mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {{"mean", nullptr}, {"std", nullptr}};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {{"mean", mean}, {"std", std::sqrt(var / static_cast<double>(xs.size()))}};
}

diff::TrainConfig train_config(const json& j, std::uint64_t seed) {
  ConfigReader r(j, "train");
  diff::TrainConfig tc;
  tc.lr = r.get("lr", tc.lr);
  tc.beta1 = r.get("beta1", tc.beta1);
  tc.beta2 = r.get("beta2", tc.beta2);
  tc.eps = r.get("eps", tc.eps);
  tc.epochs = r.get("epochs", tc.epochs);
  tc.batch_size = r.get("batch_size", tc.batch_size);
  r.finish();
  tc.seed = seed;
  tc.validate();
  return tc;
}

json train_config_json(const diff::TrainConfig& tc) {
  return {{"lr", tc.lr}, {"beta1", tc.beta1}, {"beta2", tc.beta2}, {"eps", tc.eps}, {"epochs", tc.epochs},
          {"batch_size", tc.batch_size}};
}

template <class T>
std::vector<T> pick(const std::vector<T>& xs, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(xs[i]);
  return out;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::FormatError:
    case ErrorKind::InvalidInput:
    case ErrorKind::ShapeMismatch:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ConfigError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::FormatError, path.string() + " @ byte " + std::to_string(e.byte) + ": invalid JSON");
  }
}

LabeledData load_labeled(const fs::path& manifest, double test_fraction, std::uint64_t split_seed) {
  const json head = read_json(manifest);
  const std::string kind = head.is_object() && head.contains("kind") && head["kind"].is_string() ? head["kind"].get<std::string>() : "";
  LabeledData out;
  out.kind = kind;
  if (kind == "dataset") {
    auto d = data::load_dataset(manifest);
    out.points = std::move(d.points);
    out.labels = std::move(d.labels);
    out.classes = d.classes;
    out.signature = d.signature;
    out.split = d.split;
    if (out.split.train.empty() || out.split.test.empty()) out.split = data::stratified_split(out.labels, out.classes, test_fraction, split_seed);
  } else if (kind == "embeddings") {
    auto e = data::load_embeddings(manifest);
    if (e.labels.empty()) fail(ErrorKind::ConfigError, manifest.string() + ": embeddings carry no labels");
    for (const auto& p : e.points) out.points.emplace_back(std::vector<gyro::Factor>{p});
    out.labels = std::move(e.labels);
    out.classes = *std::max_element(out.labels.begin(), out.labels.end()) + 1;
    if (out.classes < 2) fail(ErrorKind::ConfigError, manifest.string() + ": need at least 2 classes");
    out.signature = out.points.front().signature();
    out.split = data::stratified_split(out.labels, out.classes, test_fraction, split_seed);
  } else {
    fail(ErrorKind::FormatError, manifest.string() + ": /kind: expected \"dataset\" or \"embeddings\"");
  }
  return out;
}

json cmd_gen_radar(const json& config, const fs::path& out, const CommandContext& ctx) {
  json cfg = config;
  if (ctx.seed) {
    if (!cfg.is_object()) fail(ErrorKind::ConfigError, "radar config must be a JSON object");
    cfg["seed"] = *ctx.seed;
  }
  const auto rc = data::radar_config_from_json(cfg);
  const auto d = data::make_radar_dataset(rc);
  data::save(d, out);

  std::vector<int> counts(static_cast<std::size_t>(d.classes), 0);
  for (int l : d.labels) ++counts[static_cast<std::size_t>(l)];
  return {{"dataset", out.string()},
          {"samples", d.points.size()},
          {"signature", gyro::to_string(d.signature)},
          {"class_counts", counts},
          {"train", d.split.train.size()},
          {"test", d.split.test.size()},
          {"seed", d.seed}};
}

json cmd_embed_graph(const json& config, const fs::path& out, const CommandContext& ctx) {
  ConfigReader r(config, "embed-graph");
  const fs::path features = resolve(ctx, r.require<std::string>("features"));
  data::GraphEmbeddingConfig gc;
  gc.m = r.get("m", gc.m);
  gc.epochs = r.get("epochs", gc.epochs);
  gc.lr = r.get("lr", gc.lr);
  gc.lr_final_ratio = r.get("lr_final_ratio", gc.lr_final_ratio);
  gc.init_spread = r.get("init_spread", gc.init_spread);
  gc.seed = r.get("seed", gc.seed);
  r.finish();
  if (ctx.seed) gc.seed = *ctx.seed;
  gc.validate();

  const auto start = Clock::now();
  const auto table = data::read_feature_csv(features);
  const Mat g = data::cosine_graph(table.features);
  const auto emb = data::embed_graph(g, gc);

  data::Embeddings e;
  e.points = emb.points;
  e.labels = table.labels;
  e.average_distortion = emb.average_distortion;
  e.seed = gc.seed;
  e.meta = {{"features", features.string()},
            {"m", gc.m},
            {"epochs", gc.epochs},
            {"lr", gc.lr},
            {"lr_final_ratio", gc.lr_final_ratio},
            {"init_spread", gc.init_spread},
            {"distortion_trace_every_100", json::array()}};
  for (std::size_t k = 0; k < emb.trace.size(); k += 100) e.meta["distortion_trace_every_100"].push_back(emb.trace[k]);
  data::save(e, out);
  return {{"embeddings", out.string()},
          {"nodes", e.points.size()},
          {"m", gc.m},
          {"average_distortion", emb.average_distortion},
          {"wall_time_s", seconds_since(start)}};
}

json cmd_train_eval(const json& config, const fs::path& out, const CommandContext& ctx) {
  ConfigReader r(config, "train-eval");
  const auto kind = diff::parse_model_kind(r.require<std::string>("model"));
  const fs::path dataset = resolve(ctx, r.require<std::string>("dataset"));
  int runs = r.get("runs", 10);
  std::uint64_t seed = r.get<std::uint64_t>("seed", 0);
  const double test_fraction = r.get("test_fraction", 1.0 / 3.0);
  const auto dfc_dims = r.get<std::vector<Eigen::Index>>("dfc_dims", {});
  const auto checkpoint_dir = r.get<std::string>("checkpoint_dir", "");
  const json train_j = r.sub("train");
  r.finish();
  if (ctx.runs) runs = *ctx.runs;
  if (ctx.seed) seed = *ctx.seed;
  if (runs < 1) fail(ErrorKind::ConfigError, "runs must be >= 1");
  const diff::TrainConfig base = train_config(train_j, seed);

  const auto start = Clock::now();
  json run_list = json::array();
  std::vector<double> accs;
  std::string first_error;
  for (int run = 0; run < runs; ++run) {
    const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(run);
    const auto t0 = Clock::now();
    const LabeledData ld = load_labeled(dataset, test_fraction, run_seed);
    const diff::Model model({kind, ld.signature, ld.classes, dfc_dims});
    std::vector<diff::Sample> train, test;
    for (std::size_t i : ld.split.train) train.push_back({ld.points[i], ld.labels[i]});
    for (std::size_t i : ld.split.test) test.push_back({ld.points[i], ld.labels[i]});
    diff::TrainConfig tc = base;
    tc.seed = run_seed;
    json rec{{"run", run}, {"seed", run_seed}};
    try {
      const auto fit = diff::fit(model, train, {}, tc);
      const double acc = diff::accuracy(model, fit.params, test);
      accs.push_back(acc);
      json trace = json::array();
      for (const auto& e : fit.trace) trace.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"train_acc", e.train_acc}});
      rec.update({{"status", "ok"}, {"accuracy", acc}, {"best_epoch", fit.best_epoch}, {"loss_trace", trace}});
      if (!checkpoint_dir.empty()) {
        const fs::path dir = resolve(ctx, checkpoint_dir);
        fs::create_directories(dir);
        const fs::path ck = dir / ("run_" + std::to_string(run) + ".json");
        data::save(data::Checkpoint{model.spec(), fit.params, run_seed, {{"accuracy", acc}}}, ck);
        rec["checkpoint"] = ck.string();
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DivergedTraining) throw;
      if (first_error.empty()) first_error = e.what();
      rec.update({{"status", "diverged"}, {"error", e.what()}});
    }
    rec["wall_time_s"] = seconds_since(t0);
    run_list.push_back(std::move(rec));
  }
  if (accs.empty()) fail(ErrorKind::DivergedTraining, "all runs diverged; first: " + first_error);

  json m{{"schema_version", kMetricsSchema},
         {"kind", "metrics"},
         {"command", "train-eval"},
         {"model", diff::to_string(kind)},
         {"dataset", dataset.string()},
         {"train", train_config_json(base)},
         {"runs", run_list},
         {"completed_runs", accs.size()},
         {"wall_time_s", seconds_since(start)}};
  m.update(mean_std(accs));
  write_json(out, m);
  json summary = m;
  summary.erase("runs");
  return summary;
}

json cmd_baseline(const json& config, const fs::path& out, const CommandContext& ctx) {
  ConfigReader r(config, "baseline");
  const auto kind = r.require<std::string>("kind");
  const fs::path dataset = resolve(ctx, r.require<std::string>("dataset"));
  const int k = r.get("k", 5);
  std::uint64_t seed = r.get<std::uint64_t>("seed", 0);
  const double test_fraction = r.get("test_fraction", 1.0 / 3.0);
  ConfigReader lr(r.sub("logfeat"), "logfeat");
  data::LogFeatConfig lc;
  lc.epochs = lr.get("epochs", lc.epochs);
  lc.lr = lr.get("lr", lc.lr);
  lc.l2 = lr.get("l2", lc.l2);
  lr.finish();
  r.finish();
  if (ctx.seed) seed = *ctx.seed;
  if (kind != "knn" && kind != "logfeat-mlr") fail(ErrorKind::ConfigError, "baseline kind must be knn or logfeat-mlr");

  const auto start = Clock::now();
  const LabeledData ld = load_labeled(dataset, test_fraction, seed);
  const auto xtr = pick(ld.points, ld.split.train), xte = pick(ld.points, ld.split.test);
  const auto ytr = pick(ld.labels, ld.split.train), yte = pick(ld.labels, ld.split.test);
  std::vector<int> pred;
  json params;
  if (kind == "knn") {
    pred = data::knn_predict(xtr, ytr, xte, k, ld.classes);
    params = {{"k", k}};
  } else {
    data::LogFeatMlr mlr;
    mlr.fit(xtr, ytr, ld.classes, lc);
    pred = mlr.predict(xte);
    params = {{"epochs", lc.epochs}, {"lr", lc.lr}, {"l2", lc.l2}};
  }
  const double acc = data::accuracy(pred, yte);
  const double p = 1.0 / ld.classes;
  const json m{{"schema_version", kMetricsSchema},
               {"kind", "metrics"},
               {"command", "baseline"},
               {"baseline", kind},
               {"params", params},
               {"dataset", dataset.string()},
               {"seed", seed},
               {"accuracy", acc},
               {"test_size", yte.size()},
               {"chance", p},
               {"chance_std", std::sqrt(p * (1 - p) / static_cast<double>(yte.size()))},
               {"wall_time_s", seconds_since(start)}};
  write_json(out, m);
  return m;
}

}  // namespace siegelnet::cli
