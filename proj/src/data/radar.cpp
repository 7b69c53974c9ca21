#include "siegelnet/data/radar.hpp"

#include <exception>
#include <set>

namespace siegelnet::data {
namespace {

RadarSample parameterize(const ARSeries& s, int q) { return {burg_parameterize(s.values, q), s.label}; }

Dataset assemble(const RadarDatasetConfig& cfg, const std::vector<RadarSample>& samples) {
  Dataset d;
  d.signature = radar_signature(cfg.ar.m, cfg.ar.q);
  d.classes = cfg.ar.classes;
  d.seed = cfg.ar.seed;
  for (const auto& s : samples) {
    d.points.push_back(to_network_input(s.params));
    d.labels.push_back(s.label);
  }
  d.split = stratified_split(d.labels, d.classes, cfg.test_fraction, sample_seed(cfg.ar.seed, ~std::size_t{0}));
  d.meta = {{"generator", "radar"}, {"config", to_json(cfg)}};
  return d;
}

}  // namespace

void RadarDatasetConfig::validate() const {
  ar.validate();
  if (ar.length <= 4 * ar.q) fail(ErrorKind::ConfigError, "series length must exceed 4q for the Burg estimate");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail(ErrorKind::ConfigError, "test_fraction must be in (0, 1)");
}

Dataset make_radar_dataset(const RadarDatasetConfig& cfg) {
  cfg.validate();
  const auto series = simulate_ar(cfg.ar);
  std::vector<RadarSample> samples(series.size());
  std::vector<std::exception_ptr> errors(series.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < series.size(); ++i) {
    try {
      samples[i] = parameterize(series[i], cfg.ar.q);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return assemble(cfg, samples);
}

Dataset make_radar_dataset_serial(const RadarDatasetConfig& cfg) {
  cfg.validate();
  std::vector<RadarSample> samples;
  for (const auto& s : simulate_ar_serial(cfg.ar)) samples.push_back(parameterize(s, cfg.ar.q));
  return assemble(cfg, samples);
}

nlohmann::json to_json(const RadarDatasetConfig& cfg) {
  return {{"m", cfg.ar.m},
          {"q", cfg.ar.q},
          {"classes", cfg.ar.classes},
          {"samples", cfg.ar.samples},
          {"length", cfg.ar.length},
          {"separation", cfg.ar.separation},
          {"radius", cfg.ar.radius},
          {"spread", cfg.ar.spread},
          {"seed", cfg.ar.seed},
          {"test_fraction", cfg.test_fraction}};
}

RadarDatasetConfig radar_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::ConfigError, "radar config must be a JSON object");
  static const std::set<std::string> known = {"m",      "q",      "classes", "samples", "length",
                                              "separation", "radius", "spread", "seed",  "test_fraction"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) fail(ErrorKind::ConfigError, "unknown radar config key \"" + key + "\"");
  }
  RadarDatasetConfig cfg;
  auto get = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::ConfigError, std::string("radar config key \"") + key + "\" has the wrong type");
    }
  };
  get("m", cfg.ar.m);
  get("q", cfg.ar.q);
  get("classes", cfg.ar.classes);
  get("samples", cfg.ar.samples);
  get("length", cfg.ar.length);
  get("separation", cfg.ar.separation);
  get("radius", cfg.ar.radius);
  get("spread", cfg.ar.spread);
  get("seed", cfg.ar.seed);
  get("test_fraction", cfg.test_fraction);
  cfg.validate();
  return cfg;
}

}  // namespace siegelnet::data
