#pragma once

// simulate_ar → burg_parameterize → to_network_input, packaged as a dataset.

#include "siegelnet/data/burg.hpp"
#include "siegelnet/data/io.hpp"

namespace siegelnet::data {

struct RadarDatasetConfig {
  ARDatasetConfig ar;
  double test_fraction = 1.0 / 3.0;

  void validate() const;
};

/// Parameterization runs in parallel over samples; the result depends only
/// on the config.
Dataset make_radar_dataset(const RadarDatasetConfig& cfg);
Dataset make_radar_dataset_serial(const RadarDatasetConfig& cfg);

nlohmann::json to_json(const RadarDatasetConfig& cfg);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
RadarDatasetConfig radar_config_from_json(const nlohmann::json& j);

}  // namespace siegelnet::data
