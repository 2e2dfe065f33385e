#pragma once

#include <string>

#include "mlgsc/clustering.hpp"
#include "mlgsc/data.hpp"
#include "mlgsc/trainer.hpp"
#include "mlgsc/views.hpp"

namespace mlgsc {

/// Full run description: either a dataset file pair or synthetic-scene
/// parameters, plus every module configuration.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  int n_clusters = 3;

  std::string cube_path;    // dataset mode when nonempty
  std::string labels_path;
  bool synthetic = true;
  int synth_classes = 3;
  Eigen::Index synth_height = 30;
  Eigen::Index synth_width = 30;
  Eigen::Index synth_bands = 20;
  double synth_noise_sigma = 0.02;

  bool crop_enabled = false;
  SceneCrop crop;

  ViewConfig views;
  TrainConfig train;

  NmiNorm nmi_norm = NmiNorm::arithmetic;
  int affinity_topq = 0;  // 0 disables sparsification

  void validate() const;
};

/// Key-value config text, flat sections mirroring the module configs.
RunConfig parse_run_config(const std::string& text);
std::string serialize_run_config(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

}  // namespace mlgsc
