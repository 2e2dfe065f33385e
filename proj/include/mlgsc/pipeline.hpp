#pragma once

#include <optional>
#include <string>

#include "mlgsc/config.hpp"

namespace mlgsc {

// Deterministic RNG stream ids hanging off the master seed. Views use 0..3
// inside build_views.
inline constexpr std::uint64_t kSynthStream = 8;
inline constexpr std::uint64_t kClusterStream = 18;

struct PreparedScene {
  HsiCube cube;    // cropped and band-normalized
  LabelMap labels;
};

/// Loads the dataset pair or generates the synthetic scene, applies the crop
/// and per-band normalization.
PreparedScene prepare_scene(const RunConfig& cfg);

ViewBundle prepare_views(const PreparedScene& scene, const RunConfig& cfg);

/// Inference-only forward: embeddings under the trained parameters, family
/// means, fusion. Mirrors the training forward exactly.
Matrix fused_forward(const ViewBundle& bundle, const TrainState& state,
                     const TrainConfig& cfg);

struct ClusterOutput {
  ClusteringResult clusters;
  LabelMap pred_map;  // cluster id + 1 on labeled pixels, 0 elsewhere
  std::optional<MetricsReport> metrics;
};

/// Affinity from the trained C, spectral clustering, metrics against the
/// scene labels when present.
ClusterOutput cluster_with_state(const PreparedScene& scene, const ViewBundle& bundle,
                                 const TrainState& state, const RunConfig& cfg,
                                 bool with_metrics = true);

/// P6 portable pixmap with the fixed 16-color palette; background black.
std::string render_cluster_map_ppm(const LabelMap& map);

}  // namespace mlgsc
