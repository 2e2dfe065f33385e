#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlgsc/numerics.hpp"
#include "mlgsc/rng.hpp"

namespace mlgsc {

/// Hyperspectral cube, height x width x bands. Values are held as double in
/// memory; on disk the payload is 32-bit little-endian float, so anything that
/// should survive a save/load round trip bit-exactly must be f32-representable.
struct HsiCube {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  Eigen::Index bands = 0;
  std::vector<double> values;  // band-interleaved by pixel: ((r*width + c)*bands + b)
  std::vector<double> wavelength_nm;  // optional, empty or size bands

  double& at(Eigen::Index r, Eigen::Index c, Eigen::Index b) {
    return values[static_cast<std::size_t>((r * width + c) * bands + b)];
  }
  double at(Eigen::Index r, Eigen::Index c, Eigen::Index b) const {
    return values[static_cast<std::size_t>((r * width + c) * bands + b)];
  }
  Eigen::Index pixels() const { return height * width; }

  /// pixels x bands matrix view of the cube, row-major pixel order.
  Matrix as_pixel_matrix() const;
};

/// Per-pixel class ids; 0 marks unlabeled background, classes are 1..K.
struct LabelMap {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  std::vector<std::uint16_t> labels;  // row-major

  std::uint16_t at(Eigen::Index r, Eigen::Index c) const {
    return labels[static_cast<std::size_t>(r * width + c)];
  }
  std::uint16_t& at(Eigen::Index r, Eigen::Index c) {
    return labels[static_cast<std::size_t>(r * width + c)];
  }
  int num_classes() const;
};

/// Half-open pixel ranges selecting a sub-scene.
struct SceneCrop {
  Eigen::Index row_begin = 0, row_end = 0;
  Eigen::Index col_begin = 0, col_end = 0;
};

// Container format: a <base>.hdr text header (magic "MLGSC-CUBE v1" or
// "MLGSC-LABELS v1") plus a <base>.raw payload of little-endian f32 / u16.
// Paths passed in may be the base or the .hdr file.
void save_cube(const HsiCube& cube, const std::string& path);
HsiCube load_cube(const std::string& path);
void save_labels(const LabelMap& labels, const std::string& path);
LabelMap load_labels(const std::string& path);

/// Min-max scales each band to [0,1]; constant bands map to 0. Idempotent.
HsiCube normalize_bands(const HsiCube& cube);

std::pair<HsiCube, LabelMap> crop_scene(const HsiCube& cube, const LabelMap& labels,
                                        const SceneCrop& crop);

struct SynthScene {
  HsiCube cube;
  LabelMap labels;
};

/// Synthetic labeled scene: Voronoi class regions over random seed pixels,
/// one smooth spectral signature per class, i.i.d. Gaussian noise. Every
/// class covers at least 1% of the pixels (regenerated internally up to a
/// retry cap). All values are rounded through f32 so the scene is identical
/// in memory and after a save/load round trip.
SynthScene synth_scene(int k_classes, Eigen::Index height, Eigen::Index width,
                       Eigen::Index bands, double noise_sigma, Rng& rng);

}  // namespace mlgsc
