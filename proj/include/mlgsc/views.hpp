#pragma once

#include <vector>

#include "mlgsc/data.hpp"
#include "mlgsc/numerics.hpp"
#include "mlgsc/rng.hpp"

namespace mlgsc {

enum class FeatureFamily { texture, spectral_spatial };

/// Which base graph feeds the self-expression dictionary.
enum class SxAdjacency { spectral, texture, mean };

struct ViewConfig {
  int pca_components_spectral = 4;
  int pca_components_texture = 3;
  int window_w = 5;                  // odd patch width
  int knn_k = 10;
  std::vector<int> se_radii = {1, 2, 3};  // strictly increasing disk radii
  double drop_prob_delta = 0.1;      // per-edge drop probability, in [0,1)
  SxAdjacency sx_adjacency = SxAdjacency::spectral;

  void validate() const;
};

/// One augmented view: node features, its kNN graph and the GCN propagation
/// operator D^{-1/2} (I + A) D^{-1/2}.
struct GraphView {
  Matrix features;        // N x d
  Matrix adjacency;       // N x N binary, symmetric, zero diagonal
  Matrix norm_adjacency;  // N x N symmetric
  FeatureFamily family = FeatureFamily::spectral_spatial;
  int augmentation_id = 0;
};

/// Grayscale morphological opening/closing with a city-block disk structuring
/// element; the element is clipped at the image border.
Matrix morph_opening(const Matrix& image, int radius);
Matrix morph_closing(const Matrix& image, int radius);

/// Mirror an out-of-range index back into [0, n) without repeating the edge
/// sample (… 2 1 | 0 1 2 … n-1 | n-2 …).
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n);

/// Morphological texture features for every pixel: PCA component images,
/// opening and closing per disk radius, stacked (PCs x radii x 2) and scaled
/// to unit max per dimension. Rows follow row-major pixel order.
Matrix build_texture_view(const HsiCube& cube, const ViewConfig& cfg);

/// Spectral-spatial features for every pixel: PCA-reduced bands, then the
/// flattened w x w reflect-padded patch around each pixel. Flattening order is
/// (patch row, patch col, component).
Matrix build_spectral_spatial_view(const HsiCube& cube, const ViewConfig& cfg);

/// Union-symmetrized k-nearest-neighbour adjacency under Euclidean distance.
/// Distance ties break toward the lower index; diagonal is zero.
Matrix knn_adjacency(const Matrix& features, int k);

/// Drops each undirected edge independently with probability delta (both
/// symmetric entries together). Never adds an edge.
Matrix augment_drop_edges(const Matrix& adjacency, double delta, Rng& rng);

/// D^{-1/2} (I + A) D^{-1/2} with D the degree matrix of I + A. Accepts any
/// symmetric nonnegative A with zero diagonal; isolated nodes keep a unit
/// self-loop.
Matrix normalize_adjacency(const Matrix& adjacency);

/// The four training views plus what self-expression and clustering need.
struct ViewBundle {
  std::vector<GraphView> views;        // [spec aug0, spec aug1, tex aug0, tex aug1]
  Matrix base_adjacency_spec;          // kNN graphs before edge dropping
  Matrix base_adjacency_tex;
  double drop_prob_delta = 0.0;        // rate the augmentations were built with
  Matrix sx_norm_adjacency;            // normalized non-augmented base graph
  std::vector<Eigen::Index> node_pixels;  // flat pixel index per node (row-major)
};

/// Builds both feature families on the labeled pixels and two edge-dropped
/// augmentations per family. Augmentation RNG streams are split
/// deterministically from `rng`.
ViewBundle build_views(const HsiCube& cube, const LabelMap& labels,
                       const ViewConfig& cfg, const Rng& rng);

}  // namespace mlgsc
