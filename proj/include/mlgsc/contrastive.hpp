#pragma once

#include <utility>
#include <vector>

#include "mlgsc/encoder.hpp"
#include "mlgsc/numerics.hpp"
#include "mlgsc/rng.hpp"

namespace mlgsc {

struct ContrastiveConfig {
  double tau = 0.05;  // temperature
};

struct NodeContrastResult {
  double value = 0.0;
  Matrix grad_a;
  Matrix grad_b;
};

/// Symmetrized InfoNCE over paired node embeddings under cosine similarity.
/// For anchor z_i the positive is z'_i; negatives are the other rows of both
/// matrices. The value averages both anchor directions over 2N terms.
NodeContrastResult node_contrast(const Matrix& z_a, const Matrix& z_b,
                                 const ContrastiveConfig& cfg);

struct GraphContrastResult {
  double value = 0.0;
  // gradients aligned with the inputs: one pair of vectors per positive pair
  std::vector<std::pair<Vector, Vector>> grad_positives;
  std::vector<Vector> grad_negatives;
};

/// Graph-level InfoNCE. Vectors are L2-normalized internally; each positive
/// pair (s, s') contributes -log exp(s^T s'/tau) / (positive + negatives) with
/// the first element as anchor, averaged over pairs. With no negatives the
/// loss is exactly zero.
GraphContrastResult graph_contrast(const std::vector<std::pair<Vector, Vector>>& positives,
                                   const std::vector<Vector>& negatives,
                                   const ContrastiveConfig& cfg);

/// Negative-sample source for graph-level contrast: row-shuffles the node
/// embeddings with the seeded generator and attention-pools the result.
Vector corrupt_graph_representation(const Matrix& z, const AttentionParams& params,
                                    Rng& rng);

}  // namespace mlgsc
