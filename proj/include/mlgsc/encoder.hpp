#pragma once

#include "mlgsc/numerics.hpp"
#include "mlgsc/rng.hpp"
#include "mlgsc/views.hpp"

namespace mlgsc {

/// Two-layer GCN weights; one set per feature family, shared by the family's
/// two augmentations.
struct GcnParams {
  Matrix w1;  // d_in x d_hidden
  Matrix w2;  // d_hidden x d_out
};

/// Glorot-uniform initialization with the seeded generator, row-major fill.
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Forward intermediates needed by the backward pass. `norm_adj` points into
/// the owning GraphView and must outlive the cache; the weights are copied so
/// the cache stays valid for exactly the parameters it was computed with.
struct GcnCache {
  const Matrix* norm_adj = nullptr;
  Matrix w1, w2;
  Matrix prop1;  // A_hat X
  Matrix pre1;   // prop1 W1
  Matrix prop2;  // A_hat relu(pre1)
  Matrix pre2;   // prop2 W2
};

struct NodeEmbeddings {
  Matrix z;  // N x d_out = relu(pre2)
  int view_id = 0;
  GcnCache cache;
};

/// Z = relu(A_hat relu(A_hat X W1) W2).
NodeEmbeddings gcn_forward(const GraphView& view, const GcnParams& params);

struct GcnGrads {
  Matrix w1;
  Matrix w2;
  Matrix x;  // filled only when requested
};

/// Analytic gradients through the two-layer composition; the relu subgradient
/// at exactly zero is taken as zero.
GcnGrads gcn_backward(const Matrix& grad_z, const GcnCache& cache,
                      bool want_input_grad = false);

/// Attention scoring weights, d_out x 1, one per feature family.
struct AttentionParams {
  Matrix m;
};

struct PoolCache {
  const Matrix* z_scores = nullptr;  // rows the attention scores come from
  const Matrix* z_values = nullptr;  // rows the weighted sum runs over
  Matrix m;
  Vector tanh_scores;  // tanh(Z m)
  Vector alpha;        // softmax over nodes
};

/// Pooled global representation S = Z^T alpha with alpha = softmax(tanh(Z m)).
struct GraphRepresentation {
  Vector s;
  Vector alpha;
  PoolCache cache;
};

GraphRepresentation attention_pool(const Matrix& z, const AttentionParams& params);

/// Pooling with decoupled inputs: scores from `z_scores`, the weighted sum
/// over `z_values`. attention_pool is the z_scores == z_values case; the
/// mismatched form is the corruption used for graph-level negatives.
GraphRepresentation attention_pool_mismatched(const Matrix& z_scores,
                                              const Matrix& z_values,
                                              const AttentionParams& params);

struct PoolGrads {
  Matrix m;
  Matrix z;         // combined gradient when scores and values share one matrix
  Matrix z_scores;  // split gradients for the mismatched form
  Matrix z_values;
};

PoolGrads attention_pool_backward(const Vector& grad_s, const PoolCache& cache);

}  // namespace mlgsc
