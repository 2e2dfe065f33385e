#include "mlgsc/encoder.hpp"

#include <cmath>
#include <string>

#include "mlgsc/errors.hpp"

namespace mlgsc {

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-limit, limit);
  return w;
}

NodeEmbeddings gcn_forward(const GraphView& view, const GcnParams& params) {
  if (view.features.cols() != params.w1.rows())
    throw ContractViolation("gcn_forward: feature dim " + std::to_string(view.features.cols()) +
                            " does not match W1 rows " + std::to_string(params.w1.rows()));
  if (params.w1.cols() != params.w2.rows())
    throw ContractViolation("gcn_forward: W1 cols do not match W2 rows");

  NodeEmbeddings out;
  GcnCache& c = out.cache;
  c.norm_adj = &view.norm_adjacency;
  c.w1 = params.w1;
  c.w2 = params.w2;
  c.prop1 = view.norm_adjacency * view.features;
  c.pre1 = c.prop1 * params.w1;
  c.prop2 = view.norm_adjacency * c.pre1.cwiseMax(0.0);
  c.pre2 = c.prop2 * params.w2;
  out.z = c.pre2.cwiseMax(0.0);
  if (!out.z.allFinite()) throw NumericFailure("gcn_forward: non-finite embeddings");
  return out;
}

GcnGrads gcn_backward(const Matrix& grad_z, const GcnCache& cache, bool want_input_grad) {
  if (cache.norm_adj == nullptr || cache.w1.size() == 0)
    throw ContractViolation("gcn_backward: cache not populated by a forward pass");
  if (grad_z.rows() != cache.pre2.rows() || grad_z.cols() != cache.pre2.cols())
    throw ContractViolation("gcn_backward: upstream gradient shape mismatch");

  const Matrix& a_hat = *cache.norm_adj;
  const Matrix d_pre2 =
      grad_z.cwiseProduct((cache.pre2.array() > 0.0).cast<double>().matrix());

  GcnGrads g;
  g.w2 = cache.prop2.transpose() * d_pre2;
  // A_hat is symmetric, so A_hat^T collapses to A_hat throughout.
  const Matrix d_h1 = a_hat * (d_pre2 * cache.w2.transpose());
  const Matrix d_pre1 =
      d_h1.cwiseProduct((cache.pre1.array() > 0.0).cast<double>().matrix());
  g.w1 = cache.prop1.transpose() * d_pre1;
  if (want_input_grad) g.x = a_hat * (d_pre1 * cache.w1.transpose());
  return g;
}

GraphRepresentation attention_pool_mismatched(const Matrix& z_scores,
                                              const Matrix& z_values,
                                              const AttentionParams& params) {
  if (z_scores.cols() != params.m.rows() || params.m.cols() != 1)
    throw ContractViolation("attention_pool: M must be d x 1 with d matching Z");
  if (z_values.rows() != z_scores.rows() || z_values.cols() != z_scores.cols())
    throw ContractViolation("attention_pool: score and value shapes differ");

  GraphRepresentation out;
  out.cache.z_scores = &z_scores;
  out.cache.z_values = &z_values;
  out.cache.m = params.m;
  out.cache.tanh_scores = (z_scores * params.m).col(0).array().tanh().matrix();
  // stable softmax over nodes
  Vector shifted = out.cache.tanh_scores.array() - out.cache.tanh_scores.maxCoeff();
  Vector expd = shifted.array().exp().matrix();
  out.cache.alpha = expd / expd.sum();
  out.alpha = out.cache.alpha;
  out.s = z_values.transpose() * out.alpha;

  const double alpha_sum = out.alpha.sum();
  if (std::abs(alpha_sum - 1.0) > 1e-9 || out.alpha.minCoeff() <= 0.0)
    throw NumericFailure("attention_pool: softmax weights invalid (sum " +
                         std::to_string(alpha_sum) + ")");
  return out;
}

GraphRepresentation attention_pool(const Matrix& z, const AttentionParams& params) {
  return attention_pool_mismatched(z, z, params);
}

PoolGrads attention_pool_backward(const Vector& grad_s, const PoolCache& cache) {
  if (cache.z_scores == nullptr || cache.z_values == nullptr)
    throw ContractViolation("attention_pool_backward: cache not populated");
  const Matrix& zs = *cache.z_scores;
  const Matrix& zv = *cache.z_values;
  if (grad_s.size() != zv.cols())
    throw ContractViolation("attention_pool_backward: gradient length mismatch");

  const Vector& alpha = cache.alpha;
  // S = Zv^T alpha: direct parts
  const Vector d_alpha = zv * grad_s;
  PoolGrads g;
  g.z_values = alpha * grad_s.transpose();

  // softmax then tanh jacobians
  const Vector d_scores = alpha.cwiseProduct(d_alpha) - alpha * alpha.dot(d_alpha);
  const Vector d_pre_tanh =
      d_scores.cwiseProduct((1.0 - cache.tanh_scores.array().square()).matrix());

  g.m = zs.transpose() * d_pre_tanh;
  g.z_scores = d_pre_tanh * cache.m.transpose();
  if (cache.z_scores == cache.z_values) g.z = g.z_scores + g.z_values;
  return g;
}

}  // namespace mlgsc
