#include "mlgsc/contrastive.hpp"

#include <cmath>
#include <string>

#include "mlgsc/errors.hpp"

namespace mlgsc {

namespace {

constexpr double kMinNorm = 1e-12;

// Row-normalizes and remembers the norms for the backward chain.
Matrix normalize_rows(const Matrix& z, Vector& norms, const char* side) {
  norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    if (norms(i) < kMinNorm)
      throw ContractViolation(std::string("node_contrast: zero-norm embedding row ") +
                              std::to_string(i) + " in " + side + " input");
  return norms.cwiseInverse().asDiagonal() * z;
}

// d/dz of a loss given d/du with u = z/|z|: (g - (u.g) u) / |z|, per row.
Matrix chain_row_normalization(const Matrix& grad_u, const Matrix& u, const Vector& norms) {
  Matrix out(grad_u.rows(), grad_u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double proj = u.row(i).dot(grad_u.row(i));
    out.row(i) = (grad_u.row(i) - proj * u.row(i)) / norms(i);
  }
  return out;
}

Vector normalize_vec(const Vector& v, double& norm, const char* what) {
  norm = v.norm();
  if (norm < kMinNorm)
    throw ContractViolation(std::string("graph_contrast: zero-norm ") + what + " vector");
  return v / norm;
}

Vector chain_vec_normalization(const Vector& grad_u, const Vector& u, double norm) {
  return (grad_u - u.dot(grad_u) * u) / norm;
}

}  // namespace

NodeContrastResult node_contrast(const Matrix& z_a, const Matrix& z_b,
                                 const ContrastiveConfig& cfg) {
  if (z_a.rows() != z_b.rows() || z_a.cols() != z_b.cols())
    throw ContractViolation("node_contrast: inputs must have equal shape");
  if (!(cfg.tau > 0.0)) throw ContractViolation("node_contrast: tau must be positive");
  const Eigen::Index n = z_a.rows();
  const double tau = cfg.tau;

  Vector norms_a, norms_b;
  const Matrix u = normalize_rows(z_a, norms_a, "first");
  const Matrix v = normalize_rows(z_b, norms_b, "second");

  const Matrix sim_ab = u * v.transpose();
  const Matrix sim_aa = u * u.transpose();
  const Matrix sim_bb = v * v.transpose();

  const Matrix e_ab = (sim_ab / tau).array().exp();
  Matrix e_aa = (sim_aa / tau).array().exp();
  Matrix e_bb = (sim_bb / tau).array().exp();
  e_aa.diagonal().setZero();  // the anchor is never its own negative
  e_bb.diagonal().setZero();

  // denominators per anchor: cross-view row/column sums plus intra-view sums
  const Vector denom_a = e_ab.rowwise().sum() + e_aa.rowwise().sum();
  const Vector denom_b = e_ab.colwise().sum().transpose() + e_bb.rowwise().sum();

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += -2.0 * sim_ab(i, i) / tau + std::log(denom_a(i)) + std::log(denom_b(i));
  }
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  NodeContrastResult out;
  out.value = loss * scale;

  // gradient matrices w.r.t. the three similarity blocks
  Matrix g_ab = e_ab.cwiseProduct((denom_a * tau).cwiseInverse().replicate(1, n));
  g_ab += e_ab.cwiseProduct(((denom_b * tau).cwiseInverse().transpose()).replicate(n, 1));
  g_ab.diagonal().array() -= 2.0 / tau;
  const Matrix g_aa = e_aa.cwiseProduct((denom_a * tau).cwiseInverse().replicate(1, n));
  const Matrix g_bb = e_bb.cwiseProduct((denom_b * tau).cwiseInverse().replicate(1, n));

  const Matrix grad_u = scale * (g_ab * v + (g_aa + g_aa.transpose()) * u);
  const Matrix grad_v = scale * (g_ab.transpose() * u + (g_bb + g_bb.transpose()) * v);
  out.grad_a = chain_row_normalization(grad_u, u, norms_a);
  out.grad_b = chain_row_normalization(grad_v, v, norms_b);
  if (!std::isfinite(out.value) || !out.grad_a.allFinite() || !out.grad_b.allFinite())
    throw NumericFailure("node_contrast: non-finite loss or gradients");
  return out;
}

GraphContrastResult graph_contrast(const std::vector<std::pair<Vector, Vector>>& positives,
                                   const std::vector<Vector>& negatives,
                                   const ContrastiveConfig& cfg) {
  if (positives.empty())
    throw ContractViolation("graph_contrast: at least one positive pair required");
  if (!(cfg.tau > 0.0)) throw ContractViolation("graph_contrast: tau must be positive");
  const double tau = cfg.tau;
  const Eigen::Index dim = positives.front().first.size();
  for (const auto& [p, q] : positives)
    if (p.size() != dim || q.size() != dim)
      throw ContractViolation("graph_contrast: vector lengths differ");
  for (const auto& v : negatives)
    if (v.size() != dim) throw ContractViolation("graph_contrast: vector lengths differ");

  const std::size_t n_pos = positives.size();
  const std::size_t n_neg = negatives.size();

  std::vector<double> p_norms(n_pos), q_norms(n_pos), neg_norms(n_neg);
  std::vector<Vector> p_hat(n_pos), q_hat(n_pos), neg_hat(n_neg);
  for (std::size_t t = 0; t < n_pos; ++t) {
    p_hat[t] = normalize_vec(positives[t].first, p_norms[t], "anchor");
    q_hat[t] = normalize_vec(positives[t].second, q_norms[t], "positive");
  }
  for (std::size_t j = 0; j < n_neg; ++j)
    neg_hat[j] = normalize_vec(negatives[j], neg_norms[j], "negative");

  GraphContrastResult out;
  std::vector<Vector> grad_p(n_pos, Vector::Zero(dim)), grad_q(n_pos, Vector::Zero(dim));
  std::vector<Vector> grad_neg(n_neg, Vector::Zero(dim));

  const double inv_t = 1.0 / static_cast<double>(n_pos);
  for (std::size_t t = 0; t < n_pos; ++t) {
    const double sim_pos = p_hat[t].dot(q_hat[t]);
    double denom = std::exp(sim_pos / tau);
    std::vector<double> e_neg(n_neg);
    for (std::size_t j = 0; j < n_neg; ++j) {
      e_neg[j] = std::exp(p_hat[t].dot(neg_hat[j]) / tau);
      denom += e_neg[j];
    }
    out.value += inv_t * (-sim_pos / tau + std::log(denom));

    const double d_sim_pos =
        inv_t * (-1.0 / tau + std::exp(sim_pos / tau) / (tau * denom));
    grad_p[t] += d_sim_pos * q_hat[t];
    grad_q[t] += d_sim_pos * p_hat[t];
    for (std::size_t j = 0; j < n_neg; ++j) {
      const double d_sim_neg = inv_t * e_neg[j] / (tau * denom);
      grad_p[t] += d_sim_neg * neg_hat[j];
      grad_neg[j] += d_sim_neg * p_hat[t];
    }
  }

  out.grad_positives.resize(n_pos);
  for (std::size_t t = 0; t < n_pos; ++t) {
    out.grad_positives[t].first = chain_vec_normalization(grad_p[t], p_hat[t], p_norms[t]);
    out.grad_positives[t].second = chain_vec_normalization(grad_q[t], q_hat[t], q_norms[t]);
  }
  out.grad_negatives.resize(n_neg);
  for (std::size_t j = 0; j < n_neg; ++j)
    out.grad_negatives[j] = chain_vec_normalization(grad_neg[j], neg_hat[j], neg_norms[j]);
  return out;
}

Vector corrupt_graph_representation(const Matrix& z, const AttentionParams& params,
                                    Rng& rng) {
  const Eigen::Index n = z.rows();
  if (n < 2) throw ContractViolation("corrupt_graph_representation: need N >= 2");
  const std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(n));
  Matrix shuffled(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    shuffled.row(i) = z.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
  // wrong wiring: attention weights from the true order, features shuffled
  return attention_pool_mismatched(z, shuffled, params).s;
}

}  // namespace mlgsc
