#include "mlgsc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mlgsc/errors.hpp"

namespace mlgsc {

Matrix affinity_from_c(const Matrix& c) {
  if (c.rows() != c.cols()) throw ContractViolation("affinity_from_c: C must be square");
  if (c.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw ContractViolation("affinity_from_c: diag(C) must be zero");
  const Matrix abs_c = c.cwiseAbs();
  return 0.5 * (abs_c + abs_c.transpose());
}

Matrix affinity_top_q(const Matrix& w, int q) {
  const Eigen::Index n = w.rows();
  if (q <= 0 || q >= n) return w;
  // an entry survives if it ranks in the top q of its row or of its column
  Matrix keep = Matrix::Zero(n, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
    std::partial_sort(order.begin(), order.begin() + q, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (w(i, a) != w(i, b)) return w(i, a) > w(i, b);
                        return a < b;
                      });
    for (int t = 0; t < q; ++t) {
      const Eigen::Index j = order[static_cast<std::size_t>(t)];
      keep(i, j) = 1.0;
      keep(j, i) = 1.0;
    }
  }
  return w.cwiseProduct(keep);
}

ClusteringResult spectral_cluster(const Matrix& w, int k, Rng& rng) {
  const Eigen::Index n = w.rows();
  if (w.cols() != n) throw ContractViolation("spectral_cluster: W must be square");
  if (k < 2) throw ContractViolation("spectral_cluster: k must be >= 2");
  if (k > n) throw ContractViolation("spectral_cluster: k exceeds node count");
  if (w.minCoeff() < 0.0)
    throw ContractViolation("spectral_cluster: W must be nonnegative");

  ClusteringResult out;
  out.k = k;

  Vector degree = w.rowwise().sum();
  out.degenerate = degree.maxCoeff() <= 0.0;
  const Vector inv_sqrt_deg =
      degree.cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
  Matrix l_sym = -(inv_sqrt_deg.asDiagonal() * w * inv_sqrt_deg.asDiagonal());
  l_sym.diagonal().array() += 1.0;
  // enforce exact symmetry before the eigensolver
  l_sym = 0.5 * (l_sym + l_sym.transpose()).eval();

  const SymEig eig = sym_eig(l_sym);
  Matrix embedding = eig.eigenvectors.leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 1e-12) embedding.row(i) /= norm;
  }

  out.labels = kmeans(embedding, k, 10, 300, rng).labels;
  return out;
}

namespace {

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

}  // namespace

MetricsReport evaluate(const std::vector<int>& pred, const std::vector<int>& truth,
                       NmiNorm norm) {
  if (pred.size() != truth.size())
    throw ContractViolation("evaluate: prediction and truth lengths differ");
  if (pred.empty()) throw ContractViolation("evaluate: empty label vectors");
  const std::size_t n = pred.size();

  int k_pred = 0, k_truth = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pred[i] < 0 || truth[i] < 0)
      throw ContractViolation("evaluate: labels must be nonnegative (0-based)");
    k_pred = std::max(k_pred, pred[i] + 1);
    k_truth = std::max(k_truth, truth[i] + 1);
  }
  const int k = std::max(k_pred, k_truth);

  MetricsReport out;
  out.confusion = Matrix::Zero(k, k);
  for (std::size_t i = 0; i < n; ++i) out.confusion(pred[i], truth[i]) += 1.0;

  out.matched_permutation = hungarian_best_match(out.confusion);

  double agree = 0.0;
  for (int i = 0; i < k; ++i) agree += out.confusion(i, out.matched_permutation[i]);
  out.oa = agree / static_cast<double>(n);

  // NMI from the raw contingency table (alignment-invariant)
  std::vector<double> p_pred(static_cast<std::size_t>(k), 0.0),
      p_truth(static_cast<std::size_t>(k), 0.0);
  double mi = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      p_pred[static_cast<std::size_t>(i)] += out.confusion(i, j) / static_cast<double>(n);
      p_truth[static_cast<std::size_t>(j)] += out.confusion(i, j) / static_cast<double>(n);
    }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double pij = out.confusion(i, j) / static_cast<double>(n);
      if (pij > 0.0)
        mi += pij * std::log(pij / (p_pred[static_cast<std::size_t>(i)] *
                                    p_truth[static_cast<std::size_t>(j)]));
    }
  const double h_pred = entropy(p_pred), h_truth = entropy(p_truth);
  double denom = 0.0;
  switch (norm) {
    case NmiNorm::arithmetic:
      denom = 0.5 * (h_pred + h_truth);
      break;
    case NmiNorm::geometric:
      denom = std::sqrt(h_pred * h_truth);
      break;
    case NmiNorm::max:
      denom = std::max(h_pred, h_truth);
      break;
  }
  if (denom > 1e-15) {
    out.nmi = std::min(1.0, std::max(0.0, mi / denom));
  } else {
    // both partitions trivial: identical iff single shared cluster
    out.nmi = (h_pred <= 1e-15 && h_truth <= 1e-15) ? 1.0 : 0.0;
  }

  // kappa on aligned labels
  double p_e = 0.0;
  for (int j = 0; j < k; ++j) {
    double aligned_pred_count = 0.0;
    for (int i = 0; i < k; ++i)
      if (out.matched_permutation[i] == j) aligned_pred_count += out.confusion.row(i).sum();
    p_e += (aligned_pred_count / static_cast<double>(n)) *
           p_truth[static_cast<std::size_t>(j)];
  }
  if (1.0 - p_e > 1e-15)
    out.kappa = (out.oa - p_e) / (1.0 - p_e);
  else
    out.kappa = out.oa >= 1.0 - 1e-15 ? 1.0 : 0.0;

  out.per_class_accuracy.assign(static_cast<std::size_t>(k_truth), 0.0);
  for (int j = 0; j < k_truth; ++j) {
    const double total = p_truth[static_cast<std::size_t>(j)] * static_cast<double>(n);
    if (total <= 0.0) continue;
    for (int i = 0; i < k; ++i)
      if (out.matched_permutation[i] == j)
        out.per_class_accuracy[static_cast<std::size_t>(j)] += out.confusion(i, j) / total;
  }
  return out;
}

std::string serialize_metrics(const MetricsReport& report) {
  std::ostringstream out;
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s: %.6f\n", key, v);
    out << buf;
  };
  put("oa", report.oa);
  put("nmi", report.nmi);
  put("kappa", report.kappa);
  for (std::size_t j = 0; j < report.per_class_accuracy.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "class_%zu_accuracy: %.6f\n", j + 1,
                  report.per_class_accuracy[j]);
    out << buf;
  }
  return out.str();
}

}  // namespace mlgsc
