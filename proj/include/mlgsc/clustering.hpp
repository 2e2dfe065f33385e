#pragma once

#include <string>
#include <vector>

#include "mlgsc/numerics.hpp"
#include "mlgsc/rng.hpp"

namespace mlgsc {

/// W = (|C| + |C|^T) / 2. Symmetric, nonnegative, zero diagonal.
Matrix affinity_from_c(const Matrix& c);

/// Keeps, per row, only the q largest affinities (an entry survives if it is
/// in the top q of its row or of its column, preserving symmetry). q <= 0
/// returns the input unchanged.
Matrix affinity_top_q(const Matrix& w, int q);

struct ClusteringResult {
  std::vector<int> labels;  // in [0, k)
  int k = 0;
  bool degenerate = false;  // all-zero affinity: labels valid but arbitrary
};

/// Normalized-cut spectral clustering: L_sym = I - D^{-1/2} W D^{-1/2},
/// k smallest eigenvectors, row-normalized, then seeded k-means
/// (n_init 10, max_iter 300).
ClusteringResult spectral_cluster(const Matrix& w, int k, Rng& rng);

enum class NmiNorm { arithmetic, geometric, max };

struct MetricsReport {
  double oa = 0.0;
  double nmi = 0.0;
  double kappa = 0.0;
  Matrix confusion;                      // pred x truth counts, square padded
  std::vector<int> matched_permutation;  // pred label -> truth label
  std::vector<double> per_class_accuracy;  // indexed by truth class
};

/// Clustering metrics on 0-based label vectors: overall accuracy under the
/// optimal label matching, normalized mutual information and Cohen's kappa
/// computed after the matching.
MetricsReport evaluate(const std::vector<int>& pred, const std::vector<int>& truth,
                       NmiNorm norm = NmiNorm::arithmetic);

std::string serialize_metrics(const MetricsReport& report);

}  // namespace mlgsc
