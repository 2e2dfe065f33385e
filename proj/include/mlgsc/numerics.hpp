#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mlgsc/rng.hpp"

namespace mlgsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SymEig {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, eigenvectors.col(i) <-> eigenvalues(i)
};

/// Symmetric eigendecomposition. Input must be square and symmetric within
/// 1e-9 absolute; throws ContractViolation otherwise, NumericFailure if the
/// solver does not converge.
SymEig sym_eig(const Matrix& m);

/// Solves min_C (1/2)||Z C - X||_F^2 + (lambda/2)||C||_F^2 via the normal
/// equations (Z^T Z + lambda I) C = Z^T X. Z and X are d x N.
Matrix ridge_solve(const Matrix& z, const Matrix& x, double lambda);

struct PcaResult {
  Matrix scores;              // n_samples x n_components
  Matrix components;          // n_components x n_features, orthonormal rows
  Vector explained_variance;  // non-increasing
  Vector mean;                // per-feature column mean
};

/// PCA on rows-as-samples data. Components are sorted by decreasing variance
/// and sign-fixed (largest-magnitude entry positive) for determinism.
PcaResult pca_fit_transform(const Matrix& x, Eigen::Index n_components);

struct KmeansResult {
  std::vector<int> labels;
  double inertia = 0.0;
  std::vector<double> iteration_inertia;  // assignment-step inertia of the best run
};

/// Lloyd's algorithm with k-means++ seeding, best of n_init restarts.
/// Ties (equal distances, equal inertia) always resolve to the lowest index.
KmeansResult kmeans(const Matrix& x, int k, int n_init, int max_iter, Rng& rng);

/// Optimal assignment maximizing sum_i cost(i, perm[i]) on a square
/// nonnegative matrix. O(k^3) augmenting-path implementation.
std::vector<int> hungarian_best_match(const Matrix& cost);

}  // namespace mlgsc
