#pragma once

#include <functional>
#include <vector>

#include "mlgsc/numerics.hpp"

// Brute-force reference implementations used only by tests. Each one is
// written as plainly as possible and shares nothing with the production path
// beyond the Matrix alias.
namespace mlgsc::oracles {

/// Eqs. as explicit double loops: cosine similarities computed one pair at a
/// time, denominators accumulated term by term.
double naive_node_contrast(const Matrix& z_a, const Matrix& z_b, double tau);

/// Naive graph-level loss: one positive pair at a time against the shared
/// negative list, everything normalized with scalar loops.
double naive_graph_contrast(const std::vector<std::pair<Vector, Vector>>& positives,
                            const std::vector<Vector>& negatives, double tau);

struct FiniteDiffSpec {
  double h = 1e-6;
  double tolerance = 1e-5;  // relative
};

/// Central differences per coordinate of a flattened parameter vector.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& at,
                        const FiniteDiffSpec& spec = {});

/// Max relative error between gradients, denominator max(1e-8, |a| + |b|).
double max_rel_error(const Vector& analytic, const Vector& numeric);

/// Overall accuracy by trying all k! label permutations; guarded to k <= 8.
double exhaustive_oa(const std::vector<int>& pred, const std::vector<int>& truth);

/// O(N^2) kNN with a full stable sort per row, union-symmetrized.
Matrix naive_knn_adjacency(const Matrix& features, int k);

/// Minimum k=2 inertia over every 2-partition of up to 20 points.
double best_two_partition_inertia(const Matrix& x);

}  // namespace mlgsc::oracles
