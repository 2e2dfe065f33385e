#include "mlgsc/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "mlgsc/errors.hpp"

namespace mlgsc {

SymEig sym_eig(const Matrix& m) {
  if (m.rows() != m.cols())
    throw ContractViolation("sym_eig: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-9))
    throw ContractViolation("sym_eig: input asymmetric by " + std::to_string(asym) +
                            " (tolerance 1e-9)");
  if (!m.allFinite()) throw ContractViolation("sym_eig: input has non-finite entries");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success)
    throw NumericFailure(
        "sym_eig: tridiagonal QL failed to converge within Eigen's cap of 30 "
        "iterations per eigenvalue");
  return SymEig{solver.eigenvalues(), solver.eigenvectors()};
}

Matrix ridge_solve(const Matrix& z, const Matrix& x, double lambda) {
  if (!(lambda > 0.0)) throw ContractViolation("ridge_solve: lambda must be positive");
  if (z.rows() != x.rows())
    throw ContractViolation("ridge_solve: Z and X row counts differ");
  Matrix gram = z.transpose() * z;
  gram.diagonal().array() += lambda;
  return Eigen::LLT<Matrix>(gram).solve(z.transpose() * x);
}

PcaResult pca_fit_transform(const Matrix& x, Eigen::Index n_components) {
  const Eigen::Index n = x.rows(), f = x.cols();
  if (n_components < 1 || n_components > std::min(n, f))
    throw ContractViolation("pca_fit_transform: n_components out of range");
  if (!x.allFinite()) throw ContractViolation("pca_fit_transform: non-finite input");

  PcaResult out;
  out.mean = x.colwise().mean();
  Matrix centered = x.rowwise() - out.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  Matrix cov = (centered.transpose() * centered) / denom;
  SymEig eig = sym_eig(cov);

  // take the n_components largest eigenpairs, descending
  out.components.resize(n_components, f);
  out.explained_variance.resize(n_components);
  for (Eigen::Index i = 0; i < n_components; ++i) {
    const Eigen::Index src = f - 1 - i;
    Vector comp = eig.eigenvectors.col(src);
    Eigen::Index argmax = 0;
    comp.cwiseAbs().maxCoeff(&argmax);
    if (comp(argmax) < 0.0) comp = -comp;
    out.components.row(i) = comp.transpose();
    out.explained_variance(i) = std::max(0.0, eig.eigenvalues(src));
  }
  out.scores = centered * out.components.transpose();
  return out;
}

namespace {

// squared distances from every row of x to one center
Vector sq_dist_to(const Matrix& x, const Vector& center) {
  return (x.rowwise() - center.transpose()).rowwise().squaredNorm();
}

struct LloydRun {
  std::vector<int> labels;
  double inertia;
  std::vector<double> iteration_inertia;
};

LloydRun lloyd_once(const Matrix& x, int k, int max_iter, Rng& rng) {
  const Eigen::Index n = x.rows(), d = x.cols();

  // k-means++ seeding
  Matrix centers(k, d);
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Vector best_sq = sq_dist_to(x, centers.row(0).transpose());
  for (int c = 1; c < k; ++c) {
    const double total = best_sq.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best_sq(i);
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    centers.row(c) = x.row(pick);
    best_sq = best_sq.cwiseMin(sq_dist_to(x, centers.row(c).transpose()));
  }

  std::vector<int> labels(n, 0);
  std::vector<Eigen::Index> counts(k, 0);
  std::vector<double> iteration_inertia;
  double inertia = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    // assignment, ties to the lowest center index
    bool changed = false;
    inertia = 0.0;
    std::fill(counts.begin(), counts.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dist = (x.row(i) - centers.row(c)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
      counts[best]++;
      inertia += best_d;
    }
    iteration_inertia.push_back(inertia);
    if (!changed && iter > 0) break;

    // update step
    Matrix sums = Matrix::Zero(k, d);
    for (Eigen::Index i = 0; i < n; ++i) sums.row(labels[i]) += x.row(i);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // give an empty cluster the point farthest from its current center
        Eigen::Index far_i = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double dist = (x.row(i) - centers.row(labels[i])).squaredNorm();
          if (dist > far_d) {
            far_d = dist;
            far_i = i;
          }
        }
        centers.row(c) = x.row(far_i);
      }
    }
  }

  // final inertia under the last assignment
  inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    inertia += (x.row(i) - centers.row(labels[i])).squaredNorm();
  return LloydRun{std::move(labels), inertia, std::move(iteration_inertia)};
}

}  // namespace

KmeansResult kmeans(const Matrix& x, int k, int n_init, int max_iter, Rng& rng) {
  const Eigen::Index n = x.rows();
  if (k < 1 || k > n)
    throw ContractViolation("kmeans: need 1 <= k <= n, got k=" + std::to_string(k) +
                            ", n=" + std::to_string(n));
  if (n_init < 1) throw ContractViolation("kmeans: n_init must be >= 1");

  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < n_init; ++run) {
    LloydRun r = lloyd_once(x, k, max_iter, rng);
    if (r.inertia < best.inertia) {
      best.inertia = r.inertia;
      best.labels = std::move(r.labels);
      best.iteration_inertia = std::move(r.iteration_inertia);
    }
  }
  return best;
}

std::vector<int> hungarian_best_match(const Matrix& score) {
  if (score.rows() != score.cols())
    throw ContractViolation("hungarian_best_match: matrix must be square");
  if (score.size() > 0 && score.minCoeff() < 0.0)
    throw ContractViolation("hungarian_best_match: entries must be nonnegative");
  const int n = static_cast<int>(score.rows());
  if (n == 0) return {};

  // Minimize max-score transform with the classic potentials algorithm.
  const double shift = score.maxCoeff();
  Matrix a = Matrix::Constant(n, n, shift) - score;

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[col] = row, 1-based, 0 = free
  for (int i = 1; i <= n; ++i) {
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<int> way(n + 1, 0);
    std::vector<bool> used(n + 1, false);
    int j0 = 0;
    match[0] = i;
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> perm(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match[j] != 0) perm[match[j] - 1] = j - 1;
  return perm;
}

}  // namespace mlgsc
