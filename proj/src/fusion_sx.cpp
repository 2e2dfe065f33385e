#include "mlgsc/fusion_sx.hpp"

#include <cmath>
#include <string>

#include "mlgsc/errors.hpp"

namespace mlgsc {

FusionResult fuse(const Matrix& z_spec, const Matrix& z_tex, FusionGranularity granularity) {
  if (z_spec.rows() != z_tex.rows() || z_spec.cols() != z_tex.cols())
    throw ContractViolation("fuse: family embeddings must have equal shape");

  FusionResult out;
  if (granularity == FusionGranularity::coordinate) {
    // two-way softmax per entry, stabilized through the difference
    const Matrix diff = z_tex - z_spec;  // logit_tex - logit_spec
    out.weights_spec = (1.0 + diff.array().exp()).inverse().matrix();
    out.weights_tex = Matrix::Ones(diff.rows(), diff.cols()) - out.weights_spec;
    out.fused = out.weights_spec.cwiseProduct(z_spec) + out.weights_tex.cwiseProduct(z_tex);
  } else {
    const Vector mean_spec = z_spec.rowwise().mean();
    const Vector mean_tex = z_tex.rowwise().mean();
    const Vector diff = mean_tex - mean_spec;
    out.weights_spec = (1.0 + diff.array().exp()).inverse().matrix();
    out.weights_tex = Vector::Ones(diff.size()) - Vector(out.weights_spec);
    out.fused = out.weights_spec.col(0).asDiagonal() * z_spec +
                out.weights_tex.col(0).asDiagonal() * z_tex;
  }
  if (!out.fused.allFinite()) throw NumericFailure("fuse: non-finite output");
  return out;
}

FuseGrads fuse_backward(const Matrix& grad_fused, const FusionResult& result,
                        const Matrix& z_spec, const Matrix& z_tex,
                        FusionGranularity granularity) {
  if (grad_fused.rows() != z_spec.rows() || grad_fused.cols() != z_spec.cols())
    throw ContractViolation("fuse_backward: gradient shape mismatch");

  FuseGrads g;
  if (granularity == FusionGranularity::coordinate) {
    const Matrix& ws = result.weights_spec;
    const Matrix& wt = result.weights_tex;
    // dF/da = w_a + w_a w_b (a - b), dF/db = w_b + w_a w_b (b - a), per entry
    const Matrix cross = ws.cwiseProduct(wt).cwiseProduct(z_spec - z_tex);
    g.spec = grad_fused.cwiseProduct(ws + cross);
    g.tex = grad_fused.cwiseProduct(wt - cross);
  } else {
    const Eigen::Index n = z_spec.rows(), d = z_spec.cols();
    const double inv_d = 1.0 / static_cast<double>(d);
    g.spec.resize(n, d);
    g.tex.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ws = result.weights_spec(i, 0);
      const double wt = result.weights_tex(i, 0);
      // gate depends on the row means; dw_s/dmean_s = ws*wt, dw_s/dmean_t = -ws*wt
      const double row_coupling =
          grad_fused.row(i).dot(z_spec.row(i) - z_tex.row(i)) * ws * wt * inv_d;
      g.spec.row(i) = ws * grad_fused.row(i) + Vector::Constant(d, row_coupling).transpose();
      g.tex.row(i) = wt * grad_fused.row(i) - Vector::Constant(d, row_coupling).transpose();
    }
  }
  return g;
}

SelfExpressionLoss self_expression_loss(const Matrix& f_s, const Matrix& a_bar,
                                        const Matrix& c, double lambda) {
  const Eigen::Index n = f_s.rows();
  if (a_bar.rows() != n || a_bar.cols() != n)
    throw ContractViolation("self_expression_loss: A_bar must be N x N");
  if (c.rows() != n || c.cols() != n)
    throw ContractViolation("self_expression_loss: C must be N x N");
  if (!(lambda > 0.0)) throw ContractViolation("self_expression_loss: lambda must be positive");
  if (c.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw ContractViolation("self_expression_loss: diag(C) must be zero on entry");

  const Matrix x = f_s.transpose();      // d x N, features by nodes
  const Matrix z = x * a_bar;            // self-expression dictionary
  const Matrix residual = z * c - x;

  SelfExpressionLoss out;
  out.value = 0.5 * residual.squaredNorm() + 0.5 * lambda * c.squaredNorm();
  out.grad_c = z.transpose() * residual + lambda * c;
  out.grad_c.diagonal().setZero();  // constraint-preserving projection
  // dL/dX = R C^T A_bar - R (A_bar symmetric), then transpose back to F_s
  out.grad_f = ((residual * c.transpose()) * a_bar - residual).transpose();
  if (!std::isfinite(out.value))
    throw NumericFailure("self_expression_loss: non-finite loss");
  return out;
}

Matrix masked_ridge_oracle(const Matrix& z, const Matrix& x, double lambda) {
  const Eigen::Index n = z.cols();
  if (n > 200) throw ContractViolation("masked_ridge_oracle: guarded to N <= 200");
  if (!(lambda > 0.0)) throw ContractViolation("masked_ridge_oracle: lambda must be positive");
  if (x.rows() != z.rows() || x.cols() != n)
    throw ContractViolation("masked_ridge_oracle: Z and X must both be d x N");

  const Matrix gram = z.transpose() * z;
  const Matrix zx = z.transpose() * x;
  Matrix c = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // reduced system over all coefficients except row j
    Matrix a(n - 1, n - 1);
    Vector b(n - 1);
    Eigen::Index rr = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == j) continue;
      Eigen::Index cc = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == j) continue;
        a(rr, cc) = gram(r, k);
        ++cc;
      }
      b(rr) = zx(r, j);
      ++rr;
    }
    a.diagonal().array() += lambda;
    const Vector sol = Eigen::LLT<Matrix>(a).solve(b);
    rr = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == j) continue;
      c(r, j) = sol(rr++);
    }
  }
  return c;
}

}  // namespace mlgsc
