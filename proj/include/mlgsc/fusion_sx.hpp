#pragma once

#include "mlgsc/numerics.hpp"

namespace mlgsc {

enum class FusionGranularity {
  coordinate,  // softmax across families per node and coordinate
  node,        // one scalar weight per node and family (softmax of mean logit)
};

struct FusionResult {
  Matrix weights_spec;  // same shape as the gate (N x d or N x 1)
  Matrix weights_tex;
  Matrix fused;  // N x d
};

/// Softmax-weighted combination of the two family embeddings. The two weight
/// fields sum to one elementwise.
FusionResult fuse(const Matrix& z_spec, const Matrix& z_tex,
                  FusionGranularity granularity = FusionGranularity::coordinate);

struct FuseGrads {
  Matrix spec;
  Matrix tex;
};

/// Gradients of a scalar loss through fuse(), including the softmax gate.
FuseGrads fuse_backward(const Matrix& grad_fused, const FusionResult& result,
                        const Matrix& z_spec, const Matrix& z_tex,
                        FusionGranularity granularity = FusionGranularity::coordinate);

struct SelfExpressionLoss {
  double value = 0.0;
  Matrix grad_c;  // diagonal zeroed
  Matrix grad_f;  // gradient w.r.t. the fused embeddings (N x d)
};

/// L = 1/2 |Z C - X|_F^2 + lambda/2 |C|_F^2 with X = F_s^T and Z = X A_bar.
/// Requires diag(C) = 0 on entry; the returned grad_c keeps the diagonal zero.
SelfExpressionLoss self_expression_loss(const Matrix& f_s, const Matrix& a_bar,
                                        const Matrix& c, double lambda);

/// Reference solver for the diag-constrained ridge problem, column by column
/// over the reduced normal equations. Guarded to N <= 200; test use only in
/// spirit, but exact for any inputs it accepts.
Matrix masked_ridge_oracle(const Matrix& z, const Matrix& x, double lambda);

}  // namespace mlgsc
