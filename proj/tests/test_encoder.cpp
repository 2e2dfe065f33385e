#include <doctest.h>

#include <cmath>

#include "mlgsc/encoder.hpp"
#include "mlgsc/errors.hpp"
#include "oracles.hpp"

using namespace mlgsc;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

GraphView view_from(const Matrix& features, const Matrix& adjacency) {
  GraphView v;
  v.features = features;
  v.adjacency = adjacency;
  v.norm_adjacency = normalize_adjacency(adjacency);
  return v;
}

// instance with pre-activations clear of the relu kink, for finite differences
struct GcnInstance {
  GraphView view;
  GcnParams params;
};

GcnInstance safe_gcn_instance(std::uint64_t seed) {
  for (std::uint64_t s = seed;; ++s) {
    Rng rng(s);
    const Eigen::Index n = 5, d_in = 4, d_h = 3, d_out = 2;
    Matrix feats = random_matrix(n, d_in, rng, 0.1, 1.0);
    Matrix a = knn_adjacency(random_matrix(n, 2, rng), 2);
    GcnInstance inst{view_from(feats, a),
                     {random_matrix(d_in, d_h, rng), random_matrix(d_h, d_out, rng)}};
    const NodeEmbeddings e = gcn_forward(inst.view, inst.params);
    if (e.cache.pre1.cwiseAbs().minCoeff() > 1e-3 &&
        e.cache.pre2.cwiseAbs().minCoeff() > 1e-3)
      return inst;
  }
}

Vector flatten2(const Matrix& a, const Matrix& b) {
  Vector v(a.size() + b.size());
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) v(at++) = a(i, j);
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) v(at++) = b(i, j);
  return v;
}

}  // namespace

TEST_CASE("gcn forward propagates identically through an empty graph") {
  const Eigen::Index n = 4, d = 3;
  Rng rng(1);
  const Matrix x = random_matrix(n, d, rng, 0.0, 1.0);
  GraphView v = view_from(x, Matrix::Zero(n, n));  // A_hat = I
  const GcnParams p{Matrix::Identity(d, d), Matrix::Identity(d, d)};
  const NodeEmbeddings e = gcn_forward(v, p);
  CHECK((e.z - x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gcn forward clamps all-negative pre-activations to zero") {
  Rng rng(2);
  const Matrix x = random_matrix(4, 3, rng, 0.1, 1.0);
  GraphView v = view_from(x, Matrix::Zero(4, 4));
  const GcnParams p{-Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  const NodeEmbeddings e = gcn_forward(v, p);
  CHECK(e.z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gcn forward matches a hand-computed path graph aggregation") {
  // path 0-1-2, scalar features and weights
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;
  a(1, 2) = a(2, 1) = 1.0;
  Matrix x(3, 1);
  x << 1.0, 2.0, 3.0;
  GraphView v = view_from(x, a);

  // A_hat rows: deg(I+A) = (2,3,2)
  Matrix a_hat(3, 3);
  a_hat << 1.0 / 2.0, 1.0 / std::sqrt(6.0), 0.0,
           1.0 / std::sqrt(6.0), 1.0 / 3.0, 1.0 / std::sqrt(6.0),
           0.0, 1.0 / std::sqrt(6.0), 1.0 / 2.0;
  CHECK((v.norm_adjacency - a_hat).cwiseAbs().maxCoeff() < 1e-12);

  const GcnParams p{Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 0.5)};
  const NodeEmbeddings e = gcn_forward(v, p);
  const Matrix h1 = (a_hat * x * 2.0).cwiseMax(0.0);
  const Matrix expect = (a_hat * h1 * 0.5).cwiseMax(0.0);
  CHECK((e.z - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn backward returns zeros for zero upstream gradient") {
  const GcnInstance inst = safe_gcn_instance(100);
  const NodeEmbeddings e = gcn_forward(inst.view, inst.params);
  const GcnGrads g = gcn_backward(Matrix::Zero(e.z.rows(), e.z.cols()), e.cache, true);
  CHECK(g.w1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.w2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gcn backward matches finite differences") {
  for (std::uint64_t seed : {200, 300, 400, 500, 600}) {
    const GcnInstance inst = safe_gcn_instance(seed);
    Rng grng(seed + 1);
    const NodeEmbeddings e0 = gcn_forward(inst.view, inst.params);
    const Matrix upstream = random_matrix(e0.z.rows(), e0.z.cols(), grng);

    auto loss = [&](const Vector& flat) {
      GcnParams p = inst.params;
      Eigen::Index at = 0;
      for (Eigen::Index i = 0; i < p.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < p.w1.cols(); ++j) p.w1(i, j) = flat(at++);
      for (Eigen::Index i = 0; i < p.w2.rows(); ++i)
        for (Eigen::Index j = 0; j < p.w2.cols(); ++j) p.w2(i, j) = flat(at++);
      return (gcn_forward(inst.view, p).z.cwiseProduct(upstream)).sum();
    };

    const GcnGrads g = gcn_backward(upstream, e0.cache);
    const Vector analytic = flatten2(g.w1, g.w2);
    const Vector numeric =
        oracles::finite_diff_grad(loss, flatten2(inst.params.w1, inst.params.w2));
    CHECK(oracles::max_rel_error(analytic, numeric) <= 1e-5);
  }
}

TEST_CASE("gcn backward equals the closed form in the linear region") {
  // positive weights and features keep every relu active
  Rng rng(7);
  const Eigen::Index n = 4, d_in = 3, d_h = 2, d_out = 2;
  const Matrix x = random_matrix(n, d_in, rng, 0.5, 1.0);
  const Matrix a = knn_adjacency(random_matrix(n, 2, rng), 2);
  GraphView v = view_from(x, a);
  const GcnParams p{random_matrix(d_in, d_h, rng, 0.2, 0.9),
                    random_matrix(d_h, d_out, rng, 0.2, 0.9)};
  const NodeEmbeddings e = gcn_forward(v, p);
  REQUIRE(e.cache.pre1.minCoeff() > 0.0);
  REQUIRE(e.cache.pre2.minCoeff() > 0.0);

  const Matrix upstream = random_matrix(n, d_out, rng);
  const GcnGrads g = gcn_backward(upstream, e.cache, true);
  const Matrix& ah = v.norm_adjacency;
  // linear network: Z = Ah (Ah X W1) W2
  CHECK((g.w2 - (ah * (ah * x * p.w1)).transpose() * upstream).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g.w1 - (ah * x).transpose() * (ah * upstream * p.w2.transpose()))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((g.x - ah * (ah * upstream * p.w2.transpose()) * p.w1.transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("attention pool gives uniform weights for identical embeddings") {
  const Eigen::Index n = 6, d = 3;
  Matrix z = Vector::Ones(n) * Eigen::RowVector3d(0.2, -0.4, 0.9);
  AttentionParams att{Matrix::Constant(d, 1, 0.7)};
  const GraphRepresentation rep = attention_pool(z, att);
  for (Eigen::Index i = 0; i < n; ++i)
    CHECK(rep.alpha(i) == doctest::Approx(1.0 / static_cast<double>(n)));
  CHECK((rep.s - z.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention pool with one node returns that node") {
  Matrix z(1, 4);
  z << 0.3, -0.2, 0.5, 0.1;
  AttentionParams att{Matrix::Constant(4, 1, -0.3)};
  const GraphRepresentation rep = attention_pool(z, att);
  CHECK(rep.alpha(0) == doctest::Approx(1.0));
  CHECK((rep.s - z.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attention pool matches the scalar softmax formula") {
  // two nodes, scalar embeddings: scores tanh(z m) computed by hand
  Matrix z(2, 1);
  z << 0.0, 2.0;
  AttentionParams att{Matrix::Constant(1, 1, 1.5)};
  const GraphRepresentation rep = attention_pool(z, att);
  const double t0 = std::tanh(0.0), t1 = std::tanh(3.0);
  const double a1 = std::exp(t1) / (std::exp(t0) + std::exp(t1));
  CHECK(rep.alpha(1) == doctest::Approx(a1).epsilon(1e-12));
  CHECK(rep.alpha(0) + rep.alpha(1) == doctest::Approx(1.0));
  CHECK(rep.s(0) == doctest::Approx(2.0 * a1));
}

TEST_CASE("attention pool weights always form a distribution") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(20));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(6));
    const Matrix z = random_matrix(n, d, rng, -3.0, 3.0);
    AttentionParams att{random_matrix(d, 1, rng)};
    const GraphRepresentation rep = attention_pool(z, att);
    CHECK(std::abs(rep.alpha.sum() - 1.0) <= 1e-9);
    CHECK(rep.alpha.minCoeff() > 0.0);
  }
}

TEST_CASE("attention pooling is permutation equivariant") {
  Rng rng(22);
  const Eigen::Index n = 9, d = 4;
  const Matrix z = random_matrix(n, d, rng);
  AttentionParams att{random_matrix(d, 1, rng)};
  const GraphRepresentation base = attention_pool(z, att);
  for (int trial = 0; trial < 20; ++trial) {
    const auto perm = rng.permutation(static_cast<std::size_t>(n));
    Matrix zp(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      zp.row(i) = z.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
    const GraphRepresentation rep = attention_pool(zp, att);
    CHECK((rep.s - base.s).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index i = 0; i < n; ++i)
      CHECK(rep.alpha(i) ==
            doctest::Approx(base.alpha(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])))
                .epsilon(1e-12));
  }
}

TEST_CASE("attention pool backward matches finite differences") {
  for (std::uint64_t seed : {31, 32, 33, 34, 35}) {
    Rng rng(seed);
    const Eigen::Index n = 6, d = 4;
    const Matrix z = random_matrix(n, d, rng);
    const Matrix m = random_matrix(d, 1, rng);
    const Vector upstream = random_matrix(d, 1, rng).col(0);

    const GraphRepresentation rep = attention_pool(z, AttentionParams{m});
    const PoolGrads g = attention_pool_backward(upstream, rep.cache);

    auto loss_m = [&](const Vector& flat) {
      AttentionParams att{flat};
      return attention_pool(z, att).s.dot(upstream);
    };
    CHECK(oracles::max_rel_error(g.m.col(0), oracles::finite_diff_grad(loss_m, m.col(0))) <=
          1e-5);

    auto loss_z = [&](const Vector& flat) {
      Matrix zz(n, d);
      Eigen::Index at = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) zz(i, j) = flat(at++);
      return attention_pool(zz, AttentionParams{m}).s.dot(upstream);
    };
    Vector zflat(n * d);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) zflat(at++) = z(i, j);
    Vector gz(n * d);
    at = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) gz(at++) = g.z(i, j);
    CHECK(oracles::max_rel_error(gz, oracles::finite_diff_grad(loss_z, zflat)) <= 1e-5);
  }
}

TEST_CASE("attention pool backward zero upstream gives zero gradients") {
  Rng rng(41);
  const Matrix z = random_matrix(5, 3, rng);
  const GraphRepresentation rep = attention_pool(z, AttentionParams{random_matrix(3, 1, rng)});
  const PoolGrads g = attention_pool_backward(Vector::Zero(3), rep.cache);
  CHECK(g.m.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform attention at a symmetric point includes the direct term") {
  // identical rows: alpha_i = 1/n and dS/dz_i carries alpha_i directly
  const Eigen::Index n = 4, d = 2;
  Matrix z = Vector::Ones(n) * Eigen::RowVector2d(0.3, 0.3);
  AttentionParams att{Matrix::Zero(d, 1)};  // scores all zero -> tanh' = 1
  const GraphRepresentation rep = attention_pool(z, att);
  Vector upstream(2);
  upstream << 1.0, 0.0;
  const PoolGrads g = attention_pool_backward(upstream, rep.cache);
  // with m = 0 the score path vanishes, leaving exactly alpha_i * upstream
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(g.z(i, 0) == doctest::Approx(0.25));
    CHECK(g.z(i, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("shared weights give identical embeddings when delta is zero") {
  Rng rng(55);
  const SynthScene scene = synth_scene(2, 8, 8, 5, 0.02, rng);
  ViewConfig cfg;
  cfg.pca_components_spectral = 2;
  cfg.pca_components_texture = 2;
  cfg.window_w = 3;
  cfg.knn_k = 3;
  cfg.se_radii = {1};
  cfg.drop_prob_delta = 0.0;
  const ViewBundle bundle = build_views(scene.cube, scene.labels, cfg, Rng(5));

  Rng prng(9);
  const GcnParams p{glorot_uniform(bundle.views[0].features.cols(), 5, prng),
                    glorot_uniform(5, 3, prng)};
  const NodeEmbeddings e0 = gcn_forward(bundle.views[0], p);
  const NodeEmbeddings e1 = gcn_forward(bundle.views[1], p);
  CHECK((e0.z - e1.z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gcn forward rejects mismatched shapes") {
  Rng rng(66);
  const Matrix x = random_matrix(4, 3, rng);
  GraphView v = view_from(x, Matrix::Zero(4, 4));
  CHECK_THROWS_AS(gcn_forward(v, GcnParams{Matrix::Zero(5, 2), Matrix::Zero(2, 2)}),
                  ContractViolation);
}
