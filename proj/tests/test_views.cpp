#include <doctest.h>

#include <cmath>

#include "mlgsc/errors.hpp"
#include "mlgsc/views.hpp"
#include "oracles.hpp"

using namespace mlgsc;

namespace {

HsiCube cube_from(const Matrix& img) {
  HsiCube cube;
  cube.height = img.rows();
  cube.width = img.cols();
  cube.bands = 1;
  cube.values.resize(static_cast<std::size_t>(img.size()));
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) cube.at(r, c, 0) = img(r, c);
  return cube;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("morphology fixes constant images") {
  const Matrix img = Matrix::Constant(6, 7, 2.5);
  for (int radius : {1, 2}) {
    CHECK((morph_opening(img, radius) - img).cwiseAbs().maxCoeff() == 0.0);
    CHECK((morph_closing(img, radius) - img).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("opening removes a single bright pixel") {
  Matrix img = Matrix::Zero(5, 5);
  img(2, 2) = 1.0;
  const Matrix opened = morph_opening(img, 1);
  CHECK(opened.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closing fills a single dark pixel") {
  Matrix img = Matrix::Constant(5, 5, 1.0);
  img(2, 2) = 0.0;
  const Matrix closed = morph_closing(img, 1);
  CHECK((closed - Matrix::Constant(5, 5, 1.0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closing is the dual of opening") {
  Rng rng(13);
  const Matrix img = random_matrix(8, 9, rng);
  for (int radius : {1, 2}) {
    const Matrix via_dual = -morph_opening(-img, radius);
    CHECK((morph_closing(img, radius) - via_dual).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("texture view of a constant cube is constant per dimension") {
  HsiCube cube;
  cube.height = 8;
  cube.width = 8;
  cube.bands = 3;
  cube.values.assign(8 * 8 * 3, 0.7);
  ViewConfig cfg;
  cfg.pca_components_texture = 2;
  cfg.se_radii = {1, 2};
  const Matrix feats = build_texture_view(cube, cfg);
  CHECK(feats.rows() == 64);
  for (Eigen::Index j = 0; j < feats.cols(); ++j) {
    const double v = feats(0, j);
    CHECK((feats.col(j).array() == v).all());
  }
}

TEST_CASE("texture view rejects oversized radii") {
  HsiCube cube;
  cube.height = 4;
  cube.width = 4;
  cube.bands = 2;
  cube.values.assign(4 * 4 * 2, 0.0);
  ViewConfig cfg;
  cfg.se_radii = {1, 2};  // 2*2+1 > 4
  CHECK_THROWS_AS(build_texture_view(cube, cfg), ContractViolation);
}

TEST_CASE("reflect indexing mirrors without repeating the edge") {
  CHECK(reflect_index(-1, 4) == 1);
  CHECK(reflect_index(-2, 4) == 2);
  CHECK(reflect_index(4, 4) == 2);
  CHECK(reflect_index(5, 4) == 1);
  CHECK(reflect_index(2, 4) == 2);
  CHECK(reflect_index(-1, 1) == 0);
}

TEST_CASE("window of one returns the pixel's own reduced spectrum") {
  Rng rng(5);
  HsiCube cube;
  cube.height = 4;
  cube.width = 5;
  cube.bands = 6;
  cube.values.resize(4 * 5 * 6);
  for (auto& v : cube.values) v = rng.uniform(0.0, 1.0);
  ViewConfig cfg;
  cfg.window_w = 1;
  cfg.pca_components_spectral = 3;
  const Matrix feats = build_spectral_spatial_view(cube, cfg);
  CHECK(feats.cols() == 3);

  // must equal the plain PCA scores
  const PcaResult p = pca_fit_transform(cube.as_pixel_matrix(), 3);
  CHECK((feats - p.scores).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("window of three on a 3x3 image flattens the full image at the center") {
  Rng rng(6);
  HsiCube cube;
  cube.height = 3;
  cube.width = 3;
  cube.bands = 2;
  cube.values.resize(3 * 3 * 2);
  for (auto& v : cube.values) v = rng.uniform(0.0, 1.0);
  ViewConfig cfg;
  cfg.window_w = 3;
  cfg.pca_components_spectral = 1;
  const Matrix feats = build_spectral_spatial_view(cube, cfg);
  const PcaResult p = pca_fit_transform(cube.as_pixel_matrix(), 1);

  // center pixel (1,1) -> all nine pixels in row-major patch order
  const Eigen::Index center = 1 * 3 + 1;
  for (Eigen::Index pix = 0; pix < 9; ++pix)
    CHECK(feats(center, pix) == doctest::Approx(p.scores(pix, 0)));
}

TEST_CASE("corner patches use reflect padding") {
  Rng rng(7);
  HsiCube cube;
  cube.height = 4;
  cube.width = 4;
  cube.bands = 2;
  cube.values.resize(4 * 4 * 2);
  for (auto& v : cube.values) v = rng.uniform(0.0, 1.0);
  ViewConfig cfg;
  cfg.window_w = 3;
  cfg.pca_components_spectral = 2;
  const Matrix feats = build_spectral_spatial_view(cube, cfg);
  const PcaResult p = pca_fit_transform(cube.as_pixel_matrix(), 2);

  // pixel (0,0): patch rows (-1,0,1)->(1,0,1), cols likewise; components innermost
  Eigen::Index col = 0;
  for (int dr : {-1, 0, 1}) {
    for (int dc : {-1, 0, 1}) {
      const Eigen::Index rr = dr < 0 ? -dr : dr;
      const Eigen::Index cc = dc < 0 ? -dc : dc;
      for (Eigen::Index comp = 0; comp < 2; ++comp) {
        CHECK(feats(0, col) == doctest::Approx(p.scores(rr * 4 + cc, comp)));
        ++col;
      }
    }
  }
}

TEST_CASE("knn adjacency on three collinear points") {
  Matrix feats(3, 1);
  feats << 0, 1, 3;
  const Matrix a = knn_adjacency(feats, 1);
  Matrix expected(3, 3);
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  CHECK((a - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("knn adjacency trivial sizes") {
  Matrix two(2, 1);
  two << 0, 5;
  Matrix expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK((knn_adjacency(two, 1) - expected).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(8);
  const Matrix feats = random_matrix(6, 3, rng);
  const Matrix a = knn_adjacency(feats, 5);
  CHECK((a - (Matrix::Ones(6, 6) - Matrix::Identity(6, 6))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("knn adjacency matches the naive oracle") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng.index(20));
    const Matrix feats = random_matrix(n, 4, rng);
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n - 1)));
    CHECK((knn_adjacency(feats, k) - oracles::naive_knn_adjacency(feats, k))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("knn adjacency is invariant to translation and positive scaling") {
  Rng rng(10);
  const Matrix feats = random_matrix(15, 3, rng);
  const Matrix a = knn_adjacency(feats, 4);
  Matrix shifted = feats;
  shifted.rowwise() += Eigen::RowVector3d(10.0, -3.0, 0.5);
  const Matrix b = knn_adjacency(3.0 * shifted, 4);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("knn adjacency is symmetric with zero diagonal") {
  Rng rng(11);
  const Matrix feats = random_matrix(20, 2, rng);
  const Matrix a = knn_adjacency(feats, 3);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(knn_adjacency(feats, 20), ContractViolation);
}

TEST_CASE("edge dropping with delta zero is the identity") {
  Rng rng(12);
  const Matrix feats = random_matrix(10, 2, rng);
  const Matrix a = knn_adjacency(feats, 3);
  Rng drop(1);
  CHECK((augment_drop_edges(a, 0.0, drop) - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("edge dropping near one removes almost everything symmetrically") {
  Rng rng(13);
  const Matrix feats = random_matrix(30, 2, rng);
  const Matrix a = knn_adjacency(feats, 5);
  Rng drop(7);
  const Matrix out = augment_drop_edges(a, 0.999, drop);
  CHECK(out.sum() <= a.sum() * 0.05);
  CHECK((out - out.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(((a - out).array() >= 0.0).all());  // never adds an edge
}

TEST_CASE("edge drop retention concentrates at one minus delta") {
  // ring + random chords graph with ~10k edges
  const Eigen::Index n = 450;
  Matrix a = Matrix::Zero(n, n);
  Rng g(99);
  std::size_t edges = 0;
  while (edges < 10000) {
    const Eigen::Index i = static_cast<Eigen::Index>(g.index(static_cast<std::size_t>(n)));
    const Eigen::Index j = static_cast<Eigen::Index>(g.index(static_cast<std::size_t>(n)));
    if (i == j || a(i, j) == 1.0) continue;
    a(i, j) = a(j, i) = 1.0;
    ++edges;
  }
  Rng drop(123);
  const Matrix out = augment_drop_edges(a, 0.1, drop);
  const double retained = out.sum() / a.sum();
  CHECK(retained >= 0.88);
  CHECK(retained <= 0.92);
}

TEST_CASE("normalize_adjacency on the empty graph is the identity") {
  const Matrix a = Matrix::Zero(4, 4);
  CHECK((normalize_adjacency(a) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("normalize_adjacency two-node hand case") {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const Matrix out = normalize_adjacency(a);
  CHECK((out - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("normalize_adjacency star graph hand case") {
  Matrix a = Matrix::Zero(4, 4);
  for (int leaf = 1; leaf < 4; ++leaf) a(0, leaf) = a(leaf, 0) = 1.0;
  const Matrix out = normalize_adjacency(a);
  const double spoke = 1.0 / std::sqrt(4.0 * 2.0);
  for (int leaf = 1; leaf < 4; ++leaf) {
    CHECK(out(0, leaf) == doctest::Approx(spoke));
    CHECK(out(leaf, 0) == doctest::Approx(spoke));
  }
  CHECK(out(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("normalized adjacency has spectral radius at most one") {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.index(12));
    const Matrix feats = random_matrix(n, 3, rng);
    const Matrix a = knn_adjacency(feats, 2);
    const SymEig eig = sym_eig(normalize_adjacency(a));
    CHECK(eig.eigenvalues.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("build_views produces four consistent views over labeled pixels") {
  Rng rng(15);
  const SynthScene scene = synth_scene(3, 12, 12, 6, 0.05, rng);
  LabelMap labels = scene.labels;
  // punch some background holes
  for (Eigen::Index i = 0; i < 20; ++i) labels.labels[static_cast<std::size_t>(i * 7)] = 0;

  ViewConfig cfg;
  cfg.pca_components_spectral = 3;
  cfg.pca_components_texture = 2;
  cfg.window_w = 3;
  cfg.knn_k = 4;
  cfg.se_radii = {1, 2};
  cfg.drop_prob_delta = 0.2;

  const ViewBundle bundle = build_views(scene.cube, labels, cfg, Rng(77));
  REQUIRE(bundle.views.size() == 4);
  std::size_t labeled = 0;
  for (auto v : labels.labels)
    if (v != 0) ++labeled;
  CHECK(bundle.node_pixels.size() == labeled);
  for (const GraphView& v : bundle.views) {
    CHECK(static_cast<std::size_t>(v.features.rows()) == labeled);
    CHECK((v.adjacency - v.adjacency.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.adjacency.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(((bundle.views[v.augmentation_id < 1 ? 0 : 1].adjacency).array() >= 0).all());
  }
  CHECK(bundle.views[0].family == FeatureFamily::spectral_spatial);
  CHECK(bundle.views[2].family == FeatureFamily::texture);

  // deterministic rebuild
  const ViewBundle again = build_views(scene.cube, labels, cfg, Rng(77));
  for (int v = 0; v < 4; ++v)
    CHECK((bundle.views[static_cast<std::size_t>(v)].adjacency -
           again.views[static_cast<std::size_t>(v)].adjacency)
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("build_views with zero delta gives identical augmentations per family") {
  Rng rng(16);
  const SynthScene scene = synth_scene(2, 10, 10, 5, 0.02, rng);
  ViewConfig cfg;
  cfg.pca_components_spectral = 2;
  cfg.pca_components_texture = 2;
  cfg.window_w = 3;
  cfg.knn_k = 3;
  cfg.se_radii = {1};
  cfg.drop_prob_delta = 0.0;
  const ViewBundle bundle = build_views(scene.cube, scene.labels, cfg, Rng(5));
  CHECK((bundle.views[0].adjacency - bundle.views[1].adjacency).cwiseAbs().maxCoeff() == 0.0);
  CHECK((bundle.views[2].adjacency - bundle.views[3].adjacency).cwiseAbs().maxCoeff() == 0.0);
  CHECK((bundle.views[0].adjacency - bundle.base_adjacency_spec).cwiseAbs().maxCoeff() == 0.0);
}
