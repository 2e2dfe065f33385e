#include "mlgsc/views.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mlgsc/errors.hpp"

namespace mlgsc {

void ViewConfig::validate() const {
  if (pca_components_spectral < 1 || pca_components_texture < 1)
    throw ContractViolation("ViewConfig: PCA component counts must be >= 1");
  if (window_w < 1 || window_w % 2 == 0)
    throw ContractViolation("ViewConfig: window_w must be odd and positive");
  if (knn_k < 1) throw ContractViolation("ViewConfig: knn_k must be >= 1");
  if (se_radii.empty()) throw ContractViolation("ViewConfig: se_radii must be nonempty");
  for (std::size_t i = 0; i + 1 < se_radii.size(); ++i)
    if (se_radii[i] >= se_radii[i + 1])
      throw ContractViolation("ViewConfig: se_radii must be strictly increasing");
  if (se_radii.front() < 1) throw ContractViolation("ViewConfig: radii must be >= 1");
  if (!(drop_prob_delta >= 0.0 && drop_prob_delta < 1.0))
    throw ContractViolation("ViewConfig: drop_prob_delta must lie in [0,1)");
}

namespace {

// City-block disk offsets: |dr| + |dc| <= radius.
std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> off;
  for (int dr = -radius; dr <= radius; ++dr)
    for (int dc = -radius; dc <= radius; ++dc)
      if (std::abs(dr) + std::abs(dc) <= radius) off.emplace_back(dr, dc);
  return off;
}

enum class Morph { erode, dilate };

// Grayscale erosion/dilation over the in-image part of the structuring element.
Matrix morph(const Matrix& img, const std::vector<std::pair<int, int>>& se, Morph op) {
  const Eigen::Index h = img.rows(), w = img.cols();
  Matrix out(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = img(r, c);
      for (const auto& [dr, dc] : se) {
        const Eigen::Index rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        acc = op == Morph::erode ? std::min(acc, img(rr, cc)) : std::max(acc, img(rr, cc));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

Matrix morph_opening(const Matrix& image, int radius) {
  if (radius < 1) throw ContractViolation("morph_opening: radius must be >= 1");
  const auto se = disk_offsets(radius);
  return morph(morph(image, se, Morph::erode), se, Morph::dilate);
}

Matrix morph_closing(const Matrix& image, int radius) {
  if (radius < 1) throw ContractViolation("morph_closing: radius must be >= 1");
  const auto se = disk_offsets(radius);
  return morph(morph(image, se, Morph::dilate), se, Morph::erode);
}

Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

Matrix build_texture_view(const HsiCube& cube, const ViewConfig& cfg) {
  cfg.validate();
  const int max_radius = cfg.se_radii.back();
  if (2 * max_radius + 1 > std::min(cube.height, cube.width))
    throw ContractViolation("build_texture_view: radius " + std::to_string(max_radius) +
                            " exceeds the image half-extent");

  const Eigen::Index n_comp =
      std::min<Eigen::Index>(cfg.pca_components_texture, std::min(cube.pixels(), cube.bands));
  PcaResult pca = pca_fit_transform(cube.as_pixel_matrix(), n_comp);

  const Eigen::Index n_feat = n_comp * static_cast<Eigen::Index>(cfg.se_radii.size()) * 2;
  Matrix feats(cube.pixels(), n_feat);
  Eigen::Index col = 0;
  for (Eigen::Index pc = 0; pc < n_comp; ++pc) {
    Matrix img(cube.height, cube.width);
    for (Eigen::Index r = 0; r < cube.height; ++r)
      for (Eigen::Index c = 0; c < cube.width; ++c)
        img(r, c) = pca.scores(r * cube.width + c, pc);
    for (int radius : cfg.se_radii) {
      const Matrix open_img = morph_opening(img, radius);
      const Matrix close_img = morph_closing(img, radius);
      for (Eigen::Index p = 0; p < cube.pixels(); ++p) {
        feats(p, col) = open_img(p / cube.width, p % cube.width);
        feats(p, col + 1) = close_img(p / cube.width, p % cube.width);
      }
      col += 2;
    }
  }

  // unit max-abs per dimension; constant-zero dimensions stay zero
  for (Eigen::Index j = 0; j < feats.cols(); ++j) {
    const double mx = feats.col(j).cwiseAbs().maxCoeff();
    if (mx > 0.0) feats.col(j) /= mx;
  }
  return feats;
}

Matrix build_spectral_spatial_view(const HsiCube& cube, const ViewConfig& cfg) {
  cfg.validate();
  const Eigen::Index n_comp =
      std::min<Eigen::Index>(cfg.pca_components_spectral, std::min(cube.pixels(), cube.bands));
  PcaResult pca = pca_fit_transform(cube.as_pixel_matrix(), n_comp);

  const int w = cfg.window_w;
  const int half = w / 2;
  Matrix feats(cube.pixels(), static_cast<Eigen::Index>(w) * w * n_comp);
  for (Eigen::Index r = 0; r < cube.height; ++r) {
    for (Eigen::Index c = 0; c < cube.width; ++c) {
      Eigen::Index col = 0;
      const Eigen::Index p = r * cube.width + c;
      for (int dr = -half; dr <= half; ++dr) {
        const Eigen::Index rr = reflect_index(r + dr, cube.height);
        for (int dc = -half; dc <= half; ++dc) {
          const Eigen::Index cc = reflect_index(c + dc, cube.width);
          for (Eigen::Index comp = 0; comp < n_comp; ++comp)
            feats(p, col++) = pca.scores(rr * cube.width + cc, comp);
        }
      }
    }
  }
  return feats;
}

Matrix knn_adjacency(const Matrix& features, int k) {
  const Eigen::Index n = features.rows();
  if (k < 1 || k >= n)
    throw ContractViolation("knn_adjacency: need 1 <= k < N, got k=" + std::to_string(k) +
                            ", N=" + std::to_string(n));

  // full pairwise squared distances via the Gram expansion
  const Vector sq = features.rowwise().squaredNorm();
  Matrix d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
              2.0 * (features * features.transpose());

  Matrix a = Matrix::Zero(n, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::nth_element(order.begin(), order.begin() + k, order.end(),
                     [&](Eigen::Index lhs, Eigen::Index rhs) {
                       if (lhs == i) return false;  // self is never a neighbour
                       if (rhs == i) return true;
                       if (d2(i, lhs) != d2(i, rhs)) return d2(i, lhs) < d2(i, rhs);
                       return lhs < rhs;
                     });
    std::sort(order.begin(), order.begin() + k,
              [&](Eigen::Index lhs, Eigen::Index rhs) {
                if (d2(i, lhs) != d2(i, rhs)) return d2(i, lhs) < d2(i, rhs);
                return lhs < rhs;
              });
    for (int j = 0; j < k; ++j) {
      const Eigen::Index nb = order[static_cast<std::size_t>(j)];
      a(i, nb) = 1.0;
      a(nb, i) = 1.0;  // union symmetrization
    }
  }
  a.diagonal().setZero();
  return a;
}

Matrix augment_drop_edges(const Matrix& adjacency, double delta, Rng& rng) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw ContractViolation("augment_drop_edges: delta must lie in [0,1)");
  const Eigen::Index n = adjacency.rows();
  Matrix out = adjacency;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (out(i, j) == 0.0) continue;
      if (rng.uniform() < delta) {
        out(i, j) = 0.0;
        out(j, i) = 0.0;
      }
    }
  }
  return out;
}

Matrix normalize_adjacency(const Matrix& adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (adjacency.cols() != n)
    throw ContractViolation("normalize_adjacency: matrix must be square");
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ContractViolation("normalize_adjacency: matrix must be symmetric");
  if (adjacency.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw ContractViolation("normalize_adjacency: diagonal must be zero");

  Matrix tilde = adjacency;
  tilde.diagonal().array() += 1.0;
  const Vector inv_sqrt_deg = tilde.rowwise().sum().cwiseSqrt().cwiseInverse();
  return inv_sqrt_deg.asDiagonal() * tilde * inv_sqrt_deg.asDiagonal();
}

ViewBundle build_views(const HsiCube& cube, const LabelMap& labels,
                       const ViewConfig& cfg, const Rng& rng) {
  cfg.validate();
  if (cube.height != labels.height || cube.width != labels.width)
    throw ContractViolation("build_views: cube and label dimensions differ");

  ViewBundle bundle;
  for (Eigen::Index p = 0; p < cube.pixels(); ++p)
    if (labels.labels[static_cast<std::size_t>(p)] != 0) bundle.node_pixels.push_back(p);
  const Eigen::Index n = static_cast<Eigen::Index>(bundle.node_pixels.size());
  if (n < 2) throw ContractViolation("build_views: fewer than 2 labeled pixels");
  if (cfg.knn_k >= n)
    throw ContractViolation("build_views: knn_k must be below the labeled-pixel count");

  const Matrix spec_all = build_spectral_spatial_view(cube, cfg);
  const Matrix tex_all = build_texture_view(cube, cfg);
  Matrix spec(n, spec_all.cols()), tex(n, tex_all.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    spec.row(i) = spec_all.row(bundle.node_pixels[static_cast<std::size_t>(i)]);
    tex.row(i) = tex_all.row(bundle.node_pixels[static_cast<std::size_t>(i)]);
  }

  const Matrix a_spec = knn_adjacency(spec, cfg.knn_k);
  const Matrix a_tex = knn_adjacency(tex, cfg.knn_k);
  bundle.base_adjacency_spec = a_spec;
  bundle.base_adjacency_tex = a_tex;
  bundle.drop_prob_delta = cfg.drop_prob_delta;

  bundle.views.resize(4);
  for (int v = 0; v < 4; ++v) {
    const bool is_spec = v < 2;
    Rng stream = rng.split(static_cast<std::uint64_t>(v));
    GraphView view;
    view.family = is_spec ? FeatureFamily::spectral_spatial : FeatureFamily::texture;
    view.augmentation_id = v % 2;
    view.features = is_spec ? spec : tex;
    view.adjacency = augment_drop_edges(is_spec ? a_spec : a_tex, cfg.drop_prob_delta, stream);
    view.norm_adjacency = normalize_adjacency(view.adjacency);
    bundle.views[static_cast<std::size_t>(v)] = std::move(view);
  }

  switch (cfg.sx_adjacency) {
    case SxAdjacency::spectral:
      bundle.sx_norm_adjacency = normalize_adjacency(a_spec);
      break;
    case SxAdjacency::texture:
      bundle.sx_norm_adjacency = normalize_adjacency(a_tex);
      break;
    case SxAdjacency::mean:
      bundle.sx_norm_adjacency = normalize_adjacency(0.5 * (a_spec + a_tex));
      break;
  }
  return bundle;
}

}  // namespace mlgsc
