#include "mlgsc/pipeline.hpp"

#include <array>
#include <sstream>

#include "mlgsc/errors.hpp"

namespace mlgsc {

PreparedScene prepare_scene(const RunConfig& cfg) {
  cfg.validate();
  PreparedScene scene;
  if (cfg.synthetic) {
    Rng rng = Rng(cfg.seed).split(kSynthStream);
    SynthScene s = synth_scene(cfg.synth_classes, cfg.synth_height, cfg.synth_width,
                               cfg.synth_bands, cfg.synth_noise_sigma, rng);
    scene.cube = std::move(s.cube);
    scene.labels = std::move(s.labels);
  } else {
    scene.cube = load_cube(cfg.cube_path);
    scene.labels = load_labels(cfg.labels_path);
    if (scene.cube.height != scene.labels.height || scene.cube.width != scene.labels.width)
      throw IntegrityError("cube and label map dimensions differ");
  }
  if (cfg.crop_enabled) {
    auto [c, l] = crop_scene(scene.cube, scene.labels, cfg.crop);
    scene.cube = std::move(c);
    scene.labels = std::move(l);
  }
  scene.cube = normalize_bands(scene.cube);
  return scene;
}

ViewBundle prepare_views(const PreparedScene& scene, const RunConfig& cfg) {
  return build_views(scene.cube, scene.labels, cfg.views, Rng(cfg.seed));
}

Matrix fused_forward(const ViewBundle& bundle, const TrainState& state,
                     const TrainConfig& cfg) {
  const bool use_spec = cfg.enable_spectral_view;
  const bool use_tex = cfg.enable_texture_view;
  Matrix z_spec_mean, z_tex_mean;
  if (use_spec) {
    const NodeEmbeddings e0 = gcn_forward(bundle.views[0], state.gcn_spec);
    const NodeEmbeddings e1 = gcn_forward(bundle.views[1], state.gcn_spec);
    z_spec_mean = 0.5 * (e0.z + e1.z);
  }
  if (use_tex) {
    const NodeEmbeddings e2 = gcn_forward(bundle.views[2], state.gcn_tex);
    const NodeEmbeddings e3 = gcn_forward(bundle.views[3], state.gcn_tex);
    z_tex_mean = 0.5 * (e2.z + e3.z);
  }
  if (use_spec && use_tex)
    return fuse(z_spec_mean, z_tex_mean, cfg.fusion_granularity).fused;
  return use_spec ? z_spec_mean : z_tex_mean;
}

ClusterOutput cluster_with_state(const PreparedScene& scene, const ViewBundle& bundle,
                                 const TrainState& state, const RunConfig& cfg,
                                 bool with_metrics) {
  const Eigen::Index n = static_cast<Eigen::Index>(bundle.node_pixels.size());
  if (state.c.rows() != n || state.c.cols() != n)
    throw IntegrityError("trained state is for " + std::to_string(state.c.rows()) +
                         " nodes but the scene has " + std::to_string(n));

  Matrix w = affinity_from_c(state.c);
  w = affinity_top_q(w, cfg.affinity_topq);

  Rng rng = Rng(cfg.seed).split(kClusterStream);
  ClusterOutput out;
  out.clusters = spectral_cluster(w, cfg.n_clusters, rng);

  out.pred_map.height = scene.labels.height;
  out.pred_map.width = scene.labels.width;
  out.pred_map.labels.assign(scene.labels.labels.size(), 0);
  for (std::size_t i = 0; i < bundle.node_pixels.size(); ++i)
    out.pred_map.labels[static_cast<std::size_t>(bundle.node_pixels[i])] =
        static_cast<std::uint16_t>(out.clusters.labels[i] + 1);

  if (with_metrics) {
    std::vector<int> truth;
    truth.reserve(bundle.node_pixels.size());
    for (Eigen::Index p : bundle.node_pixels)
      truth.push_back(static_cast<int>(scene.labels.labels[static_cast<std::size_t>(p)]) - 1);
    out.metrics = evaluate(out.clusters.labels, truth, cfg.nmi_norm);
  }
  return out;
}

std::string render_cluster_map_ppm(const LabelMap& map) {
  // fixed high-contrast palette, 16 entries; label 0 renders black
  static constexpr std::array<std::array<unsigned char, 3>, 16> kPalette = {{
      {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240},  {240, 50, 230},
      {210, 245, 60},  {250, 190, 212}, {0, 128, 128},   {220, 190, 255},
      {170, 110, 40},  {255, 250, 200}, {128, 0, 0},     {170, 255, 195},
  }};
  std::ostringstream out;
  out << "P6\n" << map.width << " " << map.height << "\n255\n";
  for (std::uint16_t v : map.labels) {
    if (v == 0) {
      out.put(0).put(0).put(0);
    } else {
      const auto& rgb = kPalette[(v - 1) % kPalette.size()];
      out.put(static_cast<char>(rgb[0]))
          .put(static_cast<char>(rgb[1]))
          .put(static_cast<char>(rgb[2]));
    }
  }
  return out.str();
}

}  // namespace mlgsc
