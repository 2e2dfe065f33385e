#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "mlgsc/errors.hpp"
#include "mlgsc/pipeline.hpp"
#include "mlgsc/trainer.hpp"
#include "oracles.hpp"

using namespace mlgsc;

namespace {

// tiny labeled scene with all knobs shrunk so training runs in milliseconds
ViewBundle small_bundle(std::uint64_t seed, int classes = 3) {
  Rng rng(seed);
  const SynthScene scene = synth_scene(classes, 9, 9, 6, 0.02, rng);
  ViewConfig cfg;
  cfg.pca_components_spectral = 2;
  cfg.pca_components_texture = 2;
  cfg.window_w = 3;
  cfg.knn_k = 4;
  cfg.se_radii = {1};
  cfg.drop_prob_delta = 0.1;
  return build_views(scene.cube, scene.labels, cfg, Rng(seed));
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 1e-2;
  // wide enough that no relu output row can die at initialization
  cfg.hidden_dim = 16;
  cfg.out_dim = 12;
  cfg.sx_lambda = 5.0;
  cfg.seed = 7;
  return cfg;
}

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("total_loss with unit sigmas is half the component sum") {
  const Eigen::Vector4d components(1.0, 2.0, 3.0, 4.0);
  const TotalLoss tl = total_loss(components, Eigen::Vector4d::Zero());
  CHECK(tl.value == doctest::Approx(0.5 * components.sum()));
  for (int i = 0; i < 4; ++i) CHECK(tl.weights(i) == doctest::Approx(0.5));
}

TEST_CASE("total_loss single-component hand value") {
  // L = 2, sigma = e: 2 / (2 e^2) + log(e) = e^-2 + 1
  const Eigen::Vector4d components(2.0, 0.0, 0.0, 0.0);
  Eigen::Vector4d alpha = Eigen::Vector4d::Zero();
  alpha(0) = 1.0;
  const TotalLoss tl =
      total_loss(components, alpha, {true, false, false, false});
  CHECK(tl.value == doctest::Approx(std::exp(-2.0) + 1.0).epsilon(1e-12));
}

TEST_CASE("total_loss alpha gradient matches finite differences") {
  const Eigen::Vector4d components(0.7, 1.3, 0.2, 2.9);
  const Eigen::Vector4d alpha(0.1, -0.3, 0.5, 0.0);
  const TotalLoss tl = total_loss(components, alpha);
  auto loss = [&](const Vector& a) {
    return total_loss(components, Eigen::Vector4d(a), {true, true, true, true}).value;
  };
  const Vector numeric = oracles::finite_diff_grad(loss, alpha);
  CHECK(oracles::max_rel_error(tl.grad_alpha, numeric) <= 1e-6);
}

TEST_CASE("total_loss names the non-finite component") {
  Eigen::Vector4d components(0.0, 0.0, std::nan(""), 0.0);
  try {
    total_loss(components, Eigen::Vector4d::Zero());
    FAIL("expected NumericFailure");
  } catch (const NumericFailure& e) {
    CHECK(std::string(e.what()).find("L_Graph") != std::string::npos);
  }
}

TEST_CASE("adam leaves parameters alone under zero gradient") {
  Matrix p = Matrix::Constant(2, 2, 1.5);
  const Matrix before = p;
  AdamMoments mom;
  adam_step(p, Matrix::Zero(2, 2), mom, 1, 0.1);
  CHECK(same_matrix(p, before));
}

TEST_CASE("adam first scalar step equals the bias-corrected formula") {
  Matrix p = Matrix::Zero(1, 1);
  AdamMoments mom;
  adam_step(p, Matrix::Constant(1, 1, 1.0), mom, 1, 1e-3);
  CHECK(p(0, 0) == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam approaches lr-sized signed steps under constant gradient") {
  Matrix p = Matrix::Zero(1, 1);
  AdamMoments mom;
  double prev = 0.0;
  for (int t = 1; t <= 4000; ++t) {
    prev = p(0, 0);
    adam_step(p, Matrix::Constant(1, 1, 3.7), mom, t, 1e-3);
  }
  CHECK(std::abs((p(0, 0) - prev) + 1e-3) <= 1e-6);
}

TEST_CASE("train rejects bad epoch counts and runs one epoch") {
  const ViewBundle bundle = small_bundle(1);
  TrainConfig cfg = small_config();
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(bundle, cfg), ContractViolation);
  cfg.epochs = 1;
  const TrainState st = train(bundle, cfg);
  CHECK(st.history.size() == 1);
  CHECK(st.history[0].epoch == 1);
}

TEST_CASE("train is bit-deterministic given the seed") {
  const ViewBundle bundle = small_bundle(2);
  const TrainConfig cfg = small_config();
  const TrainState a = train(bundle, cfg);
  const TrainState b = train(bundle, cfg);
  CHECK(same_matrix(a.gcn_spec.w1, b.gcn_spec.w1));
  CHECK(same_matrix(a.gcn_spec.w2, b.gcn_spec.w2));
  CHECK(same_matrix(a.gcn_tex.w1, b.gcn_tex.w1));
  CHECK(same_matrix(a.gcn_tex.w2, b.gcn_tex.w2));
  CHECK(same_matrix(a.att_spec.m, b.att_spec.m));
  CHECK(same_matrix(a.att_tex.m, b.att_tex.m));
  CHECK(same_matrix(a.c, b.c));
  CHECK(same_matrix(a.alpha, b.alpha));
  for (std::size_t e = 0; e < a.history.size(); ++e)
    CHECK(a.history[e].total == b.history[e].total);
}

TEST_CASE("every parameter group receives gradient in the first epochs") {
  const ViewBundle bundle = small_bundle(3);
  const TrainState st = train(bundle, small_config());
  for (const char* group :
       {"w1_spec", "w2_spec", "m_spec", "w1_tex", "w2_tex", "m_tex", "c", "alpha"}) {
    INFO(group);
    REQUIRE(st.early_grad_max.count(group) == 1);
    CHECK(st.early_grad_max.at(group) > 0.0);
  }
}

TEST_CASE("diag(C) stays zero after every optimizer step") {
  const ViewBundle bundle = small_bundle(4);
  TrainConfig cfg = small_config();
  cfg.epochs = 8;
  int checked = 0;
  train(bundle, cfg, [&](const TrainState& st, int) {
    CHECK(st.c.diagonal().cwiseAbs().maxCoeff() == 0.0);
    ++checked;
  });
  CHECK(checked == 8);
}

TEST_CASE("SE-only descent with frozen encoders reaches the masked ridge optimum") {
  const ViewBundle bundle = small_bundle(5);
  TrainConfig cfg = small_config();
  cfg.enable_cnode = false;
  cfg.enable_dnode = false;
  cfg.enable_graph = false;
  cfg.freeze_encoders = true;
  cfg.freeze_uncertainty = true;
  cfg.grad_clip_norm = 0.0;  // clipping off in oracle-equivalence runs
  cfg.sx_lambda = 10.0;
  cfg.c_learning_rate = 0.05;
  cfg.epochs = 4000;
  const TrainState st = train(bundle, cfg);

  // rebuild the fixed fused embeddings the frozen encoders produced
  const Matrix f = fused_forward(bundle, st, cfg);
  const Matrix x = f.transpose();
  const Matrix z = x * bundle.sx_norm_adjacency;
  const Matrix oracle = masked_ridge_oracle(z, x, cfg.sx_lambda);
  CHECK((st.c - oracle).norm() <= 1e-3 * oracle.norm());
}

TEST_CASE("loss history serialization round-trips exactly") {
  const ViewBundle bundle = small_bundle(6);
  const TrainState st = train(bundle, small_config());
  const std::string text = serialize_history(st.history);
  const std::vector<EpochRecord> parsed = parse_history(text);
  REQUIRE(parsed.size() == st.history.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].epoch == st.history[i].epoch);
    CHECK(parsed[i].l_cnode == st.history[i].l_cnode);
    CHECK(parsed[i].l_dnode == st.history[i].l_dnode);
    CHECK(parsed[i].l_graph == st.history[i].l_graph);
    CHECK(parsed[i].l_se == st.history[i].l_se);
    CHECK(parsed[i].w_cnode == st.history[i].w_cnode);
    CHECK(parsed[i].w_se == st.history[i].w_se);
    CHECK(parsed[i].total == st.history[i].total);
  }
  CHECK(serialize_history(parsed) == text);
}

TEST_CASE("state files round-trip exactly") {
  namespace fs = std::filesystem;
  const ViewBundle bundle = small_bundle(7);
  const TrainState st = train(bundle, small_config());
  const std::string path =
      (fs::temp_directory_path() / "mlgsc_state_test.bin").string();
  save_state(st, path);
  const TrainState back = load_state(path);
  fs::remove(path);
  CHECK(same_matrix(back.gcn_spec.w1, st.gcn_spec.w1));
  CHECK(same_matrix(back.gcn_spec.w2, st.gcn_spec.w2));
  CHECK(same_matrix(back.gcn_tex.w1, st.gcn_tex.w1));
  CHECK(same_matrix(back.gcn_tex.w2, st.gcn_tex.w2));
  CHECK(same_matrix(back.att_spec.m, st.att_spec.m));
  CHECK(same_matrix(back.att_tex.m, st.att_tex.m));
  CHECK(same_matrix(back.c, st.c));
  CHECK(same_matrix(back.alpha, st.alpha));
}

TEST_CASE("ablation toggles drop the matching loss terms") {
  const ViewBundle bundle = small_bundle(8);
  TrainConfig cfg = small_config();
  cfg.enable_cnode = false;
  cfg.enable_graph = false;
  const TrainState st = train(bundle, cfg);
  CHECK(st.history.back().l_cnode == 0.0);
  CHECK(st.history.back().l_graph == 0.0);
  CHECK(st.history.back().l_dnode > 0.0);
  CHECK(st.history.back().l_se > 0.0);
}

TEST_CASE("single-family training runs with the texture view disabled") {
  const ViewBundle bundle = small_bundle(9);
  TrainConfig cfg = small_config();
  cfg.enable_texture_view = false;
  const TrainState st = train(bundle, cfg);
  CHECK(st.history.back().l_dnode == 0.0);  // needs both families
  CHECK(st.history.back().l_cnode > 0.0);
  CHECK(st.history.back().l_graph > 0.0);

  cfg.enable_spectral_view = false;
  CHECK_THROWS_AS(train(bundle, cfg), ContractViolation);
}

TEST_CASE("resampled augmentations keep training deterministic") {
  const ViewBundle bundle = small_bundle(10);
  TrainConfig cfg = small_config();
  cfg.resample_augmentation_each_epoch = true;
  const TrainState a = train(bundle, cfg);
  const TrainState b = train(bundle, cfg);
  CHECK(same_matrix(a.c, b.c));
}
