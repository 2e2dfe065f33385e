#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mlgsc/contrastive.hpp"
#include "mlgsc/encoder.hpp"
#include "mlgsc/fusion_sx.hpp"
#include "mlgsc/views.hpp"

namespace mlgsc {

enum class InterViewPairing {
  mean,       // contrast the per-family augmentation means
  all_pairs,  // average the four cross-family augmentation pairs
};

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  // Separate step size for the N x N coefficient matrix: its entries start at
  // one (all-ones init) and must travel to near zero within the epoch budget,
  // which the encoder-scale learning rate cannot cover under Adam's
  // unit-magnitude steps.
  double c_learning_rate = 2e-2;
  std::uint64_t seed = 0;

  // ablation toggles
  bool enable_cnode = true;
  bool enable_dnode = true;
  bool enable_graph = true;
  bool enable_spectral_view = true;
  bool enable_texture_view = true;

  // test plumbing: keep non-C parameters fixed while C descends
  bool freeze_encoders = false;
  bool freeze_uncertainty = false;

  // Balance the task weights at the first epoch: alpha_i = max(0, ln L_i / 2),
  // so every enabled task starts at effective weight 1/(2 L_i) and no single
  // term (the self-expression loss starts orders of magnitude above the rest
  // under the all-ones C init) can flatten the others before the trainable
  // sigmas adapt. Off reproduces the plain alpha = 0 start.
  bool warm_start_uncertainty = true;

  int hidden_dim = 64;
  int out_dim = 32;
  double sx_lambda = 100.0;
  double grad_clip_norm = 5.0;  // <= 0 disables clipping
  bool resample_augmentation_each_epoch = false;
  ContrastiveConfig contrastive;  // tau
  FusionGranularity fusion_granularity = FusionGranularity::coordinate;
  InterViewPairing inter_view_pairing = InterViewPairing::mean;

  void validate() const;
};

/// One history record per epoch: raw component losses, the loss weights
/// exp(-alpha_i) in effect that epoch, and the weighted total.
struct EpochRecord {
  int epoch = 0;
  double l_cnode = 0.0, l_dnode = 0.0, l_graph = 0.0, l_se = 0.0;
  double w_cnode = 0.0, w_dnode = 0.0, w_graph = 0.0, w_se = 0.0;
  double total = 0.0;
};

struct AdamMoments {
  Matrix m, v;
};

/// Adam update, decay 0.9 / 0.999, epsilon 1e-8, bias-corrected.
/// step_index counts from 1.
void adam_step(Matrix& param, const Matrix& grad, AdamMoments& moments, int step_index,
               double learning_rate);

struct TrainState {
  GcnParams gcn_spec, gcn_tex;
  AttentionParams att_spec, att_tex;
  Matrix c;      // N x N self-expression coefficients, zero diagonal
  Matrix alpha;  // 4 x 1 log-sigmas: cnode, dnode, graph, se

  std::map<std::string, AdamMoments> moments;
  int step_count = 0;
  std::vector<EpochRecord> history;

  // max gradient norm per parameter group over the first five epochs
  std::map<std::string, double> early_grad_max;
};

struct TotalLoss {
  double value = 0.0;
  Eigen::Vector4d weights;          // 1/(2 sigma_i^2)
  Eigen::Vector4d grad_components;  // equals weights
  Eigen::Vector4d grad_alpha;
};

/// L = sum_i exp(-2 alpha_i)/2 * L_i + sum_i alpha_i over enabled components.
TotalLoss total_loss(const Eigen::Vector4d& components, const Eigen::Vector4d& alpha,
                     const std::array<bool, 4>& enabled = {true, true, true, true});

using EpochCallback = std::function<void(const TrainState&, int epoch)>;

/// Full-graph joint training of encoders, attention, C and the uncertainty
/// weights. Deterministic given cfg.seed. Throws NumericFailure with epoch and
/// component diagnostics when the loss diverges or turns non-finite.
TrainState train(const ViewBundle& bundle, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = nullptr);

std::string serialize_history(const std::vector<EpochRecord>& history);
std::vector<EpochRecord> parse_history(const std::string& text);

// Binary state container: magic "MLGSC-STATE v1", then named, sized blocks.
void save_state(const TrainState& state, const std::string& path);
TrainState load_state(const std::string& path);

}  // namespace mlgsc
