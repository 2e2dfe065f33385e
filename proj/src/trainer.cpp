#include "mlgsc/trainer.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "mlgsc/errors.hpp"

namespace mlgsc {

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractViolation("TrainConfig: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractViolation("TrainConfig: learning_rate must be positive");
  if (!(c_learning_rate > 0.0))
    throw ContractViolation("TrainConfig: c_learning_rate must be positive");
  if (hidden_dim < 1 || out_dim < 1)
    throw ContractViolation("TrainConfig: layer dims must be positive");
  if (!(sx_lambda > 0.0)) throw ContractViolation("TrainConfig: sx_lambda must be positive");
  if (!(contrastive.tau > 0.0)) throw ContractViolation("TrainConfig: tau must be positive");
  if (!enable_spectral_view && !enable_texture_view)
    throw ContractViolation("TrainConfig: at least one feature view must be enabled");
}

void adam_step(Matrix& param, const Matrix& grad, AdamMoments& moments, int step_index,
               double learning_rate) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw ContractViolation("adam_step: parameter/gradient shape mismatch");
  if (moments.m.size() == 0) {
    moments.m = Matrix::Zero(param.rows(), param.cols());
    moments.v = Matrix::Zero(param.rows(), param.cols());
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  moments.m = beta1 * moments.m + (1.0 - beta1) * grad;
  moments.v = beta2 * moments.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, step_index);
  const double c2 = 1.0 - std::pow(beta2, step_index);
  param -= (learning_rate * (moments.m / c1).array() /
            ((moments.v / c2).array().sqrt() + eps))
               .matrix();
}

TotalLoss total_loss(const Eigen::Vector4d& components, const Eigen::Vector4d& alpha,
                     const std::array<bool, 4>& enabled) {
  static const char* kNames[4] = {"L_Cnode", "L_Dnode", "L_Graph", "L_SE"};
  TotalLoss out;
  out.weights.setZero();
  out.grad_components.setZero();
  out.grad_alpha.setZero();
  for (int i = 0; i < 4; ++i) {
    if (!enabled[static_cast<std::size_t>(i)]) continue;
    if (!std::isfinite(components(i)))
      throw NumericFailure(std::string("total_loss: component ") + kNames[i] +
                           " is non-finite");
    const double w = 0.5 * std::exp(-2.0 * alpha(i));
    out.weights(i) = w;
    out.grad_components(i) = w;
    out.value += w * components(i) + alpha(i);
    out.grad_alpha(i) = 1.0 - std::exp(-2.0 * alpha(i)) * components(i);
  }
  return out;
}

namespace {

constexpr std::uint64_t kParamStream = 16;
constexpr std::uint64_t kCorruptStream = 17;
constexpr std::uint64_t kResampleStream = 19;

struct GradSet {
  Matrix w1_spec, w2_spec, m_spec;
  Matrix w1_tex, w2_tex, m_tex;
  Matrix c;
  Matrix alpha;
};

double global_norm(const GradSet& g) {
  double sq = 0.0;
  for (const Matrix* m : {&g.w1_spec, &g.w2_spec, &g.m_spec, &g.w1_tex, &g.w2_tex,
                          &g.m_tex, &g.c, &g.alpha})
    sq += m->squaredNorm();
  return std::sqrt(sq);
}

void scale_all(GradSet& g, double s) {
  for (Matrix* m : {&g.w1_spec, &g.w2_spec, &g.m_spec, &g.w1_tex, &g.w2_tex, &g.m_tex,
                    &g.c, &g.alpha})
    *m *= s;
}

Matrix unpermute_rows(const Matrix& grad, const std::vector<std::size_t>& perm) {
  Matrix out(grad.rows(), grad.cols());
  for (Eigen::Index i = 0; i < grad.rows(); ++i)
    out.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])) = grad.row(i);
  return out;
}

}  // namespace

TrainState train(const ViewBundle& bundle, const TrainConfig& cfg,
                 const EpochCallback& on_epoch) {
  cfg.validate();
  if (bundle.views.size() != 4) throw ContractViolation("train: expected 4 views");
  const Eigen::Index n = bundle.views[0].features.rows();
  for (const auto& v : bundle.views)
    if (v.features.rows() != n) throw ContractViolation("train: view node counts differ");

  const bool use_spec = cfg.enable_spectral_view;
  const bool use_tex = cfg.enable_texture_view;
  const bool both = use_spec && use_tex;
  std::vector<int> active;  // view indices in fixed order
  if (use_spec) {
    active.push_back(0);
    active.push_back(1);
  }
  if (use_tex) {
    active.push_back(2);
    active.push_back(3);
  }

  TrainState st;
  {
    Rng init = Rng(cfg.seed).split(kParamStream);
    st.gcn_spec.w1 = glorot_uniform(bundle.views[0].features.cols(), cfg.hidden_dim, init);
    st.gcn_spec.w2 = glorot_uniform(cfg.hidden_dim, cfg.out_dim, init);
    st.att_spec.m = glorot_uniform(cfg.out_dim, 1, init);
    st.gcn_tex.w1 = glorot_uniform(bundle.views[2].features.cols(), cfg.hidden_dim, init);
    st.gcn_tex.w2 = glorot_uniform(cfg.hidden_dim, cfg.out_dim, init);
    st.att_tex.m = glorot_uniform(cfg.out_dim, 1, init);
  }
  st.c = Matrix::Ones(n, n);
  st.c.diagonal().setZero();
  st.alpha = Matrix::Zero(4, 1);

  Rng corrupt_rng = Rng(cfg.seed).split(kCorruptStream);
  Rng resample_rng = Rng(cfg.seed).split(kResampleStream);

  const std::vector<GraphView>* active_views = &bundle.views;
  std::vector<GraphView> resampled;

  double initial_total = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.resample_augmentation_each_epoch) {
      resampled = bundle.views;
      for (int v = 0; v < 4; ++v) {
        const Matrix& base = v < 2 ? bundle.base_adjacency_spec : bundle.base_adjacency_tex;
        Rng stream = resample_rng.split(static_cast<std::uint64_t>(epoch) * 4 +
                                        static_cast<std::uint64_t>(v));
        GraphView& view = resampled[static_cast<std::size_t>(v)];
        view.adjacency = augment_drop_edges(base, bundle.drop_prob_delta, stream);
        view.norm_adjacency = normalize_adjacency(view.adjacency);
      }
      active_views = &resampled;
    }

    const std::vector<GraphView>& views = *active_views;

    // ---- forward ----
    std::array<std::optional<NodeEmbeddings>, 4> emb;
    for (int v : active)
      emb[static_cast<std::size_t>(v)] =
          gcn_forward(views[static_cast<std::size_t>(v)],
                      v < 2 ? st.gcn_spec : st.gcn_tex);

    Matrix z_spec_mean, z_tex_mean;
    if (use_spec) z_spec_mean = 0.5 * (emb[0]->z + emb[1]->z);
    if (use_tex) z_tex_mean = 0.5 * (emb[2]->z + emb[3]->z);

    // node-level intra-view contrast
    const bool cnode_on = cfg.enable_cnode;
    std::optional<NodeContrastResult> cnode_spec, cnode_tex;
    double l_cnode = 0.0;
    int n_families = (use_spec ? 1 : 0) + (use_tex ? 1 : 0);
    if (cnode_on) {
      if (use_spec) {
        cnode_spec = node_contrast(emb[0]->z, emb[1]->z, cfg.contrastive);
        l_cnode += cnode_spec->value;
      }
      if (use_tex) {
        cnode_tex = node_contrast(emb[2]->z, emb[3]->z, cfg.contrastive);
        l_cnode += cnode_tex->value;
      }
      l_cnode /= static_cast<double>(n_families);
    }

    // node-level inter-view contrast
    const bool dnode_on = cfg.enable_dnode && both;
    std::optional<NodeContrastResult> dnode_mean;
    std::vector<std::pair<int, int>> dnode_pairs;
    std::vector<NodeContrastResult> dnode_pair_results;
    double l_dnode = 0.0;
    if (dnode_on) {
      if (cfg.inter_view_pairing == InterViewPairing::mean) {
        dnode_mean = node_contrast(z_spec_mean, z_tex_mean, cfg.contrastive);
        l_dnode = dnode_mean->value;
      } else {
        for (int a : {0, 1})
          for (int b : {2, 3}) {
            dnode_pairs.emplace_back(a, b);
            dnode_pair_results.push_back(
                node_contrast(emb[static_cast<std::size_t>(a)]->z,
                              emb[static_cast<std::size_t>(b)]->z, cfg.contrastive));
            l_dnode += dnode_pair_results.back().value;
          }
        l_dnode /= static_cast<double>(dnode_pair_results.size());
      }
    }

    // graph-level contrast over pooled representations
    const bool graph_on = cfg.enable_graph;
    std::array<std::optional<GraphRepresentation>, 4> pooled;
    std::vector<Matrix> corrupt_z;
    std::vector<std::vector<std::size_t>> corrupt_perm;
    std::vector<GraphRepresentation> corrupt_pool;
    std::vector<int> corrupt_view;
    std::vector<std::pair<int, int>> pos_views;
    double l_graph = 0.0;
    std::optional<GraphContrastResult> graph_res;
    if (graph_on) {
      corrupt_z.reserve(active.size());
      for (int v : active) {
        const AttentionParams& att = v < 2 ? st.att_spec : st.att_tex;
        pooled[static_cast<std::size_t>(v)] =
            attention_pool(emb[static_cast<std::size_t>(v)]->z, att);
        corrupt_perm.push_back(corrupt_rng.permutation(static_cast<std::size_t>(n)));
        const auto& perm = corrupt_perm.back();
        Matrix shuffled(n, emb[static_cast<std::size_t>(v)]->z.cols());
        for (Eigen::Index i = 0; i < n; ++i)
          shuffled.row(i) = emb[static_cast<std::size_t>(v)]->z.row(
              static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
        corrupt_z.push_back(std::move(shuffled));
        corrupt_pool.push_back(attention_pool_mismatched(
            emb[static_cast<std::size_t>(v)]->z, corrupt_z.back(), att));
        corrupt_view.push_back(v);
      }

      std::vector<std::pair<Vector, Vector>> positives;
      if (both) {
        for (int a : {0, 1})
          for (int b : {2, 3}) {
            pos_views.emplace_back(a, b);
            positives.emplace_back(pooled[static_cast<std::size_t>(a)]->s,
                                   pooled[static_cast<std::size_t>(b)]->s);
          }
      } else {
        const int a = active[0], b = active[1];
        pos_views.emplace_back(a, b);
        positives.emplace_back(pooled[static_cast<std::size_t>(a)]->s,
                               pooled[static_cast<std::size_t>(b)]->s);
      }
      std::vector<Vector> negatives;
      for (const auto& gp : corrupt_pool) negatives.push_back(gp.s);
      graph_res = graph_contrast(positives, negatives, cfg.contrastive);
      l_graph = graph_res->value;
    }

    // fused embeddings and self-expression
    Matrix f_s;
    std::optional<FusionResult> fusion;
    if (both) {
      fusion = fuse(z_spec_mean, z_tex_mean, cfg.fusion_granularity);
      f_s = fusion->fused;
    } else {
      f_s = use_spec ? z_spec_mean : z_tex_mean;
    }
    const SelfExpressionLoss se =
        self_expression_loss(f_s, bundle.sx_norm_adjacency, st.c, cfg.sx_lambda);

    // ---- total ----
    const Eigen::Vector4d components(l_cnode, l_dnode, l_graph, se.value);
    const std::array<bool, 4> mask = {cnode_on, dnode_on, graph_on, true};
    if (epoch == 1 && cfg.warm_start_uncertainty && !cfg.freeze_uncertainty) {
      for (int i = 0; i < 4; ++i)
        if (mask[static_cast<std::size_t>(i)] && components(i) > 1.0)
          st.alpha(i, 0) = 0.5 * std::log(components(i));
    }
    const TotalLoss tl = total_loss(components, st.alpha.col(0), mask);

    if (!std::isfinite(tl.value))
      throw NumericFailure("train: total loss non-finite at epoch " + std::to_string(epoch));
    if (epoch == 1) initial_total = tl.value;
    const double guard = std::max(1e6, 2.0 * std::abs(initial_total));
    if (tl.value > guard) {
      std::ostringstream msg;
      msg << "train: loss diverged at epoch " << epoch << " (total " << tl.value
          << " > guard " << guard << "; components cnode=" << l_cnode
          << " dnode=" << l_dnode << " graph=" << l_graph << " se=" << se.value << ")";
      throw NumericFailure(msg.str());
    }

    // ---- backward ----
    std::array<Matrix, 4> d_z;
    for (int v : active)
      d_z[static_cast<std::size_t>(v)] =
          Matrix::Zero(n, emb[static_cast<std::size_t>(v)]->z.cols());

    GradSet g;
    g.w1_spec = Matrix::Zero(st.gcn_spec.w1.rows(), st.gcn_spec.w1.cols());
    g.w2_spec = Matrix::Zero(st.gcn_spec.w2.rows(), st.gcn_spec.w2.cols());
    g.m_spec = Matrix::Zero(st.att_spec.m.rows(), 1);
    g.w1_tex = Matrix::Zero(st.gcn_tex.w1.rows(), st.gcn_tex.w1.cols());
    g.w2_tex = Matrix::Zero(st.gcn_tex.w2.rows(), st.gcn_tex.w2.cols());
    g.m_tex = Matrix::Zero(st.att_tex.m.rows(), 1);
    g.c = Matrix::Zero(n, n);
    g.alpha = tl.grad_alpha;

    if (cnode_on) {
      const double s = tl.weights(0) / static_cast<double>(n_families);
      if (cnode_spec) {
        d_z[0] += s * cnode_spec->grad_a;
        d_z[1] += s * cnode_spec->grad_b;
      }
      if (cnode_tex) {
        d_z[2] += s * cnode_tex->grad_a;
        d_z[3] += s * cnode_tex->grad_b;
      }
    }

    if (dnode_on) {
      const double w = tl.weights(1);
      if (dnode_mean) {
        d_z[0] += 0.5 * w * dnode_mean->grad_a;
        d_z[1] += 0.5 * w * dnode_mean->grad_a;
        d_z[2] += 0.5 * w * dnode_mean->grad_b;
        d_z[3] += 0.5 * w * dnode_mean->grad_b;
      } else {
        const double s = w / static_cast<double>(dnode_pair_results.size());
        for (std::size_t t = 0; t < dnode_pairs.size(); ++t) {
          d_z[static_cast<std::size_t>(dnode_pairs[t].first)] +=
              s * dnode_pair_results[t].grad_a;
          d_z[static_cast<std::size_t>(dnode_pairs[t].second)] +=
              s * dnode_pair_results[t].grad_b;
        }
      }
    }

    if (graph_on) {
      const double w = tl.weights(2);
      std::array<Vector, 4> d_s;
      for (int v : active) d_s[static_cast<std::size_t>(v)] = Vector::Zero(cfg.out_dim);
      for (std::size_t t = 0; t < pos_views.size(); ++t) {
        d_s[static_cast<std::size_t>(pos_views[t].first)] +=
            w * graph_res->grad_positives[t].first;
        d_s[static_cast<std::size_t>(pos_views[t].second)] +=
            w * graph_res->grad_positives[t].second;
      }
      for (int v : active) {
        const PoolGrads pg =
            attention_pool_backward(d_s[static_cast<std::size_t>(v)],
                                    pooled[static_cast<std::size_t>(v)]->cache);
        (v < 2 ? g.m_spec : g.m_tex) += pg.m;
        d_z[static_cast<std::size_t>(v)] += pg.z;
      }
      for (std::size_t j = 0; j < corrupt_pool.size(); ++j) {
        const int v = corrupt_view[j];
        const PoolGrads pg = attention_pool_backward(w * graph_res->grad_negatives[j],
                                                     corrupt_pool[j].cache);
        (v < 2 ? g.m_spec : g.m_tex) += pg.m;
        d_z[static_cast<std::size_t>(v)] +=
            pg.z_scores + unpermute_rows(pg.z_values, corrupt_perm[j]);
      }
    }

    {
      const double w = tl.weights(3);
      g.c = w * se.grad_c;
      Matrix gf = w * se.grad_f;
      if (both) {
        const FuseGrads fg =
            fuse_backward(gf, *fusion, z_spec_mean, z_tex_mean, cfg.fusion_granularity);
        d_z[0] += 0.5 * fg.spec;
        d_z[1] += 0.5 * fg.spec;
        d_z[2] += 0.5 * fg.tex;
        d_z[3] += 0.5 * fg.tex;
      } else if (use_spec) {
        d_z[0] += 0.5 * gf;
        d_z[1] += 0.5 * gf;
      } else {
        d_z[2] += 0.5 * gf;
        d_z[3] += 0.5 * gf;
      }
    }

    for (int v : active) {
      const GcnGrads gg = gcn_backward(d_z[static_cast<std::size_t>(v)],
                                       emb[static_cast<std::size_t>(v)]->cache);
      if (v < 2) {
        g.w1_spec += gg.w1;
        g.w2_spec += gg.w2;
      } else {
        g.w1_tex += gg.w1;
        g.w2_tex += gg.w2;
      }
    }

    if (epoch <= 5) {
      auto note = [&st](const char* name, const Matrix& grad) {
        double& slot = st.early_grad_max[name];
        slot = std::max(slot, grad.norm());
      };
      note("w1_spec", g.w1_spec);
      note("w2_spec", g.w2_spec);
      note("m_spec", g.m_spec);
      note("w1_tex", g.w1_tex);
      note("w2_tex", g.w2_tex);
      note("m_tex", g.m_tex);
      note("c", g.c);
      note("alpha", g.alpha);
    }

    if (cfg.freeze_encoders) {
      g.w1_spec.setZero();
      g.w2_spec.setZero();
      g.m_spec.setZero();
      g.w1_tex.setZero();
      g.w2_tex.setZero();
      g.m_tex.setZero();
    }
    if (cfg.freeze_uncertainty) g.alpha.setZero();

    if (cfg.grad_clip_norm > 0.0) {
      const double norm = global_norm(g);
      if (norm > cfg.grad_clip_norm) scale_all(g, cfg.grad_clip_norm / norm);
    }

    // ---- update ----
    const Eigen::Vector4d alpha_used = st.alpha.col(0);
    st.step_count = epoch;
    adam_step(st.gcn_spec.w1, g.w1_spec, st.moments["w1_spec"], epoch, cfg.learning_rate);
    adam_step(st.gcn_spec.w2, g.w2_spec, st.moments["w2_spec"], epoch, cfg.learning_rate);
    adam_step(st.att_spec.m, g.m_spec, st.moments["m_spec"], epoch, cfg.learning_rate);
    adam_step(st.gcn_tex.w1, g.w1_tex, st.moments["w1_tex"], epoch, cfg.learning_rate);
    adam_step(st.gcn_tex.w2, g.w2_tex, st.moments["w2_tex"], epoch, cfg.learning_rate);
    adam_step(st.att_tex.m, g.m_tex, st.moments["m_tex"], epoch, cfg.learning_rate);
    adam_step(st.c, g.c, st.moments["c"], epoch, cfg.c_learning_rate);
    adam_step(st.alpha, g.alpha, st.moments["alpha"], epoch, cfg.learning_rate);

    st.c.diagonal().setZero();
    if (st.c.diagonal().cwiseAbs().maxCoeff() > 0.0)
      throw NumericFailure("train: diag(C) invariant broken at epoch " + std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_cnode = l_cnode;
    rec.l_dnode = l_dnode;
    rec.l_graph = l_graph;
    rec.l_se = se.value;
    rec.w_cnode = std::exp(-alpha_used(0));
    rec.w_dnode = std::exp(-alpha_used(1));
    rec.w_graph = std::exp(-alpha_used(2));
    rec.w_se = std::exp(-alpha_used(3));
    rec.total = tl.value;
    st.history.push_back(rec);

    if (on_epoch) on_epoch(st, epoch);
  }
  return st;
}

std::string serialize_history(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out << "epoch,l_cnode,l_dnode,l_graph,l_se,w_cnode,w_dnode,w_graph,w_se,total\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g%c", v, sep);
    out << buf;
  };
  for (const auto& r : history) {
    out << r.epoch << ',';
    put(r.l_cnode, ',');
    put(r.l_dnode, ',');
    put(r.l_graph, ',');
    put(r.l_se, ',');
    put(r.w_cnode, ',');
    put(r.w_dnode, ',');
    put(r.w_graph, ',');
    put(r.w_se, ',');
    put(r.total, '\n');
  }
  return out.str();
}

std::vector<EpochRecord> parse_history(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "epoch,l_cnode,l_dnode,l_graph,l_se,w_cnode,w_dnode,w_graph,w_se,total")
    throw ParseError("parse_history: bad or missing header line");
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(row, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() != 10)
      throw ParseError("parse_history: expected 10 fields, got " +
                       std::to_string(vals.size()));
    EpochRecord r;
    r.epoch = static_cast<int>(vals[0]);
    r.l_cnode = vals[1];
    r.l_dnode = vals[2];
    r.l_graph = vals[3];
    r.l_se = vals[4];
    r.w_cnode = vals[5];
    r.w_dnode = vals[6];
    r.w_graph = vals[7];
    r.w_se = vals[8];
    r.total = vals[9];
    out.push_back(r);
  }
  return out;
}

namespace {

constexpr const char* kStateMagic = "MLGSC-STATE v1";

void write_block(std::ofstream& out, const std::string& name, const Matrix& m) {
  const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
  out.write(name.data(), name_len);
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  // row-major payload for a documented, layout-independent file
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

Matrix read_block(std::ifstream& in, std::string& name) {
  std::uint32_t name_len = 0;
  in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
  if (!in || name_len > 1024) throw ParseError("state file: bad block name length");
  name.resize(name_len);
  in.read(name.data(), name_len);
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in) throw ParseError("state file: truncated block header");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t r = 0; r < rows; ++r)
    for (std::uint64_t c = 0; c < cols; ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) throw IntegrityError("state file: truncated block payload for " + name);
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  return m;
}

}  // namespace

void save_state(const TrainState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("save_state: cannot open " + path);
  out << kStateMagic << "\n";
  const std::uint64_t n_blocks = 8;
  out.write(reinterpret_cast<const char*>(&n_blocks), sizeof(n_blocks));
  write_block(out, "w1_spec", state.gcn_spec.w1);
  write_block(out, "w2_spec", state.gcn_spec.w2);
  write_block(out, "m_spec", state.att_spec.m);
  write_block(out, "w1_tex", state.gcn_tex.w1);
  write_block(out, "w2_tex", state.gcn_tex.w2);
  write_block(out, "m_tex", state.att_tex.m);
  write_block(out, "c", state.c);
  write_block(out, "alpha", state.alpha);
  if (!out) throw IntegrityError("save_state: short write to " + path);
}

TrainState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_state: cannot open " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != kStateMagic)
    throw ParseError("load_state: bad magic '" + magic + "' in " + path);
  std::uint64_t n_blocks = 0;
  in.read(reinterpret_cast<char*>(&n_blocks), sizeof(n_blocks));
  if (!in) throw ParseError("load_state: missing block count");

  TrainState st;
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    std::string name;
    Matrix m = read_block(in, name);
    if (name == "w1_spec")
      st.gcn_spec.w1 = std::move(m);
    else if (name == "w2_spec")
      st.gcn_spec.w2 = std::move(m);
    else if (name == "m_spec")
      st.att_spec.m = std::move(m);
    else if (name == "w1_tex")
      st.gcn_tex.w1 = std::move(m);
    else if (name == "w2_tex")
      st.gcn_tex.w2 = std::move(m);
    else if (name == "m_tex")
      st.att_tex.m = std::move(m);
    else if (name == "c")
      st.c = std::move(m);
    else if (name == "alpha")
      st.alpha = std::move(m);
    else
      throw ParseError("load_state: unknown block '" + name + "'");
  }
  return st;
}

}  // namespace mlgsc
