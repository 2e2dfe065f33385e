#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mlgsc/errors.hpp"
#include "mlgsc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mlgsc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run configuration file");
  cmd->add_option("--seed", opts.seed, "master seed override")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--out", opts.out_dir, "output directory override");
  cmd->add_flag("--print-config", opts.print_config,
                "print the effective configuration and exit");
}

RunConfig effective_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_run_config(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  cfg.train.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IntegrityError("short write: " + path);
}

int cmd_generate(const CommonOpts& opts) {
  RunConfig cfg = effective_config(opts);
  if (!cfg.synthetic)
    throw ContractViolation("generate: config must use synthetic mode");
  Rng rng = Rng(cfg.seed).split(kSynthStream);
  SynthScene scene = synth_scene(cfg.synth_classes, cfg.synth_height, cfg.synth_width,
                                 cfg.synth_bands, cfg.synth_noise_sigma, rng);
  fs::create_directories(cfg.out_dir);
  save_cube(scene.cube, cfg.out_dir + "/scene_cube");
  save_labels(scene.labels, cfg.out_dir + "/scene_labels");

  std::vector<std::size_t> counts(static_cast<std::size_t>(cfg.synth_classes), 0);
  for (auto v : scene.labels.labels) counts[v - 1]++;
  std::cout << "generated " << scene.cube.height << "x" << scene.cube.width << "x"
            << scene.cube.bands << " scene, " << cfg.synth_classes << " classes\n";
  for (std::size_t k = 0; k < counts.size(); ++k)
    std::cout << "  class " << (k + 1) << ": " << counts[k] << " pixels\n";
  std::cout << "wrote " << cfg.out_dir << "/scene_cube.{hdr,raw} and scene_labels.{hdr,raw}\n";
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  RunConfig cfg = effective_config(opts);
  PreparedScene scene = prepare_scene(cfg);
  ViewBundle bundle = prepare_views(scene, cfg);
  std::cout << "training on " << bundle.node_pixels.size() << " labeled pixels, "
            << cfg.train.epochs << " epochs\n";
  TrainState state = train(bundle, cfg.train);

  fs::create_directories(cfg.out_dir);
  save_state(state, cfg.out_dir + "/state.bin");
  write_text(cfg.out_dir + "/loss_history.csv", serialize_history(state.history));
  const EpochRecord& last = state.history.back();
  std::cout << "final losses: cnode=" << last.l_cnode << " dnode=" << last.l_dnode
            << " graph=" << last.l_graph << " se=" << last.l_se << " total=" << last.total
            << "\n";
  std::cout << "wrote " << cfg.out_dir << "/state.bin and loss_history.csv\n";
  return 0;
}

int cmd_cluster(const CommonOpts& opts, const std::string& state_path) {
  RunConfig cfg = effective_config(opts);
  PreparedScene scene = prepare_scene(cfg);
  ViewBundle bundle = prepare_views(scene, cfg);
  const std::string sp = state_path.empty() ? cfg.out_dir + "/state.bin" : state_path;
  TrainState state = load_state(sp);

  ClusterOutput out = cluster_with_state(scene, bundle, state, cfg);
  if (out.clusters.degenerate)
    std::cerr << "warning: affinity matrix is all zero; cluster labels are arbitrary\n";

  fs::create_directories(cfg.out_dir);
  save_labels(out.pred_map, cfg.out_dir + "/predicted_labels");
  write_text(cfg.out_dir + "/cluster_map.ppm", render_cluster_map_ppm(out.pred_map));
  if (out.metrics) {
    const std::string text = serialize_metrics(*out.metrics);
    write_text(cfg.out_dir + "/metrics.txt", text);
    std::cout << text;
  }
  std::cout << "wrote " << cfg.out_dir
            << "/predicted_labels.{hdr,raw}, cluster_map.ppm"
            << (out.metrics ? ", metrics.txt" : "") << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path) {
  const LabelMap pred = load_labels(pred_path);
  const LabelMap truth = load_labels(truth_path);
  if (pred.height != truth.height || pred.width != truth.width)
    throw IntegrityError("evaluate: label map dimensions differ");

  std::vector<int> p, t;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    if (truth.labels[i] == 0) continue;  // background excluded
    if (pred.labels[i] == 0)
      throw IntegrityError("evaluate: prediction unlabeled at a ground-truth pixel");
    p.push_back(pred.labels[i] - 1);
    t.push_back(truth.labels[i] - 1);
  }
  if (p.empty()) throw IntegrityError("evaluate: no labeled pixels in common");
  std::cout << serialize_metrics(evaluate(p, t));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("MLGSC_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"MLGSC: multi-level graph subspace contrastive clustering for HSI"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, cluster_opts;
  std::string state_path, pred_path, truth_path;

  CLI::App* gen = app.add_subcommand("generate", "write a synthetic labeled scene");
  add_common(gen, gen_opts);
  CLI::App* tr = app.add_subcommand("train", "train the model and persist the state");
  add_common(tr, train_opts);
  CLI::App* cl = app.add_subcommand("cluster", "cluster with a trained state and report metrics");
  add_common(cl, cluster_opts);
  cl->add_option("--state", state_path, "trained state file (default <out>/state.bin)");
  CLI::App* ev = app.add_subcommand("evaluate", "compare two label map files");
  ev->add_option("--pred", pred_path, "predicted label map (.hdr)")->required();
  ev->add_option("--truth", truth_path, "ground-truth label map (.hdr)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const CommonOpts* active = gen->parsed() ? &gen_opts
                               : tr->parsed() ? &train_opts
                               : cl->parsed() ? &cluster_opts
                                              : nullptr;
    if (active && active->print_config) {
      std::cout << serialize_run_config(effective_config(*active));
      return 0;
    }
    if (gen->parsed()) return cmd_generate(gen_opts);
    if (tr->parsed()) return cmd_train(train_opts);
    if (cl->parsed()) return cmd_cluster(cluster_opts, state_path);
    if (ev->parsed()) return cmd_evaluate(pred_path, truth_path);
  } catch (const ContractViolation& e) {
    std::cerr << "config/contract error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const IntegrityError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
