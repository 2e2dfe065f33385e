#include "mlgsc/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mlgsc/errors.hpp"

namespace mlgsc {

void RunConfig::validate() const {
  const bool has_files = !cube_path.empty() || !labels_path.empty();
  if (has_files && synthetic)
    throw ContractViolation("config: choose dataset files or synthetic mode, not both");
  if (!has_files && !synthetic)
    throw ContractViolation("config: no data source (set [data] cube/labels or synthetic=true)");
  if (has_files && (cube_path.empty() || labels_path.empty()))
    throw ContractViolation("config: dataset mode needs both cube and labels paths");
  if (synthetic && synth_classes < 2)
    throw ContractViolation("config: synth_classes must be >= 2");
  if (n_clusters < 2) throw ContractViolation("config: n_clusters must be >= 2");
  if (affinity_topq < 0) throw ContractViolation("config: affinity_topq must be >= 0");
  views.validate();
  train.validate();
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("config line " + std::to_string(line_no) + ": unterminated section");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string id = section + "." + key;

    if (id == "run.seed") cfg.seed = parse_u64(value, id);
    else if (id == "run.out_dir") cfg.out_dir = value;
    else if (id == "run.n_clusters") cfg.n_clusters = static_cast<int>(parse_int(value, id));
    else if (id == "data.cube") cfg.cube_path = value;
    else if (id == "data.labels") cfg.labels_path = value;
    else if (id == "data.synthetic") cfg.synthetic = parse_bool(value, id);
    else if (id == "data.synth_classes") cfg.synth_classes = static_cast<int>(parse_int(value, id));
    else if (id == "data.synth_height") cfg.synth_height = parse_int(value, id);
    else if (id == "data.synth_width") cfg.synth_width = parse_int(value, id);
    else if (id == "data.synth_bands") cfg.synth_bands = parse_int(value, id);
    else if (id == "data.synth_noise_sigma") cfg.synth_noise_sigma = parse_double(value, id);
    else if (id == "crop.enabled") cfg.crop_enabled = parse_bool(value, id);
    else if (id == "crop.row_begin") cfg.crop.row_begin = parse_int(value, id);
    else if (id == "crop.row_end") cfg.crop.row_end = parse_int(value, id);
    else if (id == "crop.col_begin") cfg.crop.col_begin = parse_int(value, id);
    else if (id == "crop.col_end") cfg.crop.col_end = parse_int(value, id);
    else if (id == "views.pca_spectral")
      cfg.views.pca_components_spectral = static_cast<int>(parse_int(value, id));
    else if (id == "views.pca_texture")
      cfg.views.pca_components_texture = static_cast<int>(parse_int(value, id));
    else if (id == "views.window") cfg.views.window_w = static_cast<int>(parse_int(value, id));
    else if (id == "views.knn") cfg.views.knn_k = static_cast<int>(parse_int(value, id));
    else if (id == "views.se_radii") {
      cfg.views.se_radii.clear();
      std::istringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ','))
        cfg.views.se_radii.push_back(static_cast<int>(parse_int(trim(tok), id)));
    } else if (id == "views.edge_drop")
      cfg.views.drop_prob_delta = parse_double(value, id);
    else if (id == "views.sx_adjacency") {
      if (value == "spectral") cfg.views.sx_adjacency = SxAdjacency::spectral;
      else if (value == "texture") cfg.views.sx_adjacency = SxAdjacency::texture;
      else if (value == "mean") cfg.views.sx_adjacency = SxAdjacency::mean;
      else throw ParseError("config: sx_adjacency must be spectral|texture|mean");
    } else if (id == "contrastive.tau")
      cfg.train.contrastive.tau = parse_double(value, id);
    else if (id == "contrastive.inter_view_pairing") {
      if (value == "mean") cfg.train.inter_view_pairing = InterViewPairing::mean;
      else if (value == "all_pairs") cfg.train.inter_view_pairing = InterViewPairing::all_pairs;
      else throw ParseError("config: inter_view_pairing must be mean|all_pairs");
    } else if (id == "fusion.granularity") {
      if (value == "coordinate") cfg.train.fusion_granularity = FusionGranularity::coordinate;
      else if (value == "node") cfg.train.fusion_granularity = FusionGranularity::node;
      else throw ParseError("config: fusion granularity must be coordinate|node");
    } else if (id == "self_expression.lambda")
      cfg.train.sx_lambda = parse_double(value, id);
    else if (id == "train.epochs") cfg.train.epochs = static_cast<int>(parse_int(value, id));
    else if (id == "train.learning_rate") cfg.train.learning_rate = parse_double(value, id);
    else if (id == "train.c_learning_rate")
      cfg.train.c_learning_rate = parse_double(value, id);
    else if (id == "train.hidden_dim") cfg.train.hidden_dim = static_cast<int>(parse_int(value, id));
    else if (id == "train.out_dim") cfg.train.out_dim = static_cast<int>(parse_int(value, id));
    else if (id == "train.enable_cnode") cfg.train.enable_cnode = parse_bool(value, id);
    else if (id == "train.enable_dnode") cfg.train.enable_dnode = parse_bool(value, id);
    else if (id == "train.enable_graph") cfg.train.enable_graph = parse_bool(value, id);
    else if (id == "train.enable_spectral_view")
      cfg.train.enable_spectral_view = parse_bool(value, id);
    else if (id == "train.enable_texture_view")
      cfg.train.enable_texture_view = parse_bool(value, id);
    else if (id == "train.grad_clip_norm") cfg.train.grad_clip_norm = parse_double(value, id);
    else if (id == "train.resample_augmentation_each_epoch")
      cfg.train.resample_augmentation_each_epoch = parse_bool(value, id);
    else if (id == "clustering.nmi_norm") {
      if (value == "arithmetic") cfg.nmi_norm = NmiNorm::arithmetic;
      else if (value == "geometric") cfg.nmi_norm = NmiNorm::geometric;
      else if (value == "max") cfg.nmi_norm = NmiNorm::max;
      else throw ParseError("config: nmi_norm must be arithmetic|geometric|max");
    } else if (id == "clustering.affinity_topq")
      cfg.affinity_topq = static_cast<int>(parse_int(value, id));
    else
      throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + id + "'");
  }
  return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "n_clusters = " << cfg.n_clusters << "\n";
  out << "\n[data]\n";
  if (!cfg.cube_path.empty()) out << "cube = " << cfg.cube_path << "\n";
  if (!cfg.labels_path.empty()) out << "labels = " << cfg.labels_path << "\n";
  out << "synthetic = " << fmt_bool(cfg.synthetic) << "\n";
  out << "synth_classes = " << cfg.synth_classes << "\n";
  out << "synth_height = " << cfg.synth_height << "\n";
  out << "synth_width = " << cfg.synth_width << "\n";
  out << "synth_bands = " << cfg.synth_bands << "\n";
  out << "synth_noise_sigma = " << fmt_double(cfg.synth_noise_sigma) << "\n";
  out << "\n[crop]\n";
  out << "enabled = " << fmt_bool(cfg.crop_enabled) << "\n";
  out << "row_begin = " << cfg.crop.row_begin << "\n";
  out << "row_end = " << cfg.crop.row_end << "\n";
  out << "col_begin = " << cfg.crop.col_begin << "\n";
  out << "col_end = " << cfg.crop.col_end << "\n";
  out << "\n[views]\n";
  out << "pca_spectral = " << cfg.views.pca_components_spectral << "\n";
  out << "pca_texture = " << cfg.views.pca_components_texture << "\n";
  out << "window = " << cfg.views.window_w << "\n";
  out << "knn = " << cfg.views.knn_k << "\n";
  out << "se_radii = ";
  for (std::size_t i = 0; i < cfg.views.se_radii.size(); ++i)
    out << (i ? "," : "") << cfg.views.se_radii[i];
  out << "\n";
  out << "edge_drop = " << fmt_double(cfg.views.drop_prob_delta) << "\n";
  out << "sx_adjacency = "
      << (cfg.views.sx_adjacency == SxAdjacency::spectral
              ? "spectral"
              : cfg.views.sx_adjacency == SxAdjacency::texture ? "texture" : "mean")
      << "\n";
  out << "\n[contrastive]\n";
  out << "tau = " << fmt_double(cfg.train.contrastive.tau) << "\n";
  out << "inter_view_pairing = "
      << (cfg.train.inter_view_pairing == InterViewPairing::mean ? "mean" : "all_pairs")
      << "\n";
  out << "\n[fusion]\n";
  out << "granularity = "
      << (cfg.train.fusion_granularity == FusionGranularity::coordinate ? "coordinate"
                                                                        : "node")
      << "\n";
  out << "\n[self_expression]\n";
  out << "lambda = " << fmt_double(cfg.train.sx_lambda) << "\n";
  out << "\n[train]\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "learning_rate = " << fmt_double(cfg.train.learning_rate) << "\n";
  out << "c_learning_rate = " << fmt_double(cfg.train.c_learning_rate) << "\n";
  out << "hidden_dim = " << cfg.train.hidden_dim << "\n";
  out << "out_dim = " << cfg.train.out_dim << "\n";
  out << "enable_cnode = " << fmt_bool(cfg.train.enable_cnode) << "\n";
  out << "enable_dnode = " << fmt_bool(cfg.train.enable_dnode) << "\n";
  out << "enable_graph = " << fmt_bool(cfg.train.enable_graph) << "\n";
  out << "enable_spectral_view = " << fmt_bool(cfg.train.enable_spectral_view) << "\n";
  out << "enable_texture_view = " << fmt_bool(cfg.train.enable_texture_view) << "\n";
  out << "grad_clip_norm = " << fmt_double(cfg.train.grad_clip_norm) << "\n";
  out << "resample_augmentation_each_epoch = "
      << fmt_bool(cfg.train.resample_augmentation_each_epoch) << "\n";
  out << "\n[clustering]\n";
  out << "nmi_norm = "
      << (cfg.nmi_norm == NmiNorm::arithmetic
              ? "arithmetic"
              : cfg.nmi_norm == NmiNorm::geometric ? "geometric" : "max")
      << "\n";
  out << "affinity_topq = " << cfg.affinity_topq << "\n";
  return out.str();
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace mlgsc
