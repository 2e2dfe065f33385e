#include "mlgsc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mlgsc/errors.hpp"

namespace mlgsc {

namespace {

constexpr const char* kCubeMagic = "MLGSC-CUBE v1";
constexpr const char* kLabelsMagic = "MLGSC-LABELS v1";

std::string strip_hdr_suffix(const std::string& path) {
  const std::string suffix = ".hdr";
  if (path.size() > suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return path.substr(0, path.size() - suffix.size());
  return path;
}

struct Header {
  std::string magic;
  std::map<std::string, std::string> fields;
};

Header read_header(const std::string& hdr_path) {
  std::ifstream in(hdr_path);
  if (!in) throw ParseError("cannot open header file: " + hdr_path);
  Header h;
  if (!std::getline(in, h.magic))
    throw ParseError("empty header file: " + hdr_path + " (offset 0)");
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw ParseError("header " + hdr_path + " line " + std::to_string(line_no) +
                       ": expected 'key: value'");
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    h.fields[key] = value;
  }
  return h;
}

Eigen::Index header_count(const Header& h, const std::string& key, const std::string& path) {
  auto it = h.fields.find(key);
  if (it == h.fields.end()) throw ParseError("header " + path + ": missing key '" + key + "'");
  long long v = 0;
  try {
    v = std::stoll(it->second);
  } catch (const std::exception&) {
    throw ParseError("header " + path + ": key '" + key + "' is not an integer");
  }
  if (v <= 0)
    throw ParseError("header " + path + ": key '" + key + "' must be positive, got " +
                     it->second);
  return static_cast<Eigen::Index>(v);
}

void require_field(const Header& h, const std::string& key, const std::string& want,
                   const std::string& path) {
  auto it = h.fields.find(key);
  if (it == h.fields.end() || it->second != want)
    throw ParseError("header " + path + ": expected '" + key + ": " + want + "'");
}

std::vector<char> read_payload(const std::string& raw_path, std::size_t expected_bytes) {
  std::ifstream in(raw_path, std::ios::binary | std::ios::ate);
  if (!in) throw IntegrityError("cannot open payload file: " + raw_path);
  const auto actual = static_cast<std::size_t>(in.tellg());
  if (actual != expected_bytes)
    throw IntegrityError("payload " + raw_path + ": expected " +
                         std::to_string(expected_bytes) + " bytes, found " +
                         std::to_string(actual));
  std::vector<char> buf(expected_bytes);
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(expected_bytes));
  if (!in) throw IntegrityError("payload " + raw_path + ": short read");
  return buf;
}

void write_file(const std::string& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot open for writing: " + path);
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw IntegrityError("short write: " + path);
}

// On-disk payloads are little-endian; this code assumes a little-endian host.
static_assert(std::endian::native == std::endian::little,
              "big-endian hosts need byte swapping in data.cpp");

}  // namespace

Matrix HsiCube::as_pixel_matrix() const {
  Matrix m(pixels(), bands);
  for (Eigen::Index p = 0; p < pixels(); ++p)
    for (Eigen::Index b = 0; b < bands; ++b)
      m(p, b) = values[static_cast<std::size_t>(p * bands + b)];
  return m;
}

int LabelMap::num_classes() const {
  std::uint16_t mx = 0;
  for (auto v : labels) mx = std::max(mx, v);
  return static_cast<int>(mx);
}

void save_cube(const HsiCube& cube, const std::string& path) {
  const std::string base = strip_hdr_suffix(path);
  std::ostringstream hdr;
  hdr << kCubeMagic << "\n";
  hdr << "height: " << cube.height << "\n";
  hdr << "width: " << cube.width << "\n";
  hdr << "bands: " << cube.bands << "\n";
  hdr << "dtype: f32\n";
  hdr << "byte_order: little\n";
  if (!cube.wavelength_nm.empty()) {
    hdr << "wavelength_nm:";
    for (std::size_t i = 0; i < cube.wavelength_nm.size(); ++i)
      hdr << (i ? "," : " ") << cube.wavelength_nm[i];
    hdr << "\n";
  }
  const std::string htext = hdr.str();
  write_file(base + ".hdr", htext.data(), htext.size());

  std::vector<float> payload(cube.values.size());
  for (std::size_t i = 0; i < cube.values.size(); ++i)
    payload[i] = static_cast<float>(cube.values[i]);
  write_file(base + ".raw", reinterpret_cast<const char*>(payload.data()),
             payload.size() * sizeof(float));
}

HsiCube load_cube(const std::string& path) {
  const std::string base = strip_hdr_suffix(path);
  const Header h = read_header(base + ".hdr");
  if (h.magic != kCubeMagic)
    throw ParseError("header " + base + ".hdr: bad magic '" + h.magic + "', expected '" +
                     kCubeMagic + "' (offset 0)");
  HsiCube cube;
  cube.height = header_count(h, "height", base + ".hdr");
  cube.width = header_count(h, "width", base + ".hdr");
  cube.bands = header_count(h, "bands", base + ".hdr");
  require_field(h, "dtype", "f32", base + ".hdr");
  require_field(h, "byte_order", "little", base + ".hdr");
  if (auto it = h.fields.find("wavelength_nm"); it != h.fields.end()) {
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) cube.wavelength_nm.push_back(std::stod(tok));
    if (static_cast<Eigen::Index>(cube.wavelength_nm.size()) != cube.bands)
      throw ParseError("header " + base + ".hdr: wavelength_nm length != bands");
  }

  const std::size_t count =
      static_cast<std::size_t>(cube.height) * cube.width * cube.bands;
  const std::vector<char> buf = read_payload(base + ".raw", count * sizeof(float));
  cube.values.resize(count);
  const float* f = reinterpret_cast<const float*>(buf.data());
  for (std::size_t i = 0; i < count; ++i) cube.values[i] = static_cast<double>(f[i]);
  return cube;
}

void save_labels(const LabelMap& labels, const std::string& path) {
  const std::string base = strip_hdr_suffix(path);
  std::ostringstream hdr;
  hdr << kLabelsMagic << "\n";
  hdr << "height: " << labels.height << "\n";
  hdr << "width: " << labels.width << "\n";
  hdr << "dtype: u16\n";
  hdr << "byte_order: little\n";
  const std::string htext = hdr.str();
  write_file(base + ".hdr", htext.data(), htext.size());
  write_file(base + ".raw", reinterpret_cast<const char*>(labels.labels.data()),
             labels.labels.size() * sizeof(std::uint16_t));
}

LabelMap load_labels(const std::string& path) {
  const std::string base = strip_hdr_suffix(path);
  const Header h = read_header(base + ".hdr");
  if (h.magic != kLabelsMagic)
    throw ParseError("header " + base + ".hdr: bad magic '" + h.magic + "', expected '" +
                     kLabelsMagic + "' (offset 0)");
  LabelMap lm;
  lm.height = header_count(h, "height", base + ".hdr");
  lm.width = header_count(h, "width", base + ".hdr");
  require_field(h, "dtype", "u16", base + ".hdr");
  require_field(h, "byte_order", "little", base + ".hdr");

  const std::size_t count = static_cast<std::size_t>(lm.height) * lm.width;
  const std::vector<char> buf = read_payload(base + ".raw", count * sizeof(std::uint16_t));
  lm.labels.resize(count);
  std::memcpy(lm.labels.data(), buf.data(), count * sizeof(std::uint16_t));
  return lm;
}

HsiCube normalize_bands(const HsiCube& cube) {
  HsiCube out = cube;
  for (Eigen::Index b = 0; b < cube.bands; ++b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < cube.pixels(); ++p) {
      const double v = cube.values[static_cast<std::size_t>(p * cube.bands + b)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi - lo;
    for (Eigen::Index p = 0; p < cube.pixels(); ++p) {
      double& v = out.values[static_cast<std::size_t>(p * cube.bands + b)];
      v = span > 0.0 ? (v - lo) / span : 0.0;
    }
  }
  return out;
}

std::pair<HsiCube, LabelMap> crop_scene(const HsiCube& cube, const LabelMap& labels,
                                        const SceneCrop& c) {
  if (cube.height != labels.height || cube.width != labels.width)
    throw ContractViolation("crop_scene: cube and label dimensions differ");
  if (c.row_begin < 0 || c.col_begin < 0 || c.row_end > cube.height ||
      c.col_end > cube.width || c.row_begin >= c.row_end || c.col_begin >= c.col_end)
    throw ContractViolation("crop_scene: crop out of bounds or empty");

  HsiCube out;
  out.height = c.row_end - c.row_begin;
  out.width = c.col_end - c.col_begin;
  out.bands = cube.bands;
  out.wavelength_nm = cube.wavelength_nm;
  out.values.resize(static_cast<std::size_t>(out.pixels() * out.bands));
  LabelMap lout;
  lout.height = out.height;
  lout.width = out.width;
  lout.labels.resize(static_cast<std::size_t>(out.pixels()));
  for (Eigen::Index r = 0; r < out.height; ++r) {
    for (Eigen::Index col = 0; col < out.width; ++col) {
      lout.at(r, col) = labels.at(r + c.row_begin, col + c.col_begin);
      for (Eigen::Index b = 0; b < out.bands; ++b)
        out.at(r, col, b) = cube.at(r + c.row_begin, col + c.col_begin, b);
    }
  }
  return {std::move(out), std::move(lout)};
}

namespace {

// Smooth per-class signature: offset sinusoid with class-specific frequency
// and phase, kept inside [0.1, 0.9].
std::vector<double> class_signature(int cls, Eigen::Index bands, Rng& rng) {
  const double freq = 1.0 + 0.7 * cls + 0.2 * rng.uniform();
  const double phase = rng.uniform(0.0, 6.283185307179586);
  const double amp = 0.3 + 0.1 * rng.uniform();
  std::vector<double> sig(static_cast<std::size_t>(bands));
  for (Eigen::Index b = 0; b < bands; ++b) {
    const double t = bands > 1 ? static_cast<double>(b) / static_cast<double>(bands - 1) : 0.0;
    sig[static_cast<std::size_t>(b)] =
        0.5 + amp * std::sin(6.283185307179586 * freq * t + phase);
  }
  return sig;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

SynthScene synth_scene(int k_classes, Eigen::Index height, Eigen::Index width,
                       Eigen::Index bands, double noise_sigma, Rng& rng) {
  if (k_classes < 2) throw ContractViolation("synth_scene: k_classes must be >= 2");
  if (height < 1 || width < 1 || bands < 1)
    throw ContractViolation("synth_scene: dimensions must be positive");
  if (k_classes > height * width)
    throw ContractViolation("synth_scene: more classes than pixels");

  const Eigen::Index n_pixels = height * width;
  const auto min_pixels = static_cast<Eigen::Index>(
      std::max<double>(1.0, 0.01 * static_cast<double>(n_pixels)));

  constexpr int kRetryCap = 100;
  for (int attempt = 0; attempt < kRetryCap; ++attempt) {
    // Voronoi regions over random seed pixels
    std::vector<Eigen::Index> seed_r(k_classes), seed_c(k_classes);
    for (int k = 0; k < k_classes; ++k) {
      seed_r[k] = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(height)));
      seed_c[k] = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(width)));
    }
    LabelMap lm;
    lm.height = height;
    lm.width = width;
    lm.labels.assign(static_cast<std::size_t>(n_pixels), 0);
    std::vector<Eigen::Index> counts(k_classes, 0);
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        int best = 0;
        Eigen::Index best_d = std::numeric_limits<Eigen::Index>::max();
        for (int k = 0; k < k_classes; ++k) {
          const Eigen::Index d =
              (r - seed_r[k]) * (r - seed_r[k]) + (c - seed_c[k]) * (c - seed_c[k]);
          if (d < best_d) {
            best_d = d;
            best = k;
          }
        }
        lm.at(r, c) = static_cast<std::uint16_t>(best + 1);
        counts[best]++;
      }
    }
    if (*std::min_element(counts.begin(), counts.end()) < min_pixels) continue;

    // Signatures must be pairwise distinct by a clear margin.
    std::vector<std::vector<double>> sigs;
    for (int k = 0; k < k_classes; ++k) sigs.push_back(class_signature(k, bands, rng));
    bool distinct = true;
    for (int a = 0; a < k_classes && distinct; ++a)
      for (int b = a + 1; b < k_classes; ++b)
        if (max_abs_diff(sigs[a], sigs[b]) < 0.05) {
          distinct = false;
          break;
        }
    if (!distinct) continue;

    HsiCube cube;
    cube.height = height;
    cube.width = width;
    cube.bands = bands;
    cube.values.resize(static_cast<std::size_t>(n_pixels * bands));
    for (Eigen::Index p = 0; p < n_pixels; ++p) {
      const auto& sig = sigs[static_cast<std::size_t>(lm.labels[static_cast<std::size_t>(p)] - 1)];
      for (Eigen::Index b = 0; b < bands; ++b) {
        double v = sig[static_cast<std::size_t>(b)];
        if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
        // round through f32 so disk round trips are exact
        cube.values[static_cast<std::size_t>(p * bands + b)] =
            static_cast<double>(static_cast<float>(v));
      }
    }
    return SynthScene{std::move(cube), std::move(lm)};
  }
  throw NumericFailure("synth_scene: could not place all classes above the 1% floor after 100 attempts");
}

}  // namespace mlgsc
