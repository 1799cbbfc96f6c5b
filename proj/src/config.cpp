#include "rockfrag/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rockfrag/error.hpp"

namespace rockfrag {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto t = trim(v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size() || !std::isfinite(out))
    throw InputError("config " + key + ": not a number '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto t = trim(v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw InputError("config " + key + ": not an integer '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw InputError("config " + key + ": not a boolean '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw InputError("config " + key + ": empty list");
  return out;
}

std::optional<double> to_optional(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t.empty() || t == "none" || t == "auto") return std::nullopt;
  return to_double(key, t);
}

const char* method_name(CharacteristicMethod m) {
  return m == CharacteristicMethod::SwebrecFit ? "swebrec" : "interpolation";
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k = {
      "scale_object_mm", "fines_factor",   "alpha",          "power",        "effect_fraction",
      "target",          "min_frames",     "quality_threshold", "outlier_k", "quality_filter",
      "outlier_filter",  "method",         "overlap",        "fov_deg",      "image_width",
      "image_height",    "altitudes",      "sigma_px",       "marker_depth", "min_area_px",
      "min_contrast",    "exclude_border", "mm_per_pixel",   "scale_object_px", "altitude_m",
      "output_dir"};
  return k;
}

void Config::set(const std::string& raw_key, const std::string& value) {
  const auto key = trim(raw_key);
  if (key == "scale_object_mm") scale_object_mm = to_double(key, value);
  else if (key == "fines_factor") fines_factor = to_double(key, value);
  else if (key == "alpha") alpha = to_double(key, value);
  else if (key == "power") power = to_double(key, value);
  else if (key == "effect_fraction") effect_fraction = to_double(key, value);
  else if (key == "target") target = parse_target_size(trim(value));
  else if (key == "min_frames") min_frames = to_int(key, value);
  else if (key == "quality_threshold") quality_threshold = to_double(key, value);
  else if (key == "outlier_k") outlier_k = to_double(key, value);
  else if (key == "quality_filter") quality_filter = to_bool(key, value);
  else if (key == "outlier_filter") outlier_filter = to_bool(key, value);
  else if (key == "method") {
    const auto t = trim(value);
    if (t == "swebrec") method = CharacteristicMethod::SwebrecFit;
    else if (t == "interpolation") method = CharacteristicMethod::Interpolation;
    else throw InputError("config method: expected swebrec or interpolation, got '" + t + "'");
  }
  else if (key == "overlap") overlap = to_double(key, value);
  else if (key == "fov_deg") fov_deg = to_double(key, value);
  else if (key == "image_width") image_width = to_int(key, value);
  else if (key == "image_height") image_height = to_int(key, value);
  else if (key == "altitudes") altitudes = to_list(key, value);
  else if (key == "sigma_px") sigma_px = to_double(key, value);
  else if (key == "marker_depth") marker_depth = to_double(key, value);
  else if (key == "min_area_px") min_area_px = to_double(key, value);
  else if (key == "min_contrast") min_contrast = to_double(key, value);
  else if (key == "exclude_border") exclude_border = to_bool(key, value);
  else if (key == "mm_per_pixel") mm_per_pixel = to_optional(key, value);
  else if (key == "scale_object_px") scale_object_px = to_optional(key, value);
  else if (key == "altitude_m") altitude_m = to_optional(key, value);
  else if (key == "output_dir") output_dir = trim(value);
  else throw InputError("config: unknown key '" + key + "'");
}

void Config::validate() const {
  if (!(scale_object_mm > 0.0)) throw InputError("config scale_object_mm must be > 0");
  if (!(fines_factor >= 0.0 && fines_factor <= 1.0)) throw InputError("config fines_factor must lie in [0, 1]");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InputError("config overlap must lie in [0, 1)");
  if (altitudes.size() != 2) throw InputError("config altitudes: exactly two levels required");
  for (double a : altitudes)
    if (!(a > 0.0)) throw InputError("config altitudes must be > 0");
  if (mm_per_pixel && !(*mm_per_pixel > 0.0)) throw InputError("config mm_per_pixel must be > 0");
  if (scale_object_px && !(*scale_object_px > 0.0)) throw InputError("config scale_object_px must be > 0");
  if (altitude_m && !(*altitude_m > 0.0)) throw InputError("config altitude_m must be > 0");
  if (output_dir.empty()) throw InputError("config output_dir is empty");
  stopping().validate();
  mission().analysis.segmentation.validate();
  camera().validate();
}

StoppingConfig Config::stopping() const {
  StoppingConfig s;
  s.target = target;
  s.effect_fraction = effect_fraction;
  s.alpha = alpha;
  s.power = power;
  s.min_frames = min_frames;
  s.quality_threshold = quality_threshold;
  s.outlier_k = outlier_k;
  return s;
}

MissionConfig Config::mission() const {
  MissionConfig m;
  m.stopping = stopping();
  m.analysis.fines_factor = fines_factor;
  m.analysis.method = method;
  m.analysis.segmentation.sigma_px = sigma_px;
  m.analysis.segmentation.marker_depth = marker_depth;
  m.analysis.segmentation.min_area_px = min_area_px;
  m.analysis.segmentation.min_contrast = min_contrast;
  m.analysis.segmentation.exclude_border = exclude_border;
  m.quality_filter = quality_filter;
  m.outlier_filter = outlier_filter;
  return m;
}

CameraModel Config::camera() const { return CameraModel{fov_deg, image_width, image_height}; }

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("none"); };
  std::string alts;
  for (std::size_t i = 0; i < altitudes.size(); ++i) alts += (i ? "," : "") + fmt(altitudes[i]);
  return {{"scale_object_mm", fmt(scale_object_mm)},
          {"fines_factor", fmt(fines_factor)},
          {"alpha", fmt(alpha)},
          {"power", fmt(power)},
          {"effect_fraction", fmt(effect_fraction)},
          {"target", to_string(target)},
          {"min_frames", std::to_string(min_frames)},
          {"quality_threshold", fmt(quality_threshold)},
          {"outlier_k", fmt(outlier_k)},
          {"quality_filter", b(quality_filter)},
          {"outlier_filter", b(outlier_filter)},
          {"method", method_name(method)},
          {"overlap", fmt(overlap)},
          {"fov_deg", fmt(fov_deg)},
          {"image_width", std::to_string(image_width)},
          {"image_height", std::to_string(image_height)},
          {"altitudes", alts},
          {"sigma_px", fmt(sigma_px)},
          {"marker_depth", fmt(marker_depth)},
          {"min_area_px", fmt(min_area_px)},
          {"min_contrast", fmt(min_contrast)},
          {"exclude_border", b(exclude_border)},
          {"mm_per_pixel", opt(mm_per_pixel)},
          {"scale_object_px", opt(scale_object_px)},
          {"altitude_m", opt(altitude_m)},
          {"output_dir", output_dir}};
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

Config parse_config(const std::string& text, Config base, const std::string& source) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError(source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      base.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base), path.string());
}

std::optional<std::filesystem::path> config_path_from_env() {
  const char* v = std::getenv(kConfigEnvVar);
  if (!v || !*v) return std::nullopt;
  return std::filesystem::path(v);
}

}  // namespace rockfrag
