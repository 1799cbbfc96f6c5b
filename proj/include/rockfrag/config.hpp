#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rockfrag/mission.hpp"
#include "rockfrag/synthpile.hpp"

namespace rockfrag {

/// Every tunable of a run. Text form: one `key = value` per line, `#`
/// comments, lists comma-separated.
struct Config {
  double scale_object_mm = 60.0;
  double fines_factor = 0.0;
  double alpha = 0.05;
  double power = 0.80;
  double effect_fraction = 0.20;
  TargetSize target = TargetSize::P80;
  int min_frames = 2;
  double quality_threshold = 0.0;
  double outlier_k = 3.0;
  bool quality_filter = true;
  bool outlier_filter = true;
  CharacteristicMethod method = CharacteristicMethod::SwebrecFit;

  double overlap = 0.5;
  double fov_deg = 60.0;
  int image_width = 1280;
  int image_height = 960;
  std::vector<double> altitudes{1.0, 2.0};

  double sigma_px = 1.5;
  double marker_depth = 2.0;
  double min_area_px = 20.0;
  double min_contrast = 20.0;
  bool exclude_border = true;

  std::optional<double> mm_per_pixel;     // fixed calibration
  std::optional<double> scale_object_px;  // measured object length in the images
  std::optional<double> altitude_m;    // altitude-model calibration fallback
  std::string output_dir = "rockfrag_out";

  /// Throws InputError naming the key on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  StoppingConfig stopping() const;
  MissionConfig mission() const;
  CameraModel camera() const;

  /// Canonical `key = value` text; parsing it back yields an equal config.
  std::string to_text() const;
  std::vector<std::pair<std::string, std::string>> entries() const;

  static const std::vector<std::string>& keys();
};

inline constexpr const char* kConfigEnvVar = "ROCKFRAG_CONFIG";

Config parse_config(const std::string& text, Config base = {}, const std::string& source = "config");
Config load_config(const std::filesystem::path& path, Config base = {});

/// Path named by ROCKFRAG_CONFIG, if set and non-empty.
std::optional<std::filesystem::path> config_path_from_env();

}  // namespace rockfrag
