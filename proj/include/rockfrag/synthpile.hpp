#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rockfrag/distribution.hpp"
#include "rockfrag/error.hpp"
#include "rockfrag/image.hpp"
#include "rockfrag/segmentation.hpp"
#include "rockfrag/swebrec.hpp"

namespace rockfrag {

struct Footprint {
  double width_m = 0.0;  // along x
  double depth_m = 0.0;  // along y
};

struct PileSpec {
  SwebrecParams truth;
  Footprint footprint;
  double packing_fraction = 0.5;
  std::uint64_t seed = 1;
  int mass_quanta = 200000;       // inverse-CDF draws used to shape the population
  int placement_attempts = 400;   // per particle

  void validate() const;
};

struct CameraModel {
  double fov_deg = 60.0;  // horizontal, across image_width
  int image_width = 1280;
  int image_height = 960;

  void validate() const;
  double footprint_width_m(double altitude_m) const;
  double footprint_height_m(double altitude_m) const;
  double mm_per_pixel(double altitude_m) const;
};

struct Waypoint {
  double x_m = 0.0;
  double y_m = 0.0;
  double altitude_m = 0.0;
};

struct FlightPlan {
  std::vector<Waypoint> waypoints;  // altitude-major
  std::vector<double> altitudes;
  double overlap = 0.5;
};

struct Disc {
  double x_m = 0.0;
  double y_m = 0.0;
  double diameter_mm = 0.0;
  std::uint8_t shade = 150;
};

/// A bar of known length lying on the floor, outside the rock footprint.
struct ScaleObject {
  double x_m = 0.0;  // centre
  double y_m = 0.0;
  double length_mm = 60.0;
  double width_mm = 12.0;
};

struct PileLayout {
  Footprint footprint;
  std::vector<Disc> discs;  // largest first, pairwise non-overlapping
  ScaleObject scale_object;
  double target_packing = 0.0;
  double achieved_packing = 0.0;
  std::size_t unplaced = 0;
};

class PileGenerationError : public AnalysisError {
 public:
  PileGenerationError(const std::string& what, double achieved)
      : AnalysisError(what), achieved_packing(achieved) {}
  double achieved_packing;
};

inline constexpr std::uint8_t kBackgroundShade = 60;
inline constexpr std::uint8_t kRingShade = 30;
inline constexpr std::uint8_t kRockShade = 150;
inline constexpr int kRockJitter = 15;
inline constexpr std::uint8_t kScaleObjectShade = 250;
inline constexpr int kMassBins = 26;

/// Mass quanta drawn by Swebrec inverse-CDF sampling, grouped into 26
/// logarithmic bins over (0.01 x_max, x_max) and converted to particles so
/// that number density follows mass density / d^3. Discs are placed
/// largest-first by rejection sampling. Deterministic for a given seed.
PileLayout generate_pile(const PileSpec& spec);

/// Two-level lawnmower survey; per altitude the spacing is the ground
/// footprint times (1 - overlap) along each image axis.
FlightPlan plan_flight(const Footprint& footprint, const CameraModel& camera, double overlap,
                       const std::vector<double>& altitudes);

/// Single row of shots along the near edge of the pile, standing in for the
/// fixed-camera base-of-pile procedure.
FlightPlan plan_manual(const Footprint& footprint, const CameraModel& camera, double overlap,
                       double altitude_m);

/// Orthographic nadir rendering.
GrayImage render_frame(const PileLayout& layout, const CameraModel& camera, const Waypoint& wp);

/// A disc as seen in one frame, in pixel coordinates.
struct DiscView {
  std::size_t index = 0;
  double cx_px = 0.0;
  double cy_px = 0.0;
  double radius_px = 0.0;
  bool fully_inside = false;
};

std::vector<DiscView> visible_discs(const PileLayout& layout, const CameraModel& camera,
                                    const Waypoint& wp);

/// Outline of the scale object in pixel coordinates when any of it is in view.
std::optional<PixelPolygon> scale_object_polygon(const PileLayout& layout, const CameraModel& camera,
                                                 const Waypoint& wp);

/// Pixel length of the scale object when it lies entirely in the frame.
std::optional<double> scale_object_length_px(const PileLayout& layout, const CameraModel& camera,
                                             const Waypoint& wp);

SizeDistribution ground_truth_distribution(const PileLayout& layout);

std::string layout_to_json(const PileLayout& layout);
PileLayout layout_from_json(const std::string& text);
void write_plan_csv(const std::filesystem::path& path, const FlightPlan& plan);

}  // namespace rockfrag
