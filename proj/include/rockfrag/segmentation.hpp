#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rockfrag/distribution.hpp"
#include "rockfrag/image.hpp"
#include "rockfrag/particles.hpp"

namespace rockfrag {

enum class CalibrationSource { ScaleObject, AltitudeModel };

struct ScaleCalibration {
  double mm_per_pixel = 0.0;
  CalibrationSource source = CalibrationSource::ScaleObject;
};

struct QualityScore {
  double sharpness = 0.0;
};

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Closed polygon in continuous pixel coordinates; pixel (i, j) covers
/// [i, i+1) x [j, j+1) and belongs to the polygon when its centre does.
using PixelPolygon = std::vector<PixelPoint>;

struct SegmentationParams {
  double sigma_px = 1.5;       // Gaussian pre-smoothing
  double marker_depth = 2.0;   // h-maxima depth on the distance transform, px
  double min_area_px = 20.0;   // smaller regions go to the unresolved area
  bool exclude_border = true;  // drop regions cut by the frame edge or the mask
  double min_contrast = 20.0;  // gray levels between class means; below = no rock

  void validate() const;
};

ScaleCalibration calibrate_scale(double object_length_px, double object_length_mm);

/// Pinhole nadir footprint: 2 h tan(fov / 2) across image_width pixels.
ScaleCalibration calibrate_from_altitude(double altitude_m, double fov_deg, int image_width_px);

/// Variance of the 4-neighbour Laplacian divided by the squared mean
/// intensity. Zero for uniform or all-black images.
QualityScore quality_score(const GrayImage& image);

struct DetectedScaleObject {
  PixelPolygon outline;  // axis-aligned bounding box
  double length_px = 0.0;
};

/// Largest connected blob at or above `min_level`, elongated at least 2:1
/// and not touching the frame edge. Its long side is the object length.
std::optional<DetectedScaleObject> find_scale_object(const GrayImage& image, int min_level = 220);

RegionMask mask_non_rock(const GrayImage& image, std::span<const PixelPolygon> exclusions);

/// Normalize, smooth, Otsu threshold, distance transform, h-maxima markers,
/// marker-controlled watershed, then area bookkeeping. Throws InputError if
/// the mask excludes everything or is not congruent with the image.
ParticleSet delineate(const GrayImage& image, const RegionMask& mask, const ScaleCalibration& calib,
                      const SegmentationParams& params = {});

/// Volume-weighted (d^3) passing curve on the default size grid.
SizeDistribution particles_to_distribution(const ParticleSet& particles, double fines_factor = 0.0);

namespace detail {

/// Euclidean distance from each foreground pixel to the nearest
/// non-foreground pixel of the image; zero on non-foreground.
std::vector<float> distance_transform(std::span<const std::uint8_t> foreground, int width,
                                      int height);

/// Otsu threshold bin over a 256-bin histogram: classes are <= k and > k.
int otsu_threshold(std::span<const double, 256> histogram);

}  // namespace detail
}  // namespace rockfrag
