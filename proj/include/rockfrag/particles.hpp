#pragma once

#include <span>
#include <vector>

#include "rockfrag/distribution.hpp"

namespace rockfrag {

struct Particle {
  double area_px = 0.0;
  double equivalent_diameter_mm = 0.0;
  double centroid_x_px = 0.0;
  double centroid_y_px = 0.0;
};

/// Delineated particles of one image plus the pixel accounting of the
/// masked-in region: particle areas + unresolved + truncated + background
/// always sum to the masked-in pixel count.
struct ParticleSet {
  std::vector<Particle> particles;
  double unresolved_area_px = 0.0;  // regions below the minimum area
  double truncated_area_px = 0.0;   // regions cut by the frame edge or the mask
  double background_area_px = 0.0;
  double masked_in_area_px = 0.0;
  double mm_per_pixel = 1.0;
  double min_area_px = 0.0;
  bool no_foreground = false;  // nothing separable from background was found

  bool empty() const noexcept { return particles.empty(); }
  double particle_area_px() const noexcept;

  /// Equivalent diameter of the smallest region kept as a particle.
  double min_resolvable_mm() const noexcept;
};

/// Equivalent-circle diameter in mm of a region of `area_px` pixels.
double equivalent_diameter_mm(double area_px, double mm_per_pixel) noexcept;

/// Mass items of one frame: each particle weighted by d^3, plus
/// fines_factor * unresolved area converted to volume with the frame's mean
/// volume-per-area ratio, placed at the smallest resolvable size.
std::vector<MassItem> mass_items(const ParticleSet& set, double fines_factor);

/// All frames' particles pooled into one population.
SizeDistribution pool_distributions(std::span<const ParticleSet> frames, double fines_factor = 0.0);

}  // namespace rockfrag
