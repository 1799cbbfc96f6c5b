#include "rockfrag/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rockfrag/error.hpp"

namespace rockfrag {

double equivalent_diameter_mm(double area_px, double mm_per_pixel) noexcept {
  return mm_per_pixel * 2.0 * std::sqrt(area_px / std::numbers::pi);
}

double ParticleSet::particle_area_px() const noexcept {
  double sum = 0.0;
  for (const auto& p : particles) sum += p.area_px;
  return sum;
}

double ParticleSet::min_resolvable_mm() const noexcept {
  return equivalent_diameter_mm(std::max(min_area_px, 1.0), mm_per_pixel);
}

std::vector<MassItem> mass_items(const ParticleSet& set, double fines_factor) {
  if (!(fines_factor >= 0.0 && fines_factor <= 1.0))
    throw InputError("fines factor must lie in [0, 1]");
  std::vector<MassItem> items;
  items.reserve(set.particles.size() + 1);
  double ratio_sum = 0.0;
  for (const auto& p : set.particles) {
    const double d = p.equivalent_diameter_mm;
    const double volume = d * d * d;
    items.push_back({d, volume});
    const double area_mm2 = p.area_px * set.mm_per_pixel * set.mm_per_pixel;
    ratio_sum += volume / area_mm2;
  }
  if (fines_factor > 0.0 && set.unresolved_area_px > 0.0 && !set.particles.empty()) {
    const double mean_ratio = ratio_sum / static_cast<double>(set.particles.size());
    const double area_mm2 = set.unresolved_area_px * set.mm_per_pixel * set.mm_per_pixel;
    items.push_back({set.min_resolvable_mm(), fines_factor * area_mm2 * mean_ratio});
  }
  return items;
}

SizeDistribution pool_distributions(std::span<const ParticleSet> frames, double fines_factor) {
  std::vector<MassItem> items;
  for (const auto& f : frames) {
    auto more = mass_items(f, fines_factor);
    items.insert(items.end(), more.begin(), more.end());
  }
  if (items.empty()) throw InputError("pool_distributions: every frame is empty");
  return mass_passing_distribution(items);
}

}  // namespace rockfrag
