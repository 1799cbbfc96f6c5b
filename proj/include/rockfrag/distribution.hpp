#pragma once

#include <optional>
#include <span>
#include <vector>

namespace rockfrag {

/// One tray of a sieve stack. The fines pan has no mesh size.
struct SieveRecord {
  std::optional<double> mesh_mm;
  double mass_kg = 0.0;

  bool is_fines() const noexcept { return !mesh_mm.has_value(); }
};

/// Ordered sieve records (ascending mesh) with at most one fines pan.
class SieveAnalysis {
 public:
  explicit SieveAnalysis(std::vector<SieveRecord> records);

  const std::vector<SieveRecord>& records() const noexcept { return records_; }
  double total_mass() const noexcept { return total_mass_; }

 private:
  std::vector<SieveRecord> records_;
  double total_mass_ = 0.0;
};

struct SizePoint {
  double size_mm = 0.0;
  double passing = 0.0;  // fraction in [0, 1]

  bool operator==(const SizePoint&) const = default;
};

/// Cumulative percent-passing curve. Sizes strictly increase, passing is a
/// non-decreasing fraction in [0, 1]. Between knots the curve is linear in
/// passing against log(size); outside the knots it is clamped.
class SizeDistribution {
 public:
  SizeDistribution() = default;
  explicit SizeDistribution(std::vector<SizePoint> points);

  std::span<const SizePoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  double min_size() const;
  double max_size() const;
  double min_passing() const;
  double max_passing() const;

  std::vector<double> sizes() const;
  std::vector<double> passing() const;

  bool operator==(const SizeDistribution&) const = default;

 private:
  std::vector<SizePoint> points_;
};

struct CharacteristicSizes {
  double p80 = 0.0;
  double p50 = 0.0;
  double p20 = 0.0;

  bool operator==(const CharacteristicSizes&) const = default;
};

/// A lump of material of a given size and volume (mass at constant density).
struct MassItem {
  double size_mm = 0.0;
  double volume = 0.0;
};

SizeDistribution sieve_to_distribution(const SieveAnalysis& analysis);

double percent_passing_at(const SizeDistribution& dist, double x_mm);

/// Inverse of percent_passing_at. Throws InputError when p is outside the
/// attained passing range.
double characteristic_size(const SizeDistribution& dist, double p);

CharacteristicSizes characteristic_sizes(const SizeDistribution& dist);

/// 100 * (est - ref) / ref per size, empty where ref passing is zero.
std::vector<std::optional<double>> percent_true_error(const SizeDistribution& estimated,
                                                      const SizeDistribution& reference,
                                                      std::span<const double> sizes_mm);

/// 100 * |manual - automated| / manual per size, empty where manual is zero.
std::vector<std::optional<double>> percent_difference(const SizeDistribution& manual,
                                                      const SizeDistribution& automated,
                                                      std::span<const double> sizes_mm);

/// Percent logarithmic error of a characteristic size. The result does not
/// depend on `log_base`; it is exposed so callers can check that.
double log_error_characteristic(double estimated_mm, double reference_mm, double log_base = 10.0);

double average_log_error(std::span<const double> per_frame_errors);

/// Mesh sizes of the reference sieve stack, always part of the default grid.
inline constexpr double kReferenceMeshesMm[] = {4.00, 9.53, 12.70, 19.05};

/// Powers of two spanning [min_mm, max_mm] plus the reference meshes.
std::vector<double> default_size_grid(double min_mm, double max_mm);

/// Volume-weighted passing at each grid size; an item of size d counts as
/// passing at every grid size >= d.
SizeDistribution mass_passing_distribution(std::span<const MassItem> items,
                                           std::span<const double> grid_mm);

/// Same, on default_size_grid over the items' size range.
SizeDistribution mass_passing_distribution(std::span<const MassItem> items);

}  // namespace rockfrag
