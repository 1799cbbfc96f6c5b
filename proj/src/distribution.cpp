#include "rockfrag/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rockfrag/error.hpp"

namespace rockfrag {

SieveAnalysis::SieveAnalysis(std::vector<SieveRecord> records) : records_(std::move(records)) {
  if (records_.empty()) throw InputError("sieve analysis: no records");
  int fines = 0;
  std::optional<double> last_mesh;
  for (const auto& r : records_) {
    if (!std::isfinite(r.mass_kg) || r.mass_kg < 0.0)
      throw InputError("sieve analysis: mass must be a finite value >= 0");
    if (r.is_fines()) {
      if (++fines > 1) throw InputError("sieve analysis: more than one fines pan");
      continue;
    }
    if (!std::isfinite(*r.mesh_mm) || *r.mesh_mm <= 0.0)
      throw InputError("sieve analysis: mesh size must be > 0");
    if (last_mesh && *r.mesh_mm <= *last_mesh)
      throw InputError("sieve analysis: mesh sizes must be strictly increasing");
    last_mesh = r.mesh_mm;
  }
  if (!last_mesh) throw InputError("sieve analysis: no sized records");
  total_mass_ = 0.0;
  for (const auto& r : records_) total_mass_ += r.mass_kg;
  if (total_mass_ <= 0.0) throw InputError("sieve analysis: total mass is zero");
}

SizeDistribution::SizeDistribution(std::vector<SizePoint> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.size_mm) || p.size_mm <= 0.0)
      throw InputError("size distribution: sizes must be > 0");
    if (!std::isfinite(p.passing) || p.passing < 0.0 || p.passing > 1.0)
      throw InputError("size distribution: passing must lie in [0, 1]");
    if (i > 0) {
      if (p.size_mm <= points_[i - 1].size_mm)
        throw InputError("size distribution: sizes must be strictly increasing");
      if (p.passing < points_[i - 1].passing)
        throw InputError("size distribution: passing must be non-decreasing");
    }
  }
}

namespace {
void require_nonempty(const SizeDistribution& d) {
  if (d.empty()) throw InputError("size distribution is empty");
}
}  // namespace

double SizeDistribution::min_size() const {
  require_nonempty(*this);
  return points_.front().size_mm;
}
double SizeDistribution::max_size() const {
  require_nonempty(*this);
  return points_.back().size_mm;
}
double SizeDistribution::min_passing() const {
  require_nonempty(*this);
  return points_.front().passing;
}
double SizeDistribution::max_passing() const {
  require_nonempty(*this);
  return points_.back().passing;
}

std::vector<double> SizeDistribution::sizes() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.size_mm);
  return out;
}

std::vector<double> SizeDistribution::passing() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.passing);
  return out;
}

SizeDistribution sieve_to_distribution(const SieveAnalysis& analysis) {
  // Passing at mesh M is the mass strictly finer than M: the pan plus every
  // tray below M. Mass retained on M itself is coarser than M.
  std::vector<SizePoint> points;
  double finer = 0.0;
  for (const auto& r : analysis.records())
    if (r.is_fines()) finer += r.mass_kg;
  for (const auto& r : analysis.records()) {
    if (r.is_fines()) continue;
    points.push_back({*r.mesh_mm, std::min(1.0, finer / analysis.total_mass())});
    finer += r.mass_kg;
  }
  return SizeDistribution(std::move(points));
}

double percent_passing_at(const SizeDistribution& dist, double x_mm) {
  require_nonempty(dist);
  if (!(x_mm > 0.0)) throw InputError("percent_passing_at: size must be > 0");
  const auto pts = dist.points();
  if (x_mm <= pts.front().size_mm) return pts.front().passing;
  if (x_mm >= pts.back().size_mm) return pts.back().passing;
  auto hi = std::lower_bound(pts.begin(), pts.end(), x_mm,
                             [](const SizePoint& p, double x) { return p.size_mm < x; });
  if (hi->size_mm == x_mm) return hi->passing;
  auto lo = hi - 1;
  const double t = std::log(x_mm / lo->size_mm) / std::log(hi->size_mm / lo->size_mm);
  return lo->passing + t * (hi->passing - lo->passing);
}

double characteristic_size(const SizeDistribution& dist, double p) {
  require_nonempty(dist);
  const auto pts = dist.points();
  if (!(p >= pts.front().passing && p <= pts.back().passing))
    throw InputError("characteristic_size: passing " + std::to_string(p) +
                     " is outside the attained range");
  auto hi = std::lower_bound(pts.begin(), pts.end(), p,
                             [](const SizePoint& pt, double v) { return pt.passing < v; });
  if (hi->passing == p || hi == pts.begin()) return hi->size_mm;
  auto lo = hi - 1;
  const double t = (p - lo->passing) / (hi->passing - lo->passing);
  return lo->size_mm * std::pow(hi->size_mm / lo->size_mm, t);
}

CharacteristicSizes characteristic_sizes(const SizeDistribution& dist) {
  return {characteristic_size(dist, 0.8), characteristic_size(dist, 0.5),
          characteristic_size(dist, 0.2)};
}

std::vector<std::optional<double>> percent_true_error(const SizeDistribution& estimated,
                                                      const SizeDistribution& reference,
                                                      std::span<const double> sizes_mm) {
  std::vector<std::optional<double>> out;
  out.reserve(sizes_mm.size());
  for (double x : sizes_mm) {
    const double ref = percent_passing_at(reference, x);
    const double est = percent_passing_at(estimated, x);
    if (ref == 0.0)
      out.emplace_back();
    else
      out.emplace_back(100.0 * (est - ref) / ref);
  }
  return out;
}

std::vector<std::optional<double>> percent_difference(const SizeDistribution& manual,
                                                      const SizeDistribution& automated,
                                                      std::span<const double> sizes_mm) {
  std::vector<std::optional<double>> out;
  out.reserve(sizes_mm.size());
  for (double x : sizes_mm) {
    const double m = percent_passing_at(manual, x);
    const double a = percent_passing_at(automated, x);
    if (m == 0.0)
      out.emplace_back();
    else
      out.emplace_back(100.0 * std::abs(m - a) / m);
  }
  return out;
}

double log_error_characteristic(double estimated_mm, double reference_mm, double log_base) {
  if (!(estimated_mm > 0.0) || !(reference_mm > 0.0))
    throw InputError("log error: sizes must be > 0");
  if (reference_mm == 1.0) throw InputError("log error: reference size of 1 mm has zero logarithm");
  if (!(log_base > 0.0) || log_base == 1.0) throw InputError("log error: invalid logarithm base");
  const double lb = std::log(log_base);
  const double le = std::log(estimated_mm) / lb;
  const double lr = std::log(reference_mm) / lb;
  return 100.0 * (le - lr) / lr;
}

double average_log_error(std::span<const double> per_frame_errors) {
  if (per_frame_errors.empty()) throw InputError("average log error: no frames");
  return std::accumulate(per_frame_errors.begin(), per_frame_errors.end(), 0.0) /
         static_cast<double>(per_frame_errors.size());
}

std::vector<double> default_size_grid(double min_mm, double max_mm) {
  if (!(min_mm > 0.0) || !(max_mm >= min_mm)) throw InputError("size grid: invalid range");
  const int k_lo = static_cast<int>(std::floor(std::log2(min_mm)));
  const int k_hi = static_cast<int>(std::ceil(std::log2(max_mm)));
  std::vector<double> grid;
  for (int k = k_lo; k <= k_hi; ++k) grid.push_back(std::ldexp(1.0, k));
  grid.insert(grid.end(), std::begin(kReferenceMeshesMm), std::end(kReferenceMeshesMm));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SizeDistribution mass_passing_distribution(std::span<const MassItem> items,
                                           std::span<const double> grid_mm) {
  if (items.empty()) throw InputError("mass distribution: no material");
  std::vector<MassItem> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const MassItem& a, const MassItem& b) { return a.size_mm < b.size_mm; });
  double total = 0.0;
  for (const auto& it : sorted) total += it.volume;
  if (!(total > 0.0)) throw InputError("mass distribution: zero total volume");

  std::vector<SizePoint> points;
  points.reserve(grid_mm.size());
  std::size_t i = 0;
  double below = 0.0;
  for (double g : grid_mm) {
    while (i < sorted.size() && sorted[i].size_mm <= g) below += sorted[i++].volume;
    points.push_back({g, i == sorted.size() ? 1.0 : std::min(1.0, below / total)});
  }
  return SizeDistribution(std::move(points));
}

SizeDistribution mass_passing_distribution(std::span<const MassItem> items) {
  if (items.empty()) throw InputError("mass distribution: no material");
  auto [lo, hi] = std::minmax_element(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.size_mm < b.size_mm;
  });
  const auto grid = default_size_grid(lo->size_mm, hi->size_mm);
  return mass_passing_distribution(items, grid);
}

}  // namespace rockfrag
