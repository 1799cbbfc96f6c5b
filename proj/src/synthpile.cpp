#include "rockfrag/synthpile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>

namespace rockfrag {

void PileSpec::validate() const {
  truth.validate();
  if (!(footprint.width_m > 0.0 && footprint.depth_m > 0.0))
    throw InputError("pile spec: footprint must be positive");
  if (!(packing_fraction > 0.0 && packing_fraction <= 0.7))
    throw InputError("pile spec: packing fraction must lie in (0, 0.7]");
  if (mass_quanta < 1000) throw InputError("pile spec: mass_quanta must be >= 1000");
  if (placement_attempts < 1) throw InputError("pile spec: placement_attempts must be >= 1");
}

void CameraModel::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw InputError("camera: fov must lie in (0, 180)");
  if (image_width <= 0 || image_height <= 0) throw InputError("camera: image size must be positive");
}

double CameraModel::footprint_width_m(double altitude_m) const {
  return 2.0 * altitude_m * std::tan(fov_deg * std::numbers::pi / 360.0);
}

double CameraModel::footprint_height_m(double altitude_m) const {
  return footprint_width_m(altitude_m) * image_height / image_width;
}

double CameraModel::mm_per_pixel(double altitude_m) const {
  return 1000.0 * footprint_width_m(altitude_m) / image_width;
}

namespace {

double uniform_open(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double v = u(rng);
    if (v > 0.0) return v;
  }
}

std::vector<double> particle_diameters(const PileSpec& spec, std::mt19937_64& rng) {
  const double d_min = 0.01 * spec.truth.x_max;
  const double log_span = std::log(spec.truth.x_max / d_min);
  std::array<std::vector<double>, kMassBins> bins;
  double area_per_volume = 0.0;
  std::size_t kept = 0;
  for (int i = 0; i < spec.mass_quanta; ++i) {
    const double d = swebrec::sample_size(spec.truth, uniform_open(rng));
    if (d < d_min) continue;
    const int b = std::min(kMassBins - 1, static_cast<int>(kMassBins * std::log(d / d_min) / log_span));
    bins[b].push_back(d);
    area_per_volume += std::numbers::pi / (4.0 * d);
    ++kept;
  }
  if (kept == 0) throw InputError("pile spec: no material above 0.01 x_max");
  area_per_volume /= static_cast<double>(kept);

  const double target_area_mm2 =
      spec.packing_fraction * spec.footprint.width_m * spec.footprint.depth_m * 1e6;
  const double total_volume = target_area_mm2 / area_per_volume;

  // Walk the quanta in size order, merging each run whose summed volume
  // reaches one particle of the current size; the leftover carries over, so
  // the placed curve never lags the quanta by more than one particle.
  const double quantum = total_volume / static_cast<double>(kept);
  std::vector<double> diameters;
  double pending = 0.0;
  for (auto& bin : bins) {
    std::sort(bin.begin(), bin.end());
    for (double d : bin) {
      pending += quantum;
      const double v = d * d * d;
      while (pending >= v) {
        diameters.push_back(d);
        pending -= v;
      }
    }
  }
  if (!bins.back().empty() && uniform_open(rng) < pending / std::pow(bins.back().back(), 3))
    diameters.push_back(bins.back().back());
  std::sort(diameters.begin(), diameters.end(), std::greater<>());
  return diameters;
}

// Uniform bucket grid; each disc is registered in every cell its bounding
// box touches, so overlapping discs always share a cell.
class DiscIndex {
 public:
  DiscIndex(double width_mm, double depth_mm, double cell_mm)
      : cell_(cell_mm),
        nx_(std::max(1, static_cast<int>(std::ceil(width_mm / cell_mm)))),
        ny_(std::max(1, static_cast<int>(std::ceil(depth_mm / cell_mm)))),
        cells_(static_cast<std::size_t>(nx_) * ny_) {}

  bool fits(double x, double y, double r, const std::vector<Disc>& discs) const {
    const auto box = cells_for(x, y, r);
    for (int cy = box.y0; cy <= box.y1; ++cy) {
      for (int cx = box.x0; cx <= box.x1; ++cx) {
        for (int i : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) {
          const auto& d = discs[i];
          const double dx = d.x_m * 1000.0 - x, dy = d.y_m * 1000.0 - y;
          const double rr = r + 0.5 * d.diameter_mm;
          if (dx * dx + dy * dy < rr * rr) return false;
        }
      }
    }
    return true;
  }

  void insert(int index, double x, double y, double r) {
    const auto box = cells_for(x, y, r);
    for (int cy = box.y0; cy <= box.y1; ++cy)
      for (int cx = box.x0; cx <= box.x1; ++cx)
        cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(index);
  }

 private:
  struct CellBox {
    int x0, x1, y0, y1;
  };

  CellBox cells_for(double x, double y, double r) const {
    return {std::clamp(static_cast<int>((x - r) / cell_), 0, nx_ - 1),
            std::clamp(static_cast<int>((x + r) / cell_), 0, nx_ - 1),
            std::clamp(static_cast<int>((y - r) / cell_), 0, ny_ - 1),
            std::clamp(static_cast<int>((y + r) / cell_), 0, ny_ - 1)};
  }

  double cell_;
  int nx_, ny_;
  std::vector<std::vector<int>> cells_;
};

}  // namespace

PileLayout generate_pile(const PileSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto diameters = particle_diameters(spec, rng);

  PileLayout layout;
  layout.footprint = spec.footprint;
  layout.target_packing = spec.packing_fraction;
  layout.scale_object = {spec.footprint.width_m / 2.0, -0.04, 60.0, 12.0};

  const double w = spec.footprint.width_m * 1000.0;
  const double h = spec.footprint.depth_m * 1000.0;
  DiscIndex index(w, h, std::max(1.0, spec.truth.x_max / 6.0));
  std::uniform_int_distribution<int> jitter(-kRockJitter, kRockJitter);
  double placed_area = 0.0;
  for (double d : diameters) {
    const double r = 0.5 * d;
    if (2.0 * r >= std::min(w, h)) {
      ++layout.unplaced;
      continue;
    }
    std::uniform_real_distribution<double> ux(r, w - r), uy(r, h - r);
    bool placed = false;
    for (int attempt = 0; attempt < spec.placement_attempts && !placed; ++attempt) {
      const double x = ux(rng), y = uy(rng);
      if (!index.fits(x, y, r, layout.discs)) continue;
      index.insert(static_cast<int>(layout.discs.size()), x, y, r);
      layout.discs.push_back({x / 1000.0, y / 1000.0, d,
                              static_cast<std::uint8_t>(kRockShade + jitter(rng))});
      placed_area += std::numbers::pi * r * r;
      placed = true;
    }
    if (!placed) ++layout.unplaced;
  }
  layout.achieved_packing = placed_area / (w * h);
  if (layout.achieved_packing < 0.95 * spec.packing_fraction)
    throw PileGenerationError("pile generation: reached packing " +
                                  std::to_string(layout.achieved_packing) + " of target " +
                                  std::to_string(spec.packing_fraction),
                              layout.achieved_packing);
  return layout;
}

namespace {

int grid_count(double extent, double spacing) {
  return static_cast<int>(std::ceil(extent / spacing - 1e-9)) + 1;
}

void validate_plan_inputs(const Footprint& footprint, const CameraModel& camera, double overlap) {
  camera.validate();
  if (!(footprint.width_m > 0.0 && footprint.depth_m > 0.0))
    throw InputError("plan: footprint must be positive");
  if (!(overlap >= 0.0 && overlap <= 0.9)) throw InputError("plan: overlap must lie in [0, 0.9]");
}

constexpr std::size_t kMaxWaypoints = 10000;

}  // namespace

FlightPlan plan_flight(const Footprint& footprint, const CameraModel& camera, double overlap,
                       const std::vector<double>& altitudes) {
  validate_plan_inputs(footprint, camera, overlap);
  if (altitudes.size() != 2) throw InputError("plan: exactly two altitudes are required");
  FlightPlan plan;
  plan.overlap = overlap;
  plan.altitudes = altitudes;
  for (double alt : altitudes) {
    if (!(alt > 0.0)) throw InputError("plan: altitudes must be > 0");
    const double sx = camera.footprint_width_m(alt) * (1.0 - overlap);
    const double sy = camera.footprint_height_m(alt) * (1.0 - overlap);
    const int nx = grid_count(footprint.width_m, sx);
    const int ny = grid_count(footprint.depth_m, sy);
    if (static_cast<double>(nx) * ny + static_cast<double>(plan.waypoints.size()) > kMaxWaypoints)
      throw InputError("plan: more than 10000 waypoints required");
    const double x0 = footprint.width_m / 2.0 - 0.5 * (nx - 1) * sx;
    const double y0 = footprint.depth_m / 2.0 - 0.5 * (ny - 1) * sy;
    for (int j = 0; j < ny; ++j) {
      for (int k = 0; k < nx; ++k) {
        const int i = (j % 2 == 0) ? k : nx - 1 - k;  // serpentine rows
        plan.waypoints.push_back({x0 + i * sx, y0 + j * sy, alt});
      }
    }
  }
  return plan;
}

FlightPlan plan_manual(const Footprint& footprint, const CameraModel& camera, double overlap,
                       double altitude_m) {
  validate_plan_inputs(footprint, camera, overlap);
  if (!(altitude_m > 0.0)) throw InputError("plan: altitude must be > 0");
  FlightPlan plan;
  plan.overlap = overlap;
  plan.altitudes = {altitude_m};
  const double sx = camera.footprint_width_m(altitude_m) * (1.0 - overlap);
  const int nx = grid_count(footprint.width_m, sx);
  if (static_cast<std::size_t>(nx) > kMaxWaypoints)
    throw InputError("plan: more than 10000 waypoints required");
  const double x0 = footprint.width_m / 2.0 - 0.5 * (nx - 1) * sx;
  for (int i = 0; i < nx; ++i) plan.waypoints.push_back({x0 + i * sx, 0.0, altitude_m});
  return plan;
}

namespace {

struct FrameGeometry {
  double left_mm, top_mm, mm_per_px;
  int width, height;

  double to_px_x(double x_mm) const { return (x_mm - left_mm) / mm_per_px - 0.5; }
  double to_px_y(double y_mm) const { return (top_mm - y_mm) / mm_per_px - 0.5; }
};

FrameGeometry frame_geometry(const PileLayout& layout, const CameraModel& camera, const Waypoint& wp) {
  camera.validate();
  if (!(wp.altitude_m > 0.0)) throw InputError("render: altitude must be > 0");
  const double fw = camera.footprint_width_m(wp.altitude_m);
  const double fh = camera.footprint_height_m(wp.altitude_m);
  if (wp.x_m < -fw || wp.x_m > layout.footprint.width_m + fw || wp.y_m < -fh ||
      wp.y_m > layout.footprint.depth_m + fh)
    throw InputError("render: waypoint is more than one camera footprint away from the pile");
  return {(wp.x_m - fw / 2.0) * 1000.0, (wp.y_m + fh / 2.0) * 1000.0,
          camera.mm_per_pixel(wp.altitude_m), camera.image_width, camera.image_height};
}

template <class F>
void for_each_pixel_in_disc(const FrameGeometry& g, double cx, double cy, double r, F&& f) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(cx - r)));
  const int x1 = std::min(g.width - 1, static_cast<int>(std::floor(cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(cy - r)));
  const int y1 = std::min(g.height - 1, static_cast<int>(std::floor(cy + r)));
  const double r2 = r * r;
  for (int y = y0; y <= y1; ++y) {
    const double dy = y - cy;
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      if (dx * dx + dy * dy <= r2) f(x, y);
    }
  }
}

constexpr double kRingPx = 2.0;

}  // namespace

std::vector<DiscView> visible_discs(const PileLayout& layout, const CameraModel& camera,
                                    const Waypoint& wp) {
  const auto g = frame_geometry(layout, camera, wp);
  std::vector<DiscView> out;
  for (std::size_t i = 0; i < layout.discs.size(); ++i) {
    const auto& d = layout.discs[i];
    const double cx = g.to_px_x(d.x_m * 1000.0);
    const double cy = g.to_px_y(d.y_m * 1000.0);
    const double r = 0.5 * d.diameter_mm / g.mm_per_px;
    if (cx + r < -0.5 || cy + r < -0.5 || cx - r > g.width - 0.5 || cy - r > g.height - 0.5)
      continue;
    const bool inside = cx - r > 0.5 && cy - r > 0.5 && cx + r < g.width - 1.5 && cy + r < g.height - 1.5;
    out.push_back({i, cx, cy, r, inside});
  }
  return out;
}

std::optional<PixelPolygon> scale_object_polygon(const PileLayout& layout, const CameraModel& camera,
                                                 const Waypoint& wp) {
  const auto g = frame_geometry(layout, camera, wp);
  const auto& s = layout.scale_object;
  const double hx = 0.5 * s.length_mm, hy = 0.5 * s.width_mm;
  const double x0 = (s.x_m * 1000.0 - hx - g.left_mm) / g.mm_per_px;
  const double x1 = (s.x_m * 1000.0 + hx - g.left_mm) / g.mm_per_px;
  const double y0 = (g.top_mm - (s.y_m * 1000.0 + hy)) / g.mm_per_px;
  const double y1 = (g.top_mm - (s.y_m * 1000.0 - hy)) / g.mm_per_px;
  if (x1 <= 0.0 || y1 <= 0.0 || x0 >= g.width || y0 >= g.height) return std::nullopt;
  return PixelPolygon{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

std::optional<double> scale_object_length_px(const PileLayout& layout, const CameraModel& camera,
                                             const Waypoint& wp) {
  const auto poly = scale_object_polygon(layout, camera, wp);
  if (!poly) return std::nullopt;
  const auto& p = *poly;
  if (p[0].x < 0.0 || p[0].y < 0.0 || p[2].x > camera.image_width || p[2].y > camera.image_height)
    return std::nullopt;
  return p[1].x - p[0].x;
}

GrayImage render_frame(const PileLayout& layout, const CameraModel& camera, const Waypoint& wp) {
  const auto g = frame_geometry(layout, camera, wp);
  GrayImage img(g.width, g.height, kBackgroundShade);
  const auto views = visible_discs(layout, camera, wp);
  // Rings darken only the narrow gaps shared by two or more discs; a lone
  // edge still borders plain background.
  std::vector<std::uint8_t> ring_hits(static_cast<std::size_t>(g.width) * g.height, 0);
  for (const auto& v : views) {
    if (v.radius_px < 1.5) continue;
    for_each_pixel_in_disc(g, v.cx_px, v.cy_px, v.radius_px + kRingPx, [&](int x, int y) {
      auto& hits = ring_hits[static_cast<std::size_t>(y) * g.width + x];
      if (hits < 2 && ++hits == 2) img.at(x, y) = kRingShade;
    });
  }
  for (const auto& v : views) {
    const auto shade = layout.discs[v.index].shade;
    for_each_pixel_in_disc(g, v.cx_px, v.cy_px, v.radius_px, [&](int x, int y) { img.at(x, y) = shade; });
  }
  if (const auto poly = scale_object_polygon(layout, camera, wp)) {
    const auto& p = *poly;
    const int x0 = std::max(0, static_cast<int>(std::ceil(p[0].x - 0.5)));
    const int x1 = std::min(g.width, static_cast<int>(std::ceil(p[1].x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(p[0].y - 0.5)));
    const int y1 = std::min(g.height, static_cast<int>(std::ceil(p[2].y - 0.5)));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) img.at(x, y) = kScaleObjectShade;
  }
  return img;
}

SizeDistribution ground_truth_distribution(const PileLayout& layout) {
  if (layout.discs.empty()) throw InputError("ground truth: layout has no particles");
  std::vector<MassItem> items;
  items.reserve(layout.discs.size());
  for (const auto& d : layout.discs)
    items.push_back({d.diameter_mm, d.diameter_mm * d.diameter_mm * d.diameter_mm});
  return mass_passing_distribution(items);
}

std::string layout_to_json(const PileLayout& layout) {
  nlohmann::ordered_json j;
  j["footprint"] = {{"width_m", layout.footprint.width_m}, {"depth_m", layout.footprint.depth_m}};
  j["target_packing"] = layout.target_packing;
  j["achieved_packing"] = layout.achieved_packing;
  j["unplaced"] = layout.unplaced;
  const auto& s = layout.scale_object;
  j["scale_object"] = {{"x_m", s.x_m}, {"y_m", s.y_m}, {"length_mm", s.length_mm},
                       {"width_mm", s.width_mm}};
  auto discs = nlohmann::ordered_json::array();
  for (const auto& d : layout.discs)
    discs.push_back({{"x_m", d.x_m}, {"y_m", d.y_m}, {"diameter_mm", d.diameter_mm}, {"shade", d.shade}});
  j["discs"] = std::move(discs);
  return j.dump();
}

PileLayout layout_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PileLayout layout;
    layout.footprint = {j.at("footprint").at("width_m").get<double>(),
                        j.at("footprint").at("depth_m").get<double>()};
    layout.target_packing = j.value("target_packing", 0.0);
    layout.achieved_packing = j.value("achieved_packing", 0.0);
    layout.unplaced = j.value("unplaced", std::size_t{0});
    const auto& s = j.at("scale_object");
    layout.scale_object = {s.at("x_m").get<double>(), s.at("y_m").get<double>(),
                           s.at("length_mm").get<double>(), s.at("width_mm").get<double>()};
    for (const auto& d : j.at("discs"))
      layout.discs.push_back({d.at("x_m").get<double>(), d.at("y_m").get<double>(),
                              d.at("diameter_mm").get<double>(), d.value("shade", kRockShade)});
    return layout;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("layout json: ") + e.what());
  }
}

void write_plan_csv(const std::filesystem::path& path, const FlightPlan& plan) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write plan " + path.string());
  out << "x_m,y_m,alt_m\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& w : plan.waypoints) out << w.x_m << ',' << w.y_m << ',' << w.altitude_m << '\n';
}

}  // namespace rockfrag
