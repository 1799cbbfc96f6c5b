#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rockfrag/synthpile.hpp"

namespace rockfrag::testing {

/// A flat scene whose pixel grid maps onto millimetres at a chosen scale, so
/// discs can be placed directly in pixel coordinates.
struct DeskScene {
  PileLayout layout;
  CameraModel camera;
  Waypoint wp;
  double mm_per_px = 1.0;

  DeskScene(int width, int height, double mmpp) : mm_per_px(mmpp) {
    camera = CameraModel{60.0, width, height};
    const double t = std::tan(std::numbers::pi / 6.0);
    const double alt = mmpp * width / (1000.0 * 2.0 * t);
    const double fw = camera.footprint_width_m(alt), fh = camera.footprint_height_m(alt);
    wp = {fw / 2.0, fh / 2.0, alt};
    layout.footprint = {fw, fh};
    layout.scale_object.x_m = -fw;  // out of view unless moved
  }

  void add_disc(double cx_px, double cy_px, double r_px, std::uint8_t shade = kRockShade) {
    const double x_mm = (cx_px + 0.5) * mm_per_px;
    const double y_mm = layout.footprint.depth_m * 1000.0 - (cy_px + 0.5) * mm_per_px;
    layout.discs.push_back({x_mm / 1000.0, y_mm / 1000.0, 2.0 * r_px * mm_per_px, shade});
  }

  GrayImage render() const { return render_frame(layout, camera, wp); }
};

struct SparseDisc {
  double cx, cy, r;
};

/// Non-touching discs of radius in [r_min, r_max] px, edges at least `gap`
/// px apart and clear of the frame border.
inline std::vector<SparseDisc> sparse_discs(std::mt19937_64& rng, int width, int height, int count,
                                            double r_min, double r_max, double gap = 8.0) {
  std::uniform_real_distribution<double> ur(r_min, r_max), ux(0.0, 1.0);
  std::vector<SparseDisc> out;
  for (int attempt = 0; attempt < 20000 && static_cast<int>(out.size()) < count; ++attempt) {
    const double r = ur(rng);
    const double m = r + gap;
    const double cx = m + ux(rng) * (width - 2 * m), cy = m + ux(rng) * (height - 2 * m);
    bool ok = true;
    for (const auto& d : out)
      if (std::hypot(d.cx - cx, d.cy - cy) < d.r + r + gap) {
        ok = false;
        break;
      }
    if (ok) out.push_back({cx, cy, r});
  }
  return out;
}

}  // namespace rockfrag::testing
