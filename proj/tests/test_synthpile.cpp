#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "rockfrag/error.hpp"
#include "rockfrag/synthpile.hpp"
#include "support.hpp"

using namespace rockfrag;
using rockfrag::testing::DeskScene;

namespace {

const SwebrecParams kTruth{27.53, 17.84, 2.79};

/// Largest gap between the d^3-weighted empirical passing curve of the
/// placed discs and the truth curve, checked at every placed size.
double mass_sup_norm(const PileLayout& layout) {
  std::vector<std::pair<double, double>> dv;
  double total = 0.0;
  for (const auto& d : layout.discs) {
    const double v = d.diameter_mm * d.diameter_mm * d.diameter_mm;
    dv.push_back({d.diameter_mm, v});
    total += v;
  }
  std::sort(dv.begin(), dv.end());
  double cum = 0.0, worst = 0.0;
  for (const auto& [d, v] : dv) {
    const double truth = swebrec::evaluate(kTruth, d);
    worst = std::max(worst, std::abs(cum / total - truth));  // just below d
    cum += v;
    worst = std::max(worst, std::abs(cum / total - truth));
  }
  return worst;
}

double mass_median(const PileLayout& layout) {
  std::vector<std::pair<double, double>> dv;
  double total = 0.0;
  for (const auto& d : layout.discs) {
    const double v = std::pow(d.diameter_mm, 3);
    dv.push_back({d.diameter_mm, v});
    total += v;
  }
  std::sort(dv.begin(), dv.end());
  double cum = 0.0;
  for (const auto& [d, v] : dv) {
    cum += v;
    if (cum >= 0.5 * total) return d;
  }
  return dv.back().first;
}

double sample_sup_norm(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(n);
  for (auto& x : s) {
    double v = u(rng);
    while (v <= 0.0) v = u(rng);
    x = swebrec::sample_size(kTruth, v);
  }
  std::sort(s.begin(), s.end());
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = swebrec::evaluate(kTruth, s[i]);
    worst = std::max({worst, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
  }
  return worst;
}

int rendered_width(const GrayImage& img, int row) {
  int n = 0;
  for (int x = 0; x < img.width(); ++x)
    if (img.at(x, row) > 100) ++n;
  return n;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  const PileSpec spec{kTruth, {0.3, 0.3}, 0.4, 77};
  const auto a = generate_pile(spec);
  const auto b = generate_pile(spec);
  REQUIRE(a.discs.size() == b.discs.size());
  for (std::size_t i = 0; i < a.discs.size(); ++i) {
    CHECK(a.discs[i].x_m == b.discs[i].x_m);
    CHECK(a.discs[i].diameter_mm == b.discs[i].diameter_mm);
    CHECK(a.discs[i].shade == b.discs[i].shade);
  }
  auto other = spec;
  other.seed = 78;
  CHECK(generate_pile(other).discs.size() != 0);
}

TEST_CASE("placed population follows the truth curve") {
  const auto layout = generate_pile(PileSpec{kTruth, {0.5, 0.5}, 0.5, 3});
  REQUIRE(layout.discs.size() >= 5000);
  CHECK(mass_sup_norm(layout) <= 0.02);
  CHECK(mass_median(layout) == doctest::Approx(17.84).epsilon(0.03));
  CHECK(layout.achieved_packing >= 0.95 * layout.target_packing);
}

TEST_CASE("placed discs are disjoint and inside the footprint") {
  const auto layout = generate_pile(PileSpec{kTruth, {0.25, 0.2}, 0.5, 5});
  std::vector<const Disc*> big;
  for (const auto& d : layout.discs) {
    const double r = d.diameter_mm / 2000.0;
    CHECK(d.x_m - r >= -1e-12);
    CHECK(d.y_m - r >= -1e-12);
    CHECK(d.x_m + r <= layout.footprint.width_m + 1e-12);
    CHECK(d.y_m + r <= layout.footprint.depth_m + 1e-12);
    if (d.diameter_mm > 3.0) big.push_back(&d);
  }
  for (std::size_t i = 0; i < big.size(); ++i)
    for (std::size_t j = i + 1; j < big.size(); ++j) {
      const double gap = std::hypot(big[i]->x_m - big[j]->x_m, big[i]->y_m - big[j]->y_m) * 1000.0 -
                         0.5 * (big[i]->diameter_mm + big[j]->diameter_mm);
      CHECK(gap >= -1e-9);
    }
}

TEST_CASE("unreachable packing is reported") {
  PileSpec spec{kTruth, {0.1, 0.1}, 0.7, 1};
  spec.placement_attempts = 2;
  try {
    generate_pile(spec);
    FAIL("expected PileGenerationError");
  } catch (const PileGenerationError& e) {
    CHECK(e.achieved_packing < 0.95 * 0.7);
    CHECK(e.achieved_packing > 0.0);
  }
  CHECK_THROWS_AS(generate_pile(PileSpec{kTruth, {0.1, 0.1}, 0.8, 1}), InputError);
  CHECK_THROWS_AS(generate_pile(PileSpec{kTruth, {0.0, 0.1}, 0.5, 1}), InputError);
}

TEST_CASE("inverse-CDF sampling converges") {
  const double coarse = sample_sup_norm(1000, 1);
  const double fine = sample_sup_norm(100000, 2);
  CHECK(fine < coarse);
  CHECK(fine <= 0.01);
}

TEST_CASE("flight plan geometry") {
  const CameraModel square{60.0, 1000, 1000};
  CHECK(square.footprint_width_m(2.0) == doctest::Approx(2.309).epsilon(1e-3));
  const auto plan = plan_flight({2.0, 2.0}, square, 0.5, {2.0, 4.0});
  std::vector<Waypoint> low;
  for (const auto& w : plan.waypoints)
    if (w.altitude_m == 2.0) low.push_back(w);
  CHECK(low.size() == 9);
  CHECK(std::abs(low[1].x_m - low[0].x_m) == doctest::Approx(1.1547).epsilon(1e-4));

  const auto zero = plan_flight({5.0, 5.0}, square, 0.0, {2.0, 3.0});
  CHECK(std::abs(zero.waypoints[1].x_m - zero.waypoints[0].x_m) == doctest::Approx(square.footprint_width_m(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(plan_flight({2.0, 2.0}, square, 0.5, {2.0}), InputError);
  CHECK_THROWS_AS(plan_flight({2.0, 2.0}, square, 1.0, {2.0, 3.0}), InputError);
  CHECK_THROWS_AS(plan_flight({1000.0, 1000.0}, square, 0.9, {0.1, 0.2}), InputError);
}

TEST_CASE("same-altitude neighbours respect the overlap") {
  const CameraModel cam{60.0, 1280, 960};
  const auto plan = plan_flight({3.0, 2.0}, cam, 0.5, {1.0, 2.0});
  for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
    const auto& a = plan.waypoints[i - 1];
    const auto& b = plan.waypoints[i];
    if (a.altitude_m != b.altitude_m) continue;
    CHECK(std::abs(b.x_m - a.x_m) <= cam.footprint_width_m(a.altitude_m) * 0.5 + 1e-12);
    CHECK(std::abs(b.y_m - a.y_m) <= cam.footprint_height_m(a.altitude_m) * 0.5 + 1e-12);
  }
}

TEST_CASE("half overlap covers the pile twice per altitude") {
  const CameraModel cam{60.0, 1280, 960};
  const Footprint pile{1.7, 1.3};
  const auto plan = plan_flight(pile, cam, 0.5, {0.8, 1.6});
  for (double alt : plan.altitudes) {
    const double hw = cam.footprint_width_m(alt) / 2.0, hh = cam.footprint_height_m(alt) / 2.0;
    int worst = 1 << 30;
    for (double x = 0.0; x <= pile.width_m + 1e-9; x += 0.01)
      for (double y = 0.0; y <= pile.depth_m + 1e-9; y += 0.01) {
        int n = 0;
        for (const auto& w : plan.waypoints)
          n += w.altitude_m == alt && std::abs(x - w.x_m) <= hw + 1e-12 && std::abs(y - w.y_m) <= hh + 1e-12;
        worst = std::min(worst, n);
      }
    CHECK(worst >= 2);
  }
}

TEST_CASE("manual plan is one row along the near edge") {
  const CameraModel cam{60.0, 1280, 960};
  const auto plan = plan_manual({2.0, 1.0}, cam, 0.5, 1.0);
  REQUIRE(plan.waypoints.size() >= 2);
  for (const auto& w : plan.waypoints) CHECK(w.y_m == 0.0);
}

TEST_CASE("rendered disc size follows the projection") {
  DeskScene scene(200, 200, 0.5);
  scene.add_disc(100, 100, 40);  // 40 mm disc
  const auto img = scene.render();
  CHECK(std::abs(rendered_width(img, 100) - 80) <= 1);

  for (double r : {8.0, 12.0, 20.0, 35.0}) {
    DeskScene s(160, 160, 0.7);
    s.add_disc(80.3, 79.6, r);
    const auto im = s.render();
    int n = 0;
    for (auto v : im.pixels()) n += v > 100;
    const double area_mm2 = n * 0.7 * 0.7;
    const double d_mm = 2.0 * r * 0.7;
    CHECK(area_mm2 == doctest::Approx(std::numbers::pi * d_mm * d_mm / 4.0).epsilon(0.05));
  }
}

TEST_CASE("higher frames shrink discs by the altitude ratio") {
  PileLayout layout;
  layout.footprint = {1.0, 1.0};
  layout.discs = {{0.5, 0.5, 60.0, kRockShade}};
  layout.scale_object.x_m = -5.0;
  const CameraModel cam{60.0, 800, 600};
  const auto lo = render_frame(layout, cam, {0.5, 0.5, 0.5});
  const auto hi = render_frame(layout, cam, {0.5, 0.5, 1.0});
  const double w_lo = rendered_width(lo, 299), w_hi = rendered_width(hi, 299);
  CHECK(std::abs(w_hi - w_lo / 2.0) <= 1.0);
}

TEST_CASE("empty layout renders background and the scale bar") {
  PileLayout layout;
  layout.footprint = {0.5, 0.5};
  layout.scale_object = {0.25, 0.25, 60.0, 12.0};
  const CameraModel cam{60.0, 400, 300};
  const auto img = render_frame(layout, cam, {0.25, 0.25, 0.5});
  int bar = 0;
  for (auto v : img.pixels()) {
    CHECK((v == kBackgroundShade || v == kScaleObjectShade));
    bar += v == kScaleObjectShade;
  }
  const double mmpp = cam.mm_per_pixel(0.5);
  CHECK(bar == doctest::Approx(60.0 * 12.0 / (mmpp * mmpp)).epsilon(0.1));
  const auto len = scale_object_length_px(layout, cam, {0.25, 0.25, 0.5});
  REQUIRE(len.has_value());
  CHECK(*len == doctest::Approx(60.0 / mmpp).epsilon(1e-12));
  CHECK_THROWS_AS(render_frame(layout, cam, {50.0, 0.25, 0.5}), InputError);
}

TEST_CASE("rendering is determined by layout, camera and waypoint") {
  const auto layout = generate_pile(PileSpec{kTruth, {0.3, 0.2}, 0.5, 12});
  const CameraModel cam{60.0, 320, 240};
  CHECK(render_frame(layout, cam, {0.15, 0.1, 0.3}) == render_frame(layout, cam, {0.15, 0.1, 0.3}));
}

TEST_CASE("ground truth distribution") {
  PileLayout one;
  one.discs = {{0.1, 0.1, 10.0, kRockShade}};
  const auto step = ground_truth_distribution(one);
  for (const auto& p : step.points()) CHECK(p.passing == (p.size_mm >= 10.0 ? 1.0 : 0.0));

  const std::vector<MassItem> pair{{10.0, 1000.0}, {20.0, 8000.0}};
  const std::vector<double> grid{9.0, 10.0, 15.0, 20.0};
  const auto two = mass_passing_distribution(pair, grid);
  CHECK(two.points()[0].passing == 0.0);
  CHECK(two.points()[2].passing == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  CHECK(two.points()[3].passing == 1.0);
  CHECK_THROWS_AS(ground_truth_distribution(PileLayout{}), InputError);

  const auto big = generate_pile(PileSpec{kTruth, {0.5, 0.5}, 0.5, 4});
  const auto gt = ground_truth_distribution(big);
  for (const auto& p : gt.points())
    if (p.size_mm < kTruth.x_max) CHECK(std::abs(p.passing - swebrec::evaluate(kTruth, p.size_mm)) <= 0.02);
}

TEST_CASE("layout and plan serialization") {
  const auto layout = generate_pile(PileSpec{kTruth, {0.2, 0.2}, 0.4, 6});
  const auto back = layout_from_json(layout_to_json(layout));
  REQUIRE(back.discs.size() == layout.discs.size());
  for (std::size_t i = 0; i < layout.discs.size(); ++i) {
    CHECK(back.discs[i].x_m == layout.discs[i].x_m);
    CHECK(back.discs[i].diameter_mm == layout.discs[i].diameter_mm);
  }
  CHECK(back.footprint.width_m == layout.footprint.width_m);
  CHECK_THROWS_AS(layout_from_json("{"), InputError);

  const auto path = std::filesystem::temp_directory_path() / "rockfrag_plan_test.csv";
  const auto plan = plan_flight(layout.footprint, CameraModel{}, 0.5, {0.5, 1.0});
  write_plan_csv(path, plan);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x_m,y_m,alt_m");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == static_cast<int>(plan.waypoints.size()));
  std::filesystem::remove(path);
}
