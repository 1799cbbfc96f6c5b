#include "rockfrag/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include "rockfrag/error.hpp"

namespace rockfrag {

void SegmentationParams::validate() const {
  if (!(sigma_px >= 0.0)) throw InputError("segmentation: sigma must be >= 0");
  if (!(marker_depth >= 0.0)) throw InputError("segmentation: marker depth must be >= 0");
  if (!(min_area_px >= 1.0)) throw InputError("segmentation: min_area_px must be >= 1");
  if (!(min_contrast >= 0.0)) throw InputError("segmentation: min_contrast must be >= 0");
}

ScaleCalibration calibrate_scale(double object_length_px, double object_length_mm) {
  if (!(object_length_px > 0.0) || !(object_length_mm > 0.0))
    throw InputError("calibrate_scale: lengths must be > 0");
  return {object_length_mm / object_length_px, CalibrationSource::ScaleObject};
}

ScaleCalibration calibrate_from_altitude(double altitude_m, double fov_deg, int image_width_px) {
  if (!(altitude_m > 0.0)) throw InputError("calibrate_from_altitude: altitude must be > 0");
  if (!(fov_deg > 0.0 && fov_deg < 180.0))
    throw InputError("calibrate_from_altitude: fov must lie in (0, 180) degrees");
  if (image_width_px <= 0) throw InputError("calibrate_from_altitude: image width must be > 0");
  const double half = fov_deg * std::numbers::pi / 360.0;
  const double footprint_mm = 1000.0 * 2.0 * altitude_m * std::tan(half);
  return {footprint_mm / image_width_px, CalibrationSource::AltitudeModel};
}

QualityScore quality_score(const GrayImage& image) {
  const int w = image.width(), h = image.height();
  double sum = 0.0;
  for (auto p : image.pixels()) sum += p;
  const double mean = sum / static_cast<double>(image.pixels().size());
  if (mean == 0.0 || w < 3 || h < 3) return {0.0};

  double s1 = 0.0, s2 = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double lap = 4.0 * image.at(x, y) - image.at(x - 1, y) - image.at(x + 1, y) -
                         image.at(x, y - 1) - image.at(x, y + 1);
      s1 += lap;
      s2 += lap * lap;
    }
  }
  const double n = static_cast<double>(w - 2) * static_cast<double>(h - 2);
  const double var = std::max(0.0, s2 / n - (s1 / n) * (s1 / n));
  return {var / (mean * mean)};
}

std::optional<DetectedScaleObject> find_scale_object(const GrayImage& image, int min_level) {
  const int w = image.width(), h = image.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::optional<DetectedScaleObject> best;
  std::size_t best_count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      const auto i0 = static_cast<std::size_t>(y0) * w + x0;
      if (seen[i0] || image.at(x0, y0) < min_level) continue;
      int xmin = x0, xmax = x0, ymin = y0, ymax = y0;
      std::size_t count = 0;
      seen[i0] = 1;
      stack.assign(1, {x0, y0});
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        ++count;
        xmin = std::min(xmin, x), xmax = std::max(xmax, x);
        ymin = std::min(ymin, y), ymax = std::max(ymax, y);
        constexpr int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = x + dx[k], ny = y + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const auto j = static_cast<std::size_t>(ny) * w + nx;
          if (seen[j] || image.at(nx, ny) < min_level) continue;
          seen[j] = 1;
          stack.push_back({nx, ny});
        }
      }
      const double bw = xmax - xmin + 1, bh = ymax - ymin + 1;
      const bool on_edge = xmin == 0 || ymin == 0 || xmax == w - 1 || ymax == h - 1;
      if (on_edge || count < 20 || std::max(bw, bh) < 2.0 * std::min(bw, bh) || count <= best_count) continue;
      best_count = count;
      best = DetectedScaleObject{{{double(xmin), double(ymin)},
                                 {double(xmax + 1), double(ymin)},
                                 {double(xmax + 1), double(ymax + 1)},
                                 {double(xmin), double(ymax + 1)}},
                                std::max(bw, bh)};
    }
  return best;
}

RegionMask mask_non_rock(const GrayImage& image, std::span<const PixelPolygon> exclusions) {
  const int w = image.width(), h = image.height();
  RegionMask mask(w, h, true);
  std::vector<double> xs;
  for (const auto& poly : exclusions) {
    if (poly.size() < 3) continue;
    for (int y = 0; y < h; ++y) {
      const double yc = y + 0.5;
      xs.clear();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        if ((a.y <= yc) != (b.y <= yc)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
        const int x1 = std::min(w, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
        for (int x = x0; x < x1; ++x) mask.set(x, y, false);
      }
    }
  }
  return mask;
}

namespace detail {

namespace {

// Squared-distance lower envelope of parabolas (Felzenszwalb & Huttenlocher).
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto intersect = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
           (2.0 * (q - p));
  };
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<float> distance_transform(std::span<const std::uint8_t> foreground, int width,
                                      int height) {
  const double big = static_cast<double>(width) * width + static_cast<double>(height) * height;
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = foreground[i] ? big : 0.0;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> col(height), out(std::max(width, height));
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) col[y] = grid[static_cast<std::size_t>(y) * width + x];
    edt_1d(col.data(), out.data(), height, v, z);
    for (int y = 0; y < height; ++y) grid[static_cast<std::size_t>(y) * width + x] = out[y];
  }
  for (int y = 0; y < height; ++y) {
    double* row = grid.data() + static_cast<std::size_t>(y) * width;
    edt_1d(row, out.data(), width, v, z);
    std::copy(out.begin(), out.begin() + width, row);
  }
  std::vector<float> result(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = static_cast<float>(std::sqrt(std::min(grid[i], big)));
  return result;
}

int otsu_threshold(std::span<const double, 256> histogram) {
  double total = 0.0, weighted = 0.0;
  for (int i = 0; i < 256; ++i) {
    total += histogram[i];
    weighted += i * histogram[i];
  }
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_k = 0;
  for (int k = 0; k < 255; ++k) {
    w0 += histogram[k];
    sum0 += k * histogram[k];
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (weighted - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace detail

namespace {

std::vector<float> gaussian_smooth(const std::vector<float>& src, int w, int h, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
    norm += kernel[i + radius];
  }
  for (auto& k : kernel) k = static_cast<float>(k / norm);

  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  std::vector<float> tmp(src.size()), dst(src.size());
  for (int y = 0; y < h; ++y) {
    const float* row = src.data() + static_cast<std::size_t>(y) * w;
    float* out = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * row[reflect(x + k, w)];
      out[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    float* out = dst.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(reflect(y + k, h)) * w + x];
      out[x] = acc;
    }
  }
  return dst;
}

constexpr int kDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr int kDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

// Grayscale reconstruction by dilation of `marker` under `mask`, restricted
// to foreground pixels.
std::vector<float> reconstruct_by_dilation(std::vector<float> marker, const std::vector<float>& mask,
                                           const std::vector<std::uint8_t>& fg, int w, int h) {
  using Entry = std::pair<float, int>;
  std::priority_queue<Entry> queue;
  for (int i = 0; i < w * h; ++i)
    if (fg[i]) queue.emplace(marker[i], i);
  while (!queue.empty()) {
    const auto [v, i] = queue.top();
    queue.pop();
    if (v < marker[i]) continue;
    const int x = i % w, y = i / w;
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kDx[k], ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const int j = ny * w + nx;
      if (!fg[j]) continue;
      const float nv = std::min(v, mask[j]);
      if (nv > marker[j]) {
        marker[j] = nv;
        queue.emplace(nv, j);
      }
    }
  }
  return marker;
}

// Labels the regional maxima plateaus of `values` over foreground pixels.
int label_regional_maxima(const std::vector<float>& values, const std::vector<std::uint8_t>& fg,
                          int w, int h, std::vector<int>& labels) {
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> plateau, stack;
  int next = 0;
  for (int start = 0; start < w * h; ++start) {
    if (!fg[start] || visited[start]) continue;
    const float level = values[start];
    plateau.clear();
    stack.assign(1, start);
    visited[start] = 1;
    bool is_max = true;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      plateau.push_back(i);
      const int x = i % w, y = i / w;
      for (int k = 0; k < 8; ++k) {
        const int nx = x + kDx[k], ny = y + kDy[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int j = ny * w + nx;
        if (!fg[j]) continue;
        if (values[j] > level) {
          is_max = false;
        } else if (values[j] == level && !visited[j]) {
          visited[j] = 1;
          stack.push_back(j);
        }
      }
    }
    if (is_max) {
      ++next;
      for (int i : plateau) labels[i] = next;
    }
  }
  return next;
}

// Marker-controlled flooding of -distance: higher distance floods first,
// ties resolved by arrival order. Every reachable foreground pixel is labelled.
void watershed(const std::vector<float>& dist, const std::vector<std::uint8_t>& fg, int w, int h,
               std::vector<int>& labels) {
  struct Entry {
    float value;
    std::uint64_t age;
    int index;
    bool operator<(const Entry& o) const {
      if (value != o.value) return value < o.value;
      return age > o.age;
    }
  };
  std::priority_queue<Entry> queue;
  std::uint64_t age = 0;
  auto push_neighbours = [&](int i) {
    const int x = i % w, y = i / w;
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kDx[k], ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const int j = ny * w + nx;
      if (!fg[j] || labels[j] != 0) continue;
      labels[j] = labels[i];
      queue.push({dist[j], age++, j});
    }
  };
  std::vector<int> seeds;
  for (int i = 0; i < w * h; ++i)
    if (labels[i] > 0) seeds.push_back(i);
  for (int i : seeds) push_neighbours(i);
  while (!queue.empty()) {
    const int i = queue.top().index;
    queue.pop();
    push_neighbours(i);
  }
}

}  // namespace

ParticleSet delineate(const GrayImage& image, const RegionMask& mask, const ScaleCalibration& calib,
                      const SegmentationParams& params) {
  params.validate();
  if (!mask.congruent_with(image)) throw InputError("delineate: mask and image sizes differ");
  if (!(calib.mm_per_pixel > 0.0)) throw InputError("delineate: invalid calibration");
  const int w = image.width(), h = image.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;

  ParticleSet result;
  result.mm_per_pixel = calib.mm_per_pixel;
  result.min_area_px = params.min_area_px;
  result.masked_in_area_px = static_cast<double>(mask.count_true());
  if (result.masked_in_area_px == 0.0) throw InputError("delineate: mask excludes the whole image");

  std::vector<std::uint8_t> inside(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) inside[static_cast<std::size_t>(y) * w + x] = mask.at(x, y);

  // Contrast normalization over the masked-in region.
  int lo = 255, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!inside[i]) continue;
    lo = std::min<int>(lo, image.pixels()[i]);
    hi = std::max<int>(hi, image.pixels()[i]);
  }
  auto no_rock = [&] {
    result.no_foreground = true;
    result.background_area_px = result.masked_in_area_px;
    return result;
  };
  if (hi - lo < params.min_contrast || hi == lo) return no_rock();

  const float gain = 255.0f / static_cast<float>(hi - lo);
  std::vector<float> norm(n);
  for (std::size_t i = 0; i < n; ++i)
    norm[i] = std::clamp((static_cast<float>(image.pixels()[i]) - lo) * gain, 0.0f, 255.0f);
  const auto smooth = gaussian_smooth(norm, w, h, params.sigma_px);

  std::array<double, 256> hist{};
  for (std::size_t i = 0; i < n; ++i)
    if (inside[i]) hist[std::clamp(static_cast<int>(smooth[i]), 0, 255)] += 1.0;
  const int k = detail::otsu_threshold(hist);

  double fg_sum = 0, fg_n = 0, bg_sum = 0, bg_n = 0;
  for (int b = 0; b < 256; ++b) {
    if (b <= k) {
      bg_sum += b * hist[b];
      bg_n += hist[b];
    } else {
      fg_sum += b * hist[b];
      fg_n += hist[b];
    }
  }
  if (fg_n == 0 || bg_n == 0 || (fg_sum / fg_n - bg_sum / bg_n) / gain < params.min_contrast)
    return no_rock();

  std::vector<std::uint8_t> fg(n);
  double fg_count = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fg[i] = inside[i] && static_cast<int>(smooth[i]) > k;
    fg_count += fg[i];
  }
  result.background_area_px = result.masked_in_area_px - fg_count;
  if (fg_count == 0.0) return no_rock();

  const auto dist = detail::distance_transform(fg, w, h);
  std::vector<float> lowered(n);
  for (std::size_t i = 0; i < n; ++i)
    lowered[i] = fg[i] ? std::max(0.0f, dist[i] - static_cast<float>(params.marker_depth)) : 0.0f;
  const auto hmax = reconstruct_by_dilation(std::move(lowered), dist, fg, w, h);

  std::vector<int> labels(n, 0);
  const int regions = label_regional_maxima(hmax, fg, w, h, labels);
  watershed(dist, fg, w, h, labels);

  struct Stats {
    double area = 0, sx = 0, sy = 0;
    bool cut = false;
  };
  std::vector<Stats> stats(static_cast<std::size_t>(regions) + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      const int l = labels[i];
      if (l == 0) continue;
      auto& s = stats[l];
      s.area += 1;
      s.sx += x + 0.5;
      s.sy += y + 0.5;
      if (s.cut) continue;
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) {
        s.cut = true;
        continue;
      }
      for (int d = 0; d < 8; ++d)
        if (!inside[(y + kDy[d]) * w + x + kDx[d]]) s.cut = true;
    }
  }
  for (int l = 1; l <= regions; ++l) {
    const auto& s = stats[l];
    if (s.area == 0) continue;
    if (params.exclude_border && s.cut) {
      result.truncated_area_px += s.area;
    } else if (s.area < params.min_area_px) {
      result.unresolved_area_px += s.area;
    } else {
      result.particles.push_back({s.area, equivalent_diameter_mm(s.area, calib.mm_per_pixel),
                                  s.sx / s.area, s.sy / s.area});
    }
  }
  return result;
}

SizeDistribution particles_to_distribution(const ParticleSet& particles, double fines_factor) {
  if (particles.empty()) throw InputError("particles_to_distribution: no particles");
  const auto items = mass_items(particles, fines_factor);
  return mass_passing_distribution(items);
}

}  // namespace rockfrag
