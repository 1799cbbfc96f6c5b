#include "rockfrag/swebrec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rockfrag/error.hpp"

namespace rockfrag {

void SwebrecParams::validate() const {
  if (!(std::isfinite(x_max) && std::isfinite(x_50) && std::isfinite(b)) || !valid())
    throw InputError("swebrec: parameters require x_max > x_50 > 0 and b > 0");
}

namespace swebrec {

double evaluate(const SwebrecParams& params, double x_mm) {
  params.validate();
  if (!(x_mm > 0.0)) throw InputError("swebrec evaluate: size must be > 0");
  if (x_mm >= params.x_max) return 1.0;
  const double ratio = std::log(params.x_max / x_mm) / std::log(params.x_max / params.x_50);
  return 1.0 / (1.0 + std::pow(ratio, params.b));
}

double invert(const SwebrecParams& params, double p) {
  params.validate();
  if (!(p > 0.0 && p < 1.0)) throw InputError("swebrec invert: passing must lie in (0, 1)");
  const double spread = std::log(params.x_max / params.x_50);
  return params.x_max / std::exp(spread * std::pow((1.0 - p) / p, 1.0 / params.b));
}

double sample_size(const SwebrecParams& params, double u) {
  if (!(u > 0.0 && u < 1.0)) throw InputError("swebrec sample: variate must lie in (0, 1)");
  return invert(params, u);
}

std::array<double, 3> to_unconstrained(const SwebrecParams& params) {
  return {std::log(params.x_max - params.x_50), std::log(params.x_50), std::log(params.b)};
}

SwebrecParams from_unconstrained(const std::array<double, 3>& u) {
  const double x50 = std::exp(u[1]);
  return {x50 + std::exp(u[0]), x50, std::exp(u[2])};
}

std::array<double, 3> gradient(const SwebrecParams& params, double x_mm) {
  if (!(x_mm > 0.0)) throw InputError("swebrec gradient: size must be > 0");
  if (x_mm >= params.x_max) return {0.0, 0.0, 0.0};
  const double xm = params.x_max;
  const double x50 = params.x_50;
  const double b = params.b;
  const double l = std::log(xm / x_mm);
  const double l50 = std::log(xm / x50);
  const double f = std::pow(l / l50, b);
  const double p = 1.0 / (1.0 + f);
  const double dp_df = -p * p;

  const double df_dxmax = f * b * (1.0 / (xm * l) - 1.0 / (xm * l50));
  const double df_dx50 = f * b / (x50 * l50);
  const double df_db = f * std::log(l / l50);

  return {dp_df * df_dxmax * (xm - x50), dp_df * (df_dxmax + df_dx50) * x50, dp_df * df_db * b};
}

namespace {

struct Sample {
  double x;
  double p;
};

double cost_of(const SwebrecParams& params, std::span<const Sample> data) {
  double c = 0.0;
  for (const auto& s : data) {
    const double r = evaluate(params, s.x) - s.p;
    c += r * r;
  }
  return c;
}

// Solves the 3x3 symmetric system a * x = rhs by Gaussian elimination with
// partial pivoting; returns false when singular.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> rhs,
            std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[col], a[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const double m = a[r][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[r][k] -= m * a[col][k];
      rhs[r] -= m * rhs[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

struct StartResult {
  SwebrecParams params;
  double cost;
  int iterations;
  bool converged;
};

StartResult levenberg_marquardt(const SwebrecParams& start, std::span<const Sample> data,
                                const FitOptions& opt) {
  auto u = to_unconstrained(start);
  SwebrecParams params = start;
  double cost = cost_of(params, data);
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;

  while (iter < opt.max_iterations) {
    ++iter;
    std::array<std::array<double, 3>, 3> h{};
    std::array<double, 3> g{};
    for (const auto& s : data) {
      const double r = evaluate(params, s.x) - s.p;
      const auto j = gradient(params, s.x);
      for (int a = 0; a < 3; ++a) {
        g[a] += j[a] * r;
        for (int c = 0; c < 3; ++c) h[a][c] += j[a] * j[c];
      }
    }
    if (cost == 0.0) {
      converged = true;
      break;
    }
    auto damped = h;
    double max_diag = 0.0;
    for (int a = 0; a < 3; ++a) max_diag = std::max(max_diag, h[a][a]);
    for (int a = 0; a < 3; ++a) damped[a][a] += lambda * (h[a][a] + 1e-12 * max_diag + 1e-300);

    std::array<double, 3> step{};
    const bool solved = solve3(damped, {-g[0], -g[1], -g[2]}, step);
    double step_norm = 0.0, u_norm = 0.0;
    for (int a = 0; a < 3; ++a) {
      step_norm += step[a] * step[a];
      u_norm += u[a] * u[a];
    }
    const double rel_step = std::sqrt(step_norm) / std::max(1.0, std::sqrt(u_norm));

    if (solved) {
      std::array<double, 3> trial_u{u[0] + step[0], u[1] + step[1], u[2] + step[2]};
      const auto trial = from_unconstrained(trial_u);
      const double trial_cost = trial.valid() && std::isfinite(trial.x_max) && std::isfinite(trial.b)
                                    ? cost_of(trial, data)
                                    : std::numeric_limits<double>::infinity();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double rel_change = (cost - trial_cost) / cost;
        u = trial_u;
        params = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        if (rel_change < opt.residual_tolerance || rel_step < opt.step_tolerance) {
          converged = true;
          break;
        }
        continue;
      }
    }
    if (rel_step < opt.step_tolerance) {
      converged = true;
      break;
    }
    lambda *= 4.0;
    if (lambda > 1e30) break;
  }
  return {params, cost, iter, converged};
}

double initial_median(std::span<const Sample> data) {
  // Log-linear interpolation of the data at 50 % passing, extrapolated from
  // the nearest pair with distinct passing when 0.5 is not bracketed.
  for (std::size_t i = 0; i + 1 < data.size(); ++i) {
    const auto& a = data[i];
    const auto& c = data[i + 1];
    if (a.p <= 0.5 && c.p >= 0.5 && c.p > a.p) {
      const double t = (0.5 - a.p) / (c.p - a.p);
      return a.x * std::pow(c.x / a.x, t);
    }
  }
  const bool all_below = data.back().p < 0.5;
  std::size_t i1 = all_below ? data.size() - 1 : 0;
  std::size_t i0 = i1;
  if (all_below) {
    while (i0 > 0 && data[i0].p == data[i1].p) --i0;
  } else {
    while (i0 + 1 < data.size() && data[i0].p == data[i1].p) ++i0;
  }
  const auto& a = data[std::min(i0, i1)];
  const auto& c = data[std::max(i0, i1)];
  const double t = (0.5 - a.p) / (c.p - a.p);
  const double x50 = a.x * std::pow(c.x / a.x, t);
  return std::clamp(x50, 0.1 * data.front().x, 10.0 * data.back().x);
}

}  // namespace

FitResult fit(std::span<const SizePoint> points, const FitOptions& options) {
  if (points.size() < 3) throw InputError("swebrec fit: at least 3 points are required");
  std::vector<Sample> data;
  data.reserve(points.size());
  for (const auto& pt : points) {
    if (!(pt.size_mm > 0.0) || !std::isfinite(pt.size_mm))
      throw InputError("swebrec fit: sizes must be > 0");
    if (!(pt.passing > 0.0 && pt.passing <= 1.0))
      throw InputError("swebrec fit: passing must lie in (0, 1]");
    data.push_back({pt.size_mm, pt.passing});
  }
  std::sort(data.begin(), data.end(), [](const Sample& a, const Sample& c) { return a.x < c.x; });
  for (std::size_t i = 1; i < data.size(); ++i)
    if (data[i].x == data[i - 1].x) throw InputError("swebrec fit: sizes must be distinct");
  const bool constant = std::all_of(data.begin(), data.end(),
                                    [&](const Sample& s) { return s.p == data.front().p; });
  if (constant) throw InputError("swebrec fit: degenerate points (constant passing)");

  const double x50_0 = initial_median(data);
  const double x_top = data.back().x;

  // (x_50 factor, x_max factor on the largest size, b)
  constexpr double kStarts[5][3] = {
      {1.00, 1.5, 2.0}, {0.95, 1.25, 1.5}, {1.05, 2.0, 3.0}, {1.00, 1.1, 2.5}, {0.90, 3.0, 1.0}};

  bool have = false;
  StartResult best{};
  for (const auto& s : kStarts) {
    SwebrecParams start{0.0, x50_0 * s[0], s[2]};
    start.x_max = std::max(x_top * s[1], 1.1 * start.x_50);
    const auto r = levenberg_marquardt(start, data, options);
    if (!have || r.cost < best.cost) {
      best = r;
      have = true;
    }
  }
  return {best.params, std::sqrt(best.cost / static_cast<double>(data.size())), best.iterations,
          best.converged};
}

FitResult fit(const SizeDistribution& dist, const FitOptions& options) {
  std::vector<SizePoint> pts;
  for (const auto& p : dist.points()) {
    if (p.passing <= 0.0) continue;
    pts.push_back(p);
    if (p.passing >= 1.0) break;
  }
  return fit(pts, options);
}

CharacteristicSizes characteristic_sizes(const SwebrecParams& params) {
  return {invert(params, 0.8), invert(params, 0.5), invert(params, 0.2)};
}

}  // namespace swebrec
}  // namespace rockfrag
