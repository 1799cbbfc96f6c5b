#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>

#include "rockfrag/error.hpp"
#include "rockfrag/mission.hpp"

namespace rockfrag {

namespace {

double t_quantile(double p, int df) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

}  // namespace

double normal_seed_samples(double mean, double sample_sd, const StoppingConfig& config) {
  config.validate();
  if (!(mean > 0.0)) throw InputError("required_samples: mean must be > 0");
  if (!(sample_sd >= 0.0)) throw InputError("required_samples: sd must be >= 0");
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 1.0 - config.alpha) +
                   boost::math::quantile(normal, config.power);
  const double k = z * sample_sd / (config.effect_fraction * mean);
  return k * k;
}

int required_samples(double mean, double sample_sd, const StoppingConfig& config) {
  const double seed = normal_seed_samples(mean, sample_sd, config);
  if (sample_sd == 0.0) return 2;
  const double ratio = sample_sd / (config.effect_fraction * mean);

  // Power of the shifted-t approximation grows with n, so the condition below
  // is monotone and the smallest admissible n is found by a local scan from
  // the normal-approximation seed.
  auto enough = [&](int n) {
    const int df = n - 1;
    const double t = t_quantile(1.0 - config.alpha, df) + t_quantile(config.power, df);
    return (t * ratio) * (t * ratio) <= static_cast<double>(n);
  };
  constexpr double kCap = 1e7;
  if (seed > kCap) throw InputError("required_samples: sample size exceeds 1e7");
  int n = std::max(2, static_cast<int>(std::ceil(seed)));
  if (enough(n)) {
    while (n > 2 && enough(n - 1)) --n;
  } else {
    while (!enough(n)) {
      if (++n > kCap) throw InputError("required_samples: sample size exceeds 1e7");
    }
  }
  return n;
}

}  // namespace rockfrag
