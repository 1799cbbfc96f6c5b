#include "rockfrag/mission.hpp"

#include <algorithm>
#include <cmath>

#include "rockfrag/error.hpp"
#include "rockfrag/swebrec.hpp"

namespace rockfrag {

const char* to_string(TargetSize t) noexcept {
  switch (t) {
    case TargetSize::P80: return "P80";
    case TargetSize::P50: return "P50";
    case TargetSize::P20: return "P20";
  }
  return "?";
}

TargetSize parse_target_size(const std::string& s) {
  if (s == "P80" || s == "p80") return TargetSize::P80;
  if (s == "P50" || s == "p50") return TargetSize::P50;
  if (s == "P20" || s == "p20") return TargetSize::P20;
  throw InputError("unknown characteristic size '" + s + "' (expected P80, P50 or P20)");
}

double pick(const CharacteristicSizes& sizes, TargetSize t) noexcept {
  switch (t) {
    case TargetSize::P80: return sizes.p80;
    case TargetSize::P50: return sizes.p50;
    case TargetSize::P20: return sizes.p20;
  }
  return 0.0;
}

const char* to_string(FrameStatus s) noexcept {
  switch (s) {
    case FrameStatus::Accepted: return "accepted";
    case FrameStatus::RejectedQuality: return "quality";
    case FrameStatus::RejectedOutlier: return "outlier";
    case FrameStatus::RejectedAnalysis: return "analysis-failure";
  }
  return "?";
}

void StoppingConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (!(power > 0.0 && power < 1.0)) throw InputError("power must lie in (0, 1)");
  if (!(alpha < power)) throw InputError("alpha must be smaller than power");
  if (!(effect_fraction > 0.0)) throw InputError("effect_fraction must be > 0");
  if (min_frames < 2) throw InputError("min_frames must be >= 2");
  if (!(quality_threshold >= 0.0)) throw InputError("quality_threshold must be >= 0");
  if (!(outlier_k > 0.0)) throw InputError("outlier_k must be > 0");
}

CharacteristicSizes estimate_characteristic_sizes(const SizeDistribution& dist,
                                                  CharacteristicMethod method) {
  if (method == CharacteristicMethod::SwebrecFit) {
    try {
      const auto fit = swebrec::fit(dist);
      if (fit.converged && fit.params.valid()) return swebrec::characteristic_sizes(fit.params);
    } catch (const InputError&) {
      // too few informative points; fall through to interpolation
    }
  }
  try {
    return characteristic_sizes(dist);
  } catch (const InputError& e) {
    throw AnalysisError(std::string("characteristic sizes unavailable: ") + e.what());
  }
}

void RollingStat::push(double v) noexcept {
  ++n;
  const double delta = v - mean;
  mean += delta / n;
  m2 += delta * (v - mean);
}

std::optional<double> RollingStat::sd() const noexcept {
  if (n < 2) return std::nullopt;
  return std::sqrt(std::max(0.0, m2 / (n - 1)));
}

void RollingStats::push(const CharacteristicSizes& s) noexcept {
  by_target[0].push(s.p80);
  by_target[1].push(s.p50);
  by_target[2].push(s.p20);
}

FrameAnalysis analyze_frame(const GrayImage& image, const RegionMask& mask,
                            const ScaleCalibration& calib, const AnalysisConfig& config) {
  FrameAnalysis out;
  out.quality = quality_score(image);
  try {
    out.particles = delineate(image, mask, calib, config.segmentation);
    if (out.particles.empty()) {
      out.failure = out.particles.no_foreground ? "no rock found in frame" : "no particles resolved";
      return out;
    }
    out.distribution = particles_to_distribution(out.particles, config.fines_factor);
    out.sizes = estimate_characteristic_sizes(out.distribution, config.method);
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

std::vector<double> MissionState::accepted_sizes(TargetSize t) const {
  std::vector<double> out;
  out.reserve(accepted_sizes_.size());
  for (const auto& s : accepted_sizes_) out.push_back(pick(s, t));
  return out;
}

bool MissionState::same_aggregate(const MissionState& other) const {
  if (accepted_sizes_ != other.accepted_sizes_ || !(pooled_ == other.pooled_) ||
      !(rolling_ == other.rolling_) || accepted_particles_.size() != other.accepted_particles_.size())
    return false;
  for (std::size_t i = 0; i < accepted_particles_.size(); ++i)
    if (accepted_particles_[i].particles.size() != other.accepted_particles_[i].particles.size())
      return false;
  return true;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

constexpr double kMadToSd = 1.4826;

bool detect_outlier(const MissionState& state, double candidate_mm, const StoppingConfig& config) {
  if (state.accepted_count() < config.min_frames) return false;
  auto sizes = state.accepted_sizes(config.target);
  const double med = median(sizes);
  for (auto& s : sizes) s = std::abs(s - med);
  const double mad = median(std::move(sizes));
  const double dev = std::abs(candidate_mm - med);
  if (mad == 0.0) return dev > 0.2 * med;
  // normal-consistent scaling, so k reads as a number of standard deviations
  return dev > config.outlier_k * kMadToSd * mad;
}

const FrameResult& MissionState::commit(FrameAnalysis analysis, const MissionConfig& config) {
  FrameResult r;
  r.frame_id = static_cast<int>(frames_.size()) + 1;
  r.quality = analysis.quality;
  r.particle_count = analysis.particles.particles.size();
  r.mm_per_pixel = analysis.particles.mm_per_pixel;

  if (config.quality_filter && analysis.quality.sharpness < config.stopping.quality_threshold) {
    r.status = FrameStatus::RejectedQuality;
    r.reason = "sharpness below threshold";
  } else if (analysis.failure) {
    r.status = FrameStatus::RejectedAnalysis;
    r.reason = *analysis.failure;
  } else if (config.outlier_filter &&
             detect_outlier(*this, pick(analysis.sizes, config.stopping.target), config.stopping)) {
    r.status = FrameStatus::RejectedOutlier;
    r.reason = std::string(to_string(config.stopping.target)) + " outside the median/MAD band";
    r.distribution = std::move(analysis.distribution);
    r.sizes = analysis.sizes;
  } else {
    r.status = FrameStatus::Accepted;
    r.distribution = analysis.distribution;
    r.sizes = analysis.sizes;
    rolling_.push(analysis.sizes);
    accepted_sizes_.push_back(analysis.sizes);
    accepted_particles_.push_back(std::move(analysis.particles));
    pooled_ = pool_distributions(accepted_particles_, config.analysis.fines_factor);
  }
  for (int t = 0; t < 3; ++t) {
    const auto& stat = rolling_.by_target[t];
    if (stat.n >= 2 && stat.mean > 0.0)
      r.required_after[t] = required_samples(stat.mean, *stat.sd(), config.stopping);
  }
  frames_.push_back(std::move(r));
  return frames_.back();
}

FrameResult ingest_frame(MissionState& state, const GrayImage& image, const ScaleCalibration& calib,
                         const MissionConfig& config, const RegionMask* mask) {
  config.stopping.validate();
  FrameAnalysis analysis;
  analysis.quality = quality_score(image);
  const bool sharp_enough =
      !config.quality_filter || analysis.quality.sharpness >= config.stopping.quality_threshold;
  if (sharp_enough) {
    const RegionMask full = mask ? RegionMask{} : RegionMask(image.width(), image.height(), true);
    analysis = analyze_frame(image, mask ? *mask : full, calib, config.analysis);
  }
  return state.commit(std::move(analysis), config);
}

StopDecision should_stop(const MissionState& state, const StoppingConfig& config) {
  StopDecision d;
  const auto& stat = state.rolling()[config.target];
  if (stat.n < 2 || !(stat.mean > 0.0)) return d;
  d.required = required_samples(stat.mean, *stat.sd(), config);
  d.stop = state.accepted_count() >= *d.required && state.accepted_count() >= config.min_frames;
  return d;
}

}  // namespace rockfrag
