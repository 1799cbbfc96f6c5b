#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rockfrag/distribution.hpp"
#include "rockfrag/image.hpp"
#include "rockfrag/particles.hpp"
#include "rockfrag/segmentation.hpp"

namespace rockfrag {

enum class TargetSize { P80 = 0, P50 = 1, P20 = 2 };

const char* to_string(TargetSize t) noexcept;
TargetSize parse_target_size(const std::string& s);
double pick(const CharacteristicSizes& sizes, TargetSize t) noexcept;

struct StoppingConfig {
  TargetSize target = TargetSize::P80;
  double effect_fraction = 0.20;
  double alpha = 0.05;
  double power = 0.80;
  int min_frames = 2;
  double quality_threshold = 0.0;
  double outlier_k = 3.0;

  void validate() const;
};

enum class CharacteristicMethod { SwebrecFit, Interpolation };

struct AnalysisConfig {
  SegmentationParams segmentation;
  double fines_factor = 0.0;
  CharacteristicMethod method = CharacteristicMethod::SwebrecFit;
};

struct MissionConfig {
  StoppingConfig stopping;
  AnalysisConfig analysis;
  bool quality_filter = true;
  bool outlier_filter = true;
};

/// Characteristic sizes of a distribution: Swebrec fit and closed-form
/// inversion, falling back to log-linear interpolation when the fit is not
/// usable. Throws AnalysisError when neither route yields all three sizes.
CharacteristicSizes estimate_characteristic_sizes(const SizeDistribution& dist,
                                                  CharacteristicMethod method);

/// Smallest n >= 2 for which a one-sided one-sample t-test at level alpha
/// reaches the configured power against mean * (1 + effect_fraction), using
/// the shifted central t approximation of the noncentral t.
int required_samples(double mean, double sample_sd, const StoppingConfig& config);

/// Normal-approximation sample size ((z_{1-alpha} + z_power) sd / delta)^2
/// with delta = effect_fraction * mean; the starting point of the search.
double normal_seed_samples(double mean, double sample_sd, const StoppingConfig& config);

/// Welford accumulator.
struct RollingStat {
  int n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double v) noexcept;
  std::optional<double> sd() const noexcept;
  bool operator==(const RollingStat&) const = default;
};

struct RollingStats {
  std::array<RollingStat, 3> by_target{};  // indexed by TargetSize

  const RollingStat& operator[](TargetSize t) const { return by_target[static_cast<int>(t)]; }
  void push(const CharacteristicSizes& s) noexcept;
  bool operator==(const RollingStats&) const = default;
};

enum class FrameStatus { Accepted, RejectedQuality, RejectedOutlier, RejectedAnalysis };
const char* to_string(FrameStatus s) noexcept;

/// Pure per-image analysis; safe to run for many frames in parallel.
struct FrameAnalysis {
  QualityScore quality;
  ParticleSet particles;
  SizeDistribution distribution;
  CharacteristicSizes sizes;
  std::optional<std::string> failure;
};

FrameAnalysis analyze_frame(const GrayImage& image, const RegionMask& mask,
                            const ScaleCalibration& calib, const AnalysisConfig& config);

struct FrameResult {
  int frame_id = 0;  // 1-based ordinal in arrival order
  QualityScore quality;
  FrameStatus status = FrameStatus::RejectedAnalysis;
  std::string reason;  // empty when accepted
  SizeDistribution distribution;
  CharacteristicSizes sizes;
  std::size_t particle_count = 0;
  double mm_per_pixel = 0.0;
  // required_samples for P80, P50, P20 after this frame; absent below 2 accepted frames
  std::array<std::optional<int>, 3> required_after{};

  bool accepted() const noexcept { return status == FrameStatus::Accepted; }
};

/// Streaming aggregate over one mission. Mutated by one thread at a time.
class MissionState {
 public:
  const std::vector<FrameResult>& frames() const noexcept { return frames_; }
  const SizeDistribution& pooled() const noexcept { return pooled_; }
  const RollingStats& rolling() const noexcept { return rolling_; }
  int accepted_count() const noexcept { return static_cast<int>(accepted_particles_.size()); }
  std::span<const ParticleSet> accepted_particles() const noexcept { return accepted_particles_; }
  std::vector<double> accepted_sizes(TargetSize t) const;

  /// Applies the quality and outlier rules to an analysed frame and records it.
  const FrameResult& commit(FrameAnalysis analysis, const MissionConfig& config);

  /// Everything except the frame log.
  bool same_aggregate(const MissionState& other) const;

 private:
  std::vector<FrameResult> frames_;
  std::vector<ParticleSet> accepted_particles_;
  std::vector<CharacteristicSizes> accepted_sizes_;
  SizeDistribution pooled_;
  RollingStats rolling_;
};

/// |candidate - median| > k * 1.4826 * MAD over accepted target sizes; a zero MAD
/// falls back to a band of 20 % of the median. Disabled below min_frames.
bool detect_outlier(const MissionState& state, double candidate_mm, const StoppingConfig& config);

/// Scores, analyses and commits one frame.
FrameResult ingest_frame(MissionState& state, const GrayImage& image, const ScaleCalibration& calib,
                         const MissionConfig& config, const RegionMask* mask = nullptr);

struct StopDecision {
  bool stop = false;
  std::optional<int> required;
};

StopDecision should_stop(const MissionState& state, const StoppingConfig& config);

}  // namespace rockfrag
