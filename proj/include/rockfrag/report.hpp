#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rockfrag/config.hpp"
#include "rockfrag/distribution.hpp"
#include "rockfrag/mission.hpp"
#include "rockfrag/svg.hpp"
#include "rockfrag/swebrec.hpp"

namespace rockfrag {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;

/// Where a frame came from and how it was calibrated.
struct FrameMeta {
  std::string source;
  std::string calibration;
};

struct Reference {
  std::string source;
  SizeDistribution distribution;
  CharacteristicSizes sizes;
};

struct StopSummary {
  bool early_stop = true;
  std::optional<int> stopped_at;  // frame ordinal at which the rule fired
  StopDecision final_decision;
};

Json distribution_json(const SizeDistribution& dist);
SizeDistribution distribution_from_json(const Json& j);

Json fit_report(const std::string& source, const SizeDistribution& data, const FitResult& fit);

/// Frame log, pooled curve, rolling statistics and stop decision; with a
/// reference also per-frame log errors, their running average and per-size
/// true errors across accepted frames.
Json mission_report(const std::string& command, const MissionState& state, const Config& config,
                    std::span<const FrameMeta> frames, const std::optional<Reference>& reference,
                    const StopSummary& stop);

struct ComparisonRow {
  double size_mm = 0.0;
  double passing_a = 0.0;
  double passing_b = 0.0;
  std::optional<double> percent_difference;
};

/// Percent difference of the pooled curves of two reports on the union of
/// their size grids, restricted to the overlapping size range. Report `a`
/// plays the role of the manual measurement.
std::vector<ComparisonRow> compare_reports(const Json& a, const Json& b);
Json comparison_json(std::span<const ComparisonRow> rows);

Plot fit_plot(const SizeDistribution& data, const FitResult& fit);
Plot distribution_plot(const Json& report);
Plot error_plot(const Json& report);     // per-frame log error and running average
Plot required_plot(const Json& report);  // required images against frame ordinal
Plot comparison_plot(std::span<const ComparisonRow> rows);

}  // namespace rockfrag
