#include "rockfrag/report.hpp"

#include <algorithm>
#include <cmath>

#include "rockfrag/error.hpp"

namespace rockfrag {
namespace {

constexpr TargetSize kTargets[] = {TargetSize::P80, TargetSize::P50, TargetSize::P20};

Json sizes_json(const CharacteristicSizes& s) {
  return Json{{"p80", s.p80}, {"p50", s.p50}, {"p20", s.p20}};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_json(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

std::string lower(TargetSize t) {
  std::string s = to_string(t);
  s[0] = 'p';
  return s;
}

struct MeanSd {
  double mean = 0.0;
  std::optional<double> sd;
  int n = 0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  r.n = static_cast<int>(v.size());
  if (v.empty()) return r;
  double sum = 0.0;
  for (double x : v) sum += x;
  r.mean = sum / r.n;
  if (r.n >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / (r.n - 1));
  }
  return r;
}

Json reference_errors(const MissionState& state, const Reference& ref) {
  Json out = Json::object();
  std::vector<const FrameResult*> accepted;
  for (const auto& f : state.frames())
    if (f.accepted()) accepted.push_back(&f);

  Json log_error = Json::object();
  for (auto t : kTargets) {
    std::vector<double> per_frame;
    Json ids = Json::array(), prefix = Json::array();
    for (const auto* f : accepted) {
      per_frame.push_back(log_error_characteristic(pick(f->sizes, t), pick(ref.sizes, t)));
      ids.push_back(f->frame_id);
      prefix.push_back(average_log_error(per_frame));
    }
    log_error[to_string(t)] = Json{{"frames", ids}, {"per_frame", per_frame}, {"prefix_average", prefix}};
  }
  out["log_error"] = std::move(log_error);

  Json by_size = Json::array();
  const auto sizes = ref.distribution.sizes();
  std::vector<std::vector<double>> columns(sizes.size());
  for (const auto* f : accepted) {
    const auto e = percent_true_error(f->distribution, ref.distribution, sizes);
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i]) columns[i].push_back(*e[i]);
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto m = mean_sd(columns[i]);
    by_size.push_back({{"size_mm", sizes[i]},
                       {"mean", m.n ? Json(m.mean) : Json(nullptr)},
                       {"sd", optional_json(m.sd)},
                       {"n", m.n}});
  }
  out["true_error_by_size"] = std::move(by_size);
  return out;
}

}  // namespace

Json distribution_json(const SizeDistribution& dist) {
  return Json{{"sizes", dist.sizes()}, {"passing", dist.passing()}};
}

SizeDistribution distribution_from_json(const Json& j) {
  try {
    const auto sizes = j.at("sizes").get<std::vector<double>>();
    const auto passing = j.at("passing").get<std::vector<double>>();
    if (sizes.size() != passing.size()) throw InputError("sizes and passing differ in length");
    std::vector<SizePoint> pts;
    for (std::size_t i = 0; i < sizes.size(); ++i) pts.push_back({sizes[i], passing[i]});
    return SizeDistribution(std::move(pts));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("distribution json: ") + e.what());
  }
}

Json fit_report(const std::string& source, const SizeDistribution& data, const FitResult& fit) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = "fit";
  j["source"] = source;
  j["data"] = distribution_json(data);
  j["params"] = {{"x_max", fit.params.x_max}, {"x_50", fit.params.x_50}, {"b", fit.params.b}};
  j["residual_rms"] = fit.residual_rms;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["characteristic"] = sizes_json(swebrec::characteristic_sizes(fit.params));
  return j;
}

Json mission_report(const std::string& command, const MissionState& state, const Config& config,
                    std::span<const FrameMeta> frames, const std::optional<Reference>& reference,
                    const StopSummary& stop) {
  const auto& log = state.frames();
  if (frames.size() != log.size()) throw InputError("report: frame metadata does not match the frame log");
  if (state.accepted_count() == 0) throw AnalysisError("report: no accepted frames");
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  Json cfg = Json::object();
  for (const auto& [k, v] : config.entries())
    if (k != "output_dir") cfg[k] = v;
  j["config"] = std::move(cfg);

  Json fr = Json::array();
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& f = log[i];
    Json e;
    e["id"] = f.frame_id;
    e["source"] = frames[i].source;
    e["calibration"] = frames[i].calibration;
    e["status"] = to_string(f.status);
    e["reason"] = f.reason;
    e["sharpness"] = f.quality.sharpness;
    e["mm_per_pixel"] = f.mm_per_pixel;
    e["particles"] = f.particle_count;
    const bool sized = !f.distribution.empty();
    e["sizes"] = sized ? sizes_json(f.sizes) : Json(nullptr);
    e["distribution"] = sized ? distribution_json(f.distribution) : Json(nullptr);
    Json req = Json::object();
    for (auto t : kTargets) req[to_string(t)] = optional_json(f.required_after[static_cast<int>(t)]);
    e["required_after"] = std::move(req);
    fr.push_back(std::move(e));
  }
  j["frames"] = std::move(fr);

  Json pooled = nullptr;
  if (!state.pooled().empty()) {
    pooled = distribution_json(state.pooled());
    try {
      pooled["characteristic"] = sizes_json(estimate_characteristic_sizes(state.pooled(), config.method));
    } catch (const AnalysisError&) {
      pooled["characteristic"] = nullptr;
    }
  }
  j["pooled"] = pooled;

  Json rolling = Json::object();
  for (auto t : kTargets) {
    const auto& s = state.rolling()[t];
    rolling[lower(t)] = {{"mean", s.n ? Json(s.mean) : Json(nullptr)}, {"sd", optional_json(s.sd())}, {"n", s.n}};
  }
  j["rolling"] = std::move(rolling);

  j["stop"] = {{"target", to_string(config.target)},
               {"required", optional_json(stop.final_decision.required)},
               {"decision", stop.final_decision.stop ? "stop" : "continue"},
               {"accepted", state.accepted_count()},
               {"early_stop", stop.early_stop},
               {"stopped_at", optional_json(stop.stopped_at)}};

  if (reference) {
    Json r;
    r["source"] = reference->source;
    r["distribution"] = distribution_json(reference->distribution);
    r["characteristic"] = sizes_json(reference->sizes);
    j["reference"] = std::move(r);
    Json errors = reference_errors(state, *reference);
    if (!pooled.is_null() && !pooled["characteristic"].is_null()) {
      const auto ps = estimate_characteristic_sizes(state.pooled(), config.method);
      Json pe = Json::object();
      for (auto t : kTargets) pe[to_string(t)] = log_error_characteristic(pick(ps, t), pick(reference->sizes, t));
      errors["pooled_log_error"] = std::move(pe);
      Json te = Json::array();
      const auto sizes = reference->distribution.sizes();
      const auto e = percent_true_error(state.pooled(), reference->distribution, sizes);
      for (std::size_t i = 0; i < sizes.size(); ++i)
        te.push_back({{"size_mm", sizes[i]}, {"error", optional_json(e[i])}});
      errors["pooled_true_error"] = std::move(te);
    }
    j["errors"] = std::move(errors);
  }
  return j;
}

std::vector<ComparisonRow> compare_reports(const Json& a, const Json& b) {
  auto pooled = [](const Json& r, const char* name) {
    if (!r.is_object() || !r.contains("pooled") || r["pooled"].is_null())
      throw InputError(std::string("compare: report ") + name + " has no pooled distribution");
    return distribution_from_json(r["pooled"]);
  };
  const auto da = pooled(a, "a");
  const auto db = pooled(b, "b");
  if (da.empty() || db.empty()) throw InputError("compare: empty pooled distribution");
  const double lo = std::max(da.min_size(), db.min_size());
  const double hi = std::min(da.max_size(), db.max_size());
  if (lo > hi) throw InputError("compare: no common grid (size ranges are disjoint)");
  std::vector<double> grid;
  for (double s : da.sizes())
    if (s >= lo && s <= hi) grid.push_back(s);
  for (double s : db.sizes())
    if (s >= lo && s <= hi) grid.push_back(s);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw InputError("compare: no common grid");
  const auto diff = percent_difference(da, db, grid);
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i)
    rows.push_back({grid[i], percent_passing_at(da, grid[i]), percent_passing_at(db, grid[i]), diff[i]});
  return rows;
}

Json comparison_json(std::span<const ComparisonRow> rows) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = "compare";
  Json r = Json::array();
  for (const auto& row : rows)
    r.push_back({{"size_mm", row.size_mm},
                 {"passing_a", row.passing_a},
                 {"passing_b", row.passing_b},
                 {"percent_difference", optional_json(row.percent_difference)}});
  j["rows"] = std::move(r);
  return j;
}

Plot fit_plot(const SizeDistribution& data, const FitResult& fit) {
  Plot p{"Sieve data and fitted Swebrec curve", "size (mm)", "passing (%)", true, {}};
  PlotSeries pts{"sieve", {}, {}, true, "#d62728"};
  for (const auto& s : data.points()) {
    pts.x.push_back(s.size_mm);
    pts.y.push_back(100.0 * s.passing);
  }
  PlotSeries curve{"fit", {}, {}, false, "#1f77b4"};
  const double lo = std::max(0.05 * fit.params.x_max, 0.5 * data.min_size());
  const double hi = fit.params.x_max;
  for (int i = 0; i <= 200; ++i) {
    const double x = lo * std::pow(hi / lo, i / 200.0);
    curve.x.push_back(x);
    curve.y.push_back(100.0 * swebrec::evaluate(fit.params, x));
  }
  p.series = {curve, pts};
  return p;
}

Plot distribution_plot(const Json& report) {
  Plot p{"Size distribution", "size (mm)", "passing (%)", true, {}};
  auto add = [&](const Json& d, const std::string& name, bool markers, const std::string& color) {
    PlotSeries s{name, {}, {}, markers, color};
    for (double v : d.at("sizes")) s.x.push_back(v);
    for (double v : d.at("passing")) s.y.push_back(100.0 * v);
    p.series.push_back(std::move(s));
  };
  for (const auto& f : report.at("frames"))
    if (!f["distribution"].is_null() && f["status"] == "accepted") add(f["distribution"], "", false, "#c7c7c7");
  if (report.contains("reference")) add(report["reference"]["distribution"], "reference", true, "#d62728");
  if (!report.at("pooled").is_null()) add(report["pooled"], "pooled", false, "#1f77b4");
  return p;
}

Plot error_plot(const Json& report) {
  Plot p{"Logarithmic error of characteristic sizes", "frame", "error (%)", false, {}};
  if (!report.contains("errors")) return p;
  const std::pair<const char*, const char*> colors[] = {{"P80", "#1f77b4"}, {"P50", "#2ca02c"}, {"P20", "#ff7f0e"}};
  for (const auto& [t, color] : colors) {
    const auto& e = report["errors"]["log_error"][t];
    PlotSeries per{std::string(t) + " frame", {}, {}, true, color};
    PlotSeries avg{std::string(t) + " running mean", {}, {}, false, color};
    for (std::size_t i = 0; i < e["frames"].size(); ++i) {
      per.x.push_back(e["frames"][i].get<double>());
      per.y.push_back(e["per_frame"][i].get<double>());
      avg.x.push_back(e["frames"][i].get<double>());
      avg.y.push_back(e["prefix_average"][i].get<double>());
    }
    p.series.push_back(std::move(per));
    p.series.push_back(std::move(avg));
  }
  return p;
}

Plot required_plot(const Json& report) {
  const std::string target = report.at("stop").at("target");
  Plot p{"Required images (" + target + ")", "frame", "images", false, {}};
  PlotSeries req{"required", {}, {}, false, "#1f77b4"};
  PlotSeries have{"accepted so far", {}, {}, false, "#7f7f7f"};
  int accepted = 0;
  for (const auto& f : report.at("frames")) {
    const double id = f["id"].get<double>();
    if (f["status"] == "accepted") ++accepted;
    have.x.push_back(id);
    have.y.push_back(accepted);
    const auto& r = f["required_after"][target];
    if (!r.is_null()) {
      req.x.push_back(id);
      req.y.push_back(r.get<double>());
    }
  }
  p.series = {req, have};
  return p;
}

Plot comparison_plot(std::span<const ComparisonRow> rows) {
  Plot p{"Percent difference of passing", "size (mm)", "difference (%)", true, {}};
  PlotSeries s{"difference", {}, {}, false, "#9467bd"};
  for (const auto& r : rows)
    if (r.percent_difference) {
      s.x.push_back(r.size_mm);
      s.y.push_back(*r.percent_difference);
    }
  p.series = {s};
  return p;
}

}  // namespace rockfrag
