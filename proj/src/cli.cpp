#include "rockfrag/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "rockfrag/config.hpp"
#include "rockfrag/error.hpp"
#include "rockfrag/mission.hpp"
#include "rockfrag/pgm.hpp"
#include "rockfrag/report.hpp"
#include "rockfrag/segmentation.hpp"
#include "rockfrag/sieve_csv.hpp"
#include "rockfrag/svg.hpp"
#include "rockfrag/synthpile.hpp"

namespace fs = std::filesystem;

namespace rockfrag::cli {
namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path prepare_output(const Config& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".png";
}

const char* calibration_name(CalibrationSource s) {
  return s == CalibrationSource::ScaleObject ? "scale-object" : "altitude-model";
}

struct PreparedFrame {
  GrayImage image;
  RegionMask mask;
  ScaleCalibration calib;
  std::string calibration;
};

std::vector<PixelPolygon> read_exclusions(const std::string& path) {
  if (path.empty()) return {};
  const auto j = read_json(fs::path(path));
  std::vector<PixelPolygon> out;
  try {
    for (const auto& poly : j) {
      PixelPolygon p;
      for (const auto& pt : poly) p.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
      if (p.size() < 3) throw InputError(path + ": polygon with fewer than 3 points");
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": expected a list of [x, y] point lists: " + e.what());
  }
  return out;
}

/// Calibration for images without a scene model, in order: fixed value,
/// supplied object length, detected scale object, altitude model.
PreparedFrame prepare_image(GrayImage image, const Config& cfg, const std::string& name,
                            std::vector<PixelPolygon> exclusions) {
  PreparedFrame f;
  const auto scale = find_scale_object(image);
  if (scale) exclusions.push_back(scale->outline);
  if (cfg.mm_per_pixel) {
    f.calib = {*cfg.mm_per_pixel, CalibrationSource::ScaleObject};
    f.calibration = "fixed";
  } else if (cfg.scale_object_px) {
    f.calib = calibrate_scale(*cfg.scale_object_px, cfg.scale_object_mm);
    f.calibration = "scale-object";
  } else if (scale) {
    f.calib = calibrate_scale(scale->length_px, cfg.scale_object_mm);
    f.calibration = "scale-object";
  } else if (cfg.altitude_m) {
    f.calib = calibrate_from_altitude(*cfg.altitude_m, cfg.fov_deg, image.width());
    f.calibration = "altitude-model";
  } else {
    throw InputError(name + ": calibration missing (no scale object found; set mm_per_pixel, scale_object_px or altitude_m)");
  }
  f.mask = mask_non_rock(image, exclusions);
  f.image = std::move(image);
  return f;
}

struct MissionRun {
  MissionState state;
  std::vector<FrameMeta> meta;
  StopSummary stop;
};

void ingest(MissionRun& run, PreparedFrame frame, const std::string& source, const Config& cfg,
            bool early_stop, std::ostream& out) {
  const auto mc = cfg.mission();
  const auto& r = ingest_frame(run.state, frame.image, frame.calib, mc, &frame.mask);
  run.meta.push_back({source, frame.calibration});
  const auto d = should_stop(run.state, mc.stopping);
  out << "frame " << r.frame_id << " " << source << ": " << to_string(r.status);
  if (!r.distribution.empty())
    out << "  P80 " << fixed(r.sizes.p80, 2) << "  P50 " << fixed(r.sizes.p50, 2) << "  P20 "
        << fixed(r.sizes.p20, 2);
  if (d.required) out << "  required " << *d.required;
  out << "\n";
  if (d.stop && !run.stop.stopped_at) run.stop.stopped_at = r.frame_id;
  run.stop.early_stop = early_stop;
}

void finish(MissionRun& run, const Config& cfg) {
  run.stop.final_decision = should_stop(run.state, cfg.stopping());
}

void print_pooled(const Json& report, std::ostream& out) {
  const auto& p = report["pooled"];
  if (p.is_null() || p["characteristic"].is_null()) {
    out << "pooled: no accepted frames\n";
    return;
  }
  const auto& c = p["characteristic"];
  out << "pooled P80 " << fixed(c["p80"], 2) << " mm  P50 " << fixed(c["p50"], 2) << " mm  P20 "
      << fixed(c["p20"], 2) << " mm\n";
  if (report.contains("errors") && report["errors"].contains("pooled_log_error")) {
    const auto& e = report["errors"]["pooled_log_error"];
    out << "log error  P80 " << fixed(e["P80"], 2) << " %  P50 " << fixed(e["P50"], 2) << " %  P20 "
        << fixed(e["P20"], 2) << " %\n";
  }
  const auto& s = report["stop"];
  out << "stop: " << s["decision"].get<std::string>() << " (" << s["target"].get<std::string>() << ", required ";
  if (s["required"].is_null()) out << "n/a";
  else out << s["required"].get<int>();
  out << ", accepted " << s["accepted"].get<int>() << ")\n";
}

void write_mission_outputs(const fs::path& dir, const std::string& stem, const Json& report) {
  write_json(dir / (stem + ".json"), report);
  write_text(dir / (stem + "_distribution.svg"), render_svg(distribution_plot(report)));
  write_text(dir / (stem + "_required.svg"), render_svg(required_plot(report)));
  if (report.contains("errors")) write_text(dir / (stem + "_errors.svg"), render_svg(error_plot(report)));
}

std::optional<Reference> sieve_reference(const std::string& path, const Config& cfg) {
  if (path.empty()) return std::nullopt;
  const auto dist = sieve_to_distribution(read_sieve_csv(fs::path(path)));
  return Reference{fs::path(path).filename().string(), dist, estimate_characteristic_sizes(dist, cfg.method)};
}

int cmd_fit(const std::string& csv, const Config& cfg, std::ostream& out) {
  const auto dist = sieve_to_distribution(read_sieve_csv(fs::path(csv)));
  const auto fit = swebrec::fit(dist);
  out << "x_max " << fixed(fit.params.x_max, 4) << " mm\n"
      << "x_50  " << fixed(fit.params.x_50, 4) << " mm\n"
      << "b     " << fixed(fit.params.b, 4) << "\n"
      << "residual RMS " << fixed(100.0 * fit.residual_rms, 3) << " % passing\n";
  if (!fit.converged) throw AnalysisError("fit did not converge after " + std::to_string(fit.iterations) + " iterations");
  const auto dir = prepare_output(cfg);
  write_json(dir / "fit.json", fit_report(fs::path(csv).filename().string(), dist, fit));
  write_text(dir / "fit.svg", render_svg(fit_plot(dist, fit)));
  return kExitOk;
}

int cmd_analyze(const std::vector<std::string>& images, const std::string& reference,
                const std::string& exclusions, const Config& cfg, std::ostream& out) {
  if (images.empty()) throw InputError("analyze: no images given");
  auto c = cfg;
  c.outlier_filter = false;  // batch mode: the analyst curates the set
  const auto polys = read_exclusions(exclusions);
  MissionRun run;
  for (const auto& path : images) {
    const auto name = fs::path(path).filename().string();
    ingest(run, prepare_image(read_image(fs::path(path)), c, name, polys), name, c, false, out);
  }
  finish(run, c);
  const auto report = mission_report("analyze", run.state, c, run.meta, sieve_reference(reference, c), run.stop);
  print_pooled(report, out);
  write_mission_outputs(prepare_output(c), "analyze", report);
  return kExitOk;
}

PileSpec parse_pile_spec(const Json& j) {
  try {
    PileSpec s;
    const auto& t = j.at("truth");
    s.truth = {t.at("x_max").get<double>(), t.at("x_50").get<double>(), t.at("b").get<double>()};
    const auto& f = j.at("footprint");
    s.footprint = {f.at("width_m").get<double>(), f.at("depth_m").get<double>()};
    s.packing_fraction = j.value("packing_fraction", s.packing_fraction);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("pile spec: ") + e.what());
  }
}

int cmd_mission_scene(const std::string& spec_path, const Config& cfg, bool early_stop, bool emit,
                      std::ostream& out) {
  const auto spec = parse_pile_spec(read_json(fs::path(spec_path)));
  const auto layout = generate_pile(spec);
  const auto camera = cfg.camera();
  const auto plan = plan_flight(layout.footprint, camera, cfg.overlap, cfg.altitudes);
  const auto dir = prepare_output(cfg);
  out << "pile: " << layout.discs.size() << " particles, packing " << fixed(layout.achieved_packing) << ", "
      << plan.waypoints.size() << " waypoints\n";
  if (emit) {
    fs::create_directories(dir / "frames");
    write_text(dir / "layout.json", layout_to_json(layout));
    write_plan_csv(dir / "plan.csv", plan);
  }
  const auto gt = ground_truth_distribution(layout);
  const Reference ref{"ground-truth", gt, estimate_characteristic_sizes(gt, cfg.method)};

  MissionRun run;
  for (std::size_t i = 0; i < plan.waypoints.size(); ++i) {
    const auto& wp = plan.waypoints[i];
    PreparedFrame f;
    f.image = render_frame(layout, camera, wp);
    std::vector<PixelPolygon> exclusions;
    if (auto poly = scale_object_polygon(layout, camera, wp)) exclusions.push_back(*poly);
    f.mask = mask_non_rock(f.image, exclusions);
    if (auto len = scale_object_length_px(layout, camera, wp))
      f.calib = calibrate_scale(*len, cfg.scale_object_mm);
    else
      f.calib = calibrate_from_altitude(wp.altitude_m, camera.fov_deg, camera.image_width);
    f.calibration = calibration_name(f.calib.source);
    std::ostringstream name;
    name << "frame_" << std::setw(3) << std::setfill('0') << (i + 1) << ".pgm";
    if (emit) write_pgm(dir / "frames" / name.str(), f.image);
    ingest(run, std::move(f), name.str(), cfg, early_stop, out);
    if (early_stop && run.stop.stopped_at) break;
  }
  finish(run, cfg);
  const auto report = mission_report("mission", run.state, cfg, run.meta, ref, run.stop);
  print_pooled(report, out);
  write_mission_outputs(dir, "mission", report);
  return kExitOk;
}

int cmd_mission_stream(const std::string& stream_dir, const std::string& reference,
                       const std::string& exclusions, const Config& cfg, bool early_stop, std::ostream& out) {
  if (!fs::is_directory(stream_dir)) throw InputError("stream directory not found: " + stream_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(stream_dir))
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (files.empty()) throw InputError("stream is empty: " + stream_dir);
  const auto polys = read_exclusions(exclusions);
  MissionRun run;
  for (const auto& p : files) {
    const auto name = p.filename().string();
    ingest(run, prepare_image(read_image(p), cfg, name, polys), name, cfg, early_stop, out);
    if (early_stop && run.stop.stopped_at) break;
  }
  finish(run, cfg);
  const auto report = mission_report("mission", run.state, cfg, run.meta, sieve_reference(reference, cfg), run.stop);
  print_pooled(report, out);
  write_mission_outputs(prepare_output(cfg), "mission", report);
  return kExitOk;
}

int cmd_compare(const std::string& a, const std::string& b, const Config& cfg, std::ostream& out) {
  const auto rows = compare_reports(read_json(fs::path(a)), read_json(fs::path(b)));
  out << "size_mm  passing_a  passing_b  difference_%\n";
  for (const auto& r : rows) {
    out << std::setw(7) << fixed(r.size_mm, 2) << "  " << std::setw(9) << fixed(100.0 * r.passing_a, 2) << "  "
        << std::setw(9) << fixed(100.0 * r.passing_b, 2) << "  "
        << (r.percent_difference ? fixed(*r.percent_difference, 2) : std::string("n/a")) << "\n";
  }
  const auto dir = prepare_output(cfg);
  write_json(dir / "compare.json", comparison_json(rows));
  write_text(dir / "compare.svg", render_svg(comparison_plot(rows)));
  return kExitOk;
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rock fragment size distribution from image sequences"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (default: $ROCKFRAG_CONFIG)");
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> override_opts;
  for (const auto& key : Config::keys())
    override_opts[key] = app.add_option(flag_name(key), overrides[key], "config key " + key);

  auto* fit = app.add_subcommand("fit", "Fit a Swebrec curve to sieve data");
  std::string sieve;
  fit->add_option("sieve_csv", sieve, "mesh_mm,mass_kg CSV")->required();

  auto* analyze = app.add_subcommand("analyze", "Batch analysis of a set of images");
  std::vector<std::string> images;
  std::string reference;
  analyze->add_option("images", images, "PGM or PNG images")->required();
  analyze->add_option("--reference", reference, "sieve CSV to measure errors against");
  std::string exclusions;
  analyze->add_option("--exclusions", exclusions, "JSON list of pixel polygons to mask out");

  auto* mission = app.add_subcommand("mission", "Streaming mission over a simulated pile or an image directory");
  std::string pile, stream, mission_ref;
  bool no_early_stop = false, emit = false;
  auto* pile_opt = mission->add_option("--pile", pile, "pile spec JSON (simulated survey)");
  auto* stream_opt = mission->add_option("--stream", stream, "directory of frames, read in filename order");
  pile_opt->excludes(stream_opt);
  mission->add_option("--reference", mission_ref, "sieve CSV reference for stream mode");
  mission->add_option("--exclusions", exclusions, "JSON list of pixel polygons to mask out (stream mode)");
  mission->add_flag("--no-early-stop", no_early_stop, "ingest every frame even after the stop rule fires");
  mission->add_flag("--emit-frames", emit, "write rendered frames, plan and layout (simulated survey)");

  auto* compare = app.add_subcommand("compare", "Percent difference between the pooled curves of two reports");
  std::string report_a, report_b;
  compare->add_option("report_a", report_a, "reference (manual) report")->required();
  compare->add_option("report_b", report_b, "report to compare")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    else if (auto env = config_path_from_env()) cfg = load_config(*env);
    for (const auto& key : Config::keys())
      if (override_opts[key]->count() > 0) cfg.set(key, overrides[key]);
    cfg.validate();

    if (fit->parsed()) return cmd_fit(sieve, cfg, out);
    if (analyze->parsed()) return cmd_analyze(images, reference, exclusions, cfg, out);
    if (mission->parsed()) {
      if (!pile.empty()) {
        if (!mission_ref.empty()) throw InputError("mission: --reference applies to stream mode only");
        return cmd_mission_scene(pile, cfg, !no_early_stop, emit, out);
      }
      if (!stream.empty()) return cmd_mission_stream(stream, mission_ref, exclusions, cfg, !no_early_stop, out);
      throw InputError("mission: one of --pile or --stream is required");
    }
    if (compare->parsed()) return cmd_compare(report_a, report_b, cfg, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const AnalysisError& e) {
    err << "analysis failed: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const std::exception& e) {
    err << "analysis failed: " << e.what() << "\n";
    return kExitAnalysis;
  }
  return kExitInput;
}

}  // namespace rockfrag::cli
