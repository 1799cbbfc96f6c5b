#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rockfrag/cli.hpp"
#include "rockfrag/config.hpp"
#include "rockfrag/error.hpp"
#include "rockfrag/pgm.hpp"
#include "rockfrag/swebrec.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace rockfrag;
using Json = nlohmann::ordered_json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "rockfrag");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rockfrag_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string data(const std::string& name) { return std::string(ROCKFRAG_TEST_DATA) + "/" + name; }

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json load(const fs::path& p) { return Json::parse(slurp(p)); }

/// Frames of sparse discs at 0.5 mm/px.
std::vector<std::string> disc_frames(const fs::path& dir, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> paths;
  for (int i = 0; i < count; ++i) {
    testing::DeskScene scene(320, 240, 0.5);
    for (const auto& d : testing::sparse_discs(rng, 320, 240, 12, 8.0, 30.0)) scene.add_disc(d.cx, d.cy, d.r);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%02d.pgm", i);
    write_pgm(dir / name, scene.render());
    paths.push_back((dir / name).string());
  }
  return paths;
}

Json pooled_report(std::vector<double> sizes, std::vector<double> passing) {
  Json j;
  j["schema"] = 1;
  j["pooled"] = {{"sizes", sizes}, {"passing", passing}};
  return j;
}

}  // namespace

TEST_CASE("fit on the reference sieve data") {
  const auto dir = scratch("fit");
  const auto r = run({"fit", data("reference_sieve.csv"), "--output-dir", dir.string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("x_max 27.5") != std::string::npos);
  const auto j = load(dir / "fit.json");
  CHECK(j["schema"] == 1);
  CHECK(std::abs(j["params"]["x_max"].get<double>() - 27.53) < 0.5);
  CHECK(std::abs(j["params"]["x_50"].get<double>() - 17.84) < 0.3);
  CHECK(std::abs(j["params"]["b"].get<double>() - 2.79) < 0.2);
  const auto svg = slurp(dir / "fit.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("href") == std::string::npos);
}

TEST_CASE("fit input errors") {
  const auto dir = scratch("fit_errors");
  write_file(dir / "two.csv", "mesh_mm,mass_kg\n4,1\n8,2\n");
  const auto two = run({"fit", (dir / "two.csv").string(), "--output-dir", dir.string()});
  CHECK(two.code == cli::kExitInput);

  write_file(dir / "bad.csv", "mesh_mm,mass_kg\n4,1\n8,abc\n16,2\n");
  const auto bad = run({"fit", (dir / "bad.csv").string(), "--output-dir", dir.string()});
  CHECK(bad.code == cli::kExitInput);
  CHECK(bad.err.find(":3:") != std::string::npos);

  CHECK(run({"fit", (dir / "missing.csv").string(), "--output-dir", dir.string()}).code == cli::kExitInput);
}

TEST_CASE("fit recovers the parameters behind a synthetic sieve") {
  const SwebrecParams truth{50.0, 20.0, 2.0};
  const std::vector<double> meshes{2, 4, 8, 12, 16, 20, 25, 32, 40, 63};
  std::ostringstream csv;
  csv << "mesh_mm,mass_kg\n";
  csv.precision(17);
  csv << "FINES," << 100.0 * swebrec::evaluate(truth, meshes.front()) << "\n";
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const double upper = i + 1 < meshes.size() ? swebrec::evaluate(truth, meshes[i + 1]) : 1.0;
    csv << meshes[i] << "," << 100.0 * (upper - swebrec::evaluate(truth, meshes[i])) << "\n";
  }
  const auto dir = scratch("fit_synthetic");
  write_file(dir / "synthetic.csv", csv.str());
  REQUIRE(run({"fit", (dir / "synthetic.csv").string(), "--output-dir", dir.string()}).code == 0);
  const auto p = load(dir / "fit.json")["params"];
  CHECK(p["x_max"].get<double>() == doctest::Approx(truth.x_max).epsilon(1e-3));
  CHECK(p["x_50"].get<double>() == doctest::Approx(truth.x_50).epsilon(1e-3));
  CHECK(p["b"].get<double>() == doctest::Approx(truth.b).epsilon(1e-3));
}

TEST_CASE("analyze a single disc") {
  const auto dir = scratch("single");
  testing::DeskScene scene(200, 200, 0.5);
  scene.add_disc(100, 100, 40);  // 40 mm
  write_pgm(dir / "disc.pgm", scene.render());
  const auto r = run({"analyze", (dir / "disc.pgm").string(), "--mm-per-pixel", "0.5", "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = load(dir / "analyze.json");
  const auto& frame = j["frames"][0];
  CHECK(frame["particles"] == 1);
  CHECK(frame["status"] == "accepted");
  // the tabulated curve is a step between the grid knots that bracket 40 mm
  const auto sizes = j["pooled"]["sizes"].get<std::vector<double>>();
  const auto passing = j["pooled"]["passing"].get<std::vector<double>>();
  double below = 0.0, above = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (passing[i] == 0.0) below = sizes[i];
    if (passing[i] == 1.0 && above == 0.0) above = sizes[i];
  }
  CHECK(below < 40.0);
  CHECK(above >= 39.5);
  const double p50 = j["pooled"]["characteristic"]["p50"].get<double>();
  CHECK(p50 > below);
  CHECK(p50 <= above);
  for (const char* f : {"analyze_distribution.svg", "analyze_required.svg"}) CHECK(fs::exists(dir / f));
  CHECK_FALSE(fs::exists(dir / "analyze_errors.svg"));
}

TEST_CASE("analyze needs a calibration") {
  const auto dir = scratch("uncalibrated");
  const auto frames = disc_frames(dir, 1, 3);
  CHECK(run({"analyze", frames[0], "--output-dir", dir.string()}).code == cli::kExitInput);
  CHECK(run({"analyze", (dir / "nope.pgm").string(), "--mm-per-pixel", "0.5", "--output-dir", dir.string()}).code ==
        cli::kExitInput);
}

TEST_CASE("analyze with a reference gives one prefix entry per image") {
  const auto dir = scratch("ten");
  auto args = disc_frames(dir, 10, 11);
  args.insert(args.begin(), "analyze");
  for (const std::string& a : std::vector<std::string>{"--reference", data("reference_sieve.csv"), "--mm-per-pixel", "0.5", "--output-dir", dir.string()})
    args.push_back(a);
  REQUIRE(run(args).code == 0);
  const auto j = load(dir / "analyze.json");
  CHECK(j["frames"].size() == 10);
  for (const char* t : {"P80", "P50", "P20"}) CHECK(j["errors"]["log_error"][t]["prefix_average"].size() == 10);
  CHECK(fs::exists(dir / "analyze_errors.svg"));
}

TEST_CASE("duplicated images keep the pooled curve but repeat the error series") {
  const auto dir = scratch("twice");
  const auto frames = disc_frames(dir, 3, 21);
  auto once = std::vector<std::string>{"analyze"};
  once.insert(once.end(), frames.begin(), frames.end());
  auto twice = once;
  twice.insert(twice.end(), frames.begin(), frames.end());
  for (auto* a : {&once, &twice})
    for (const std::string& s : std::vector<std::string>{"--reference", data("reference_sieve.csv"), "--mm-per-pixel", "0.5", "--output-dir"})
      a->push_back(s);
  once.push_back((dir / "once").string());
  twice.push_back((dir / "twice").string());
  REQUIRE(run(once).code == 0);
  REQUIRE(run(twice).code == 0);
  const auto a = load(dir / "once" / "analyze.json"), b = load(dir / "twice" / "analyze.json");
  CHECK(a["pooled"]["sizes"] == b["pooled"]["sizes"]);
  // same population counted twice; only the summation order differs
  const auto qa = a["pooled"]["passing"].get<std::vector<double>>();
  const auto qb = b["pooled"]["passing"].get<std::vector<double>>();
  REQUIRE(qa.size() == qb.size());
  for (std::size_t i = 0; i < qa.size(); ++i) CHECK(qb[i] == doctest::Approx(qa[i]).epsilon(1e-12));
  const auto& pa = a["errors"]["log_error"]["P80"]["per_frame"];
  const auto& pb = b["errors"]["log_error"]["P80"]["per_frame"];
  REQUIRE(pb.size() == 2 * pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pb[i] == pa[i]);
    CHECK(pb[i + pa.size()] == pa[i]);
  }
}

TEST_CASE("identical frames stop at the minimum frame count") {
  const auto dir = scratch("zero_variance");
  const auto stream = dir / "stream";
  fs::create_directories(stream);
  const auto one = disc_frames(dir, 1, 5);
  for (int i = 0; i < 6; ++i) fs::copy_file(one[0], stream / ("f" + std::to_string(i) + ".pgm"));
  const auto r = run({"mission", "--stream", stream.string(), "--mm-per-pixel", "0.5", "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = load(dir / "mission.json");
  CHECK(j["stop"]["decision"] == "stop");
  CHECK(j["stop"]["stopped_at"] == 2);
  CHECK(j["frames"].size() == 2);
}

TEST_CASE("mission over a simulated pile") {
  const auto dir = scratch("pile");
  write_file(dir / "pile.json",
             R"({"truth":{"x_max":27.53,"x_50":17.84,"b":2.79},"footprint":{"width_m":0.6,"depth_m":0.55},)"
             R"("packing_fraction":0.5,"seed":1})");
  const auto r = run({"mission", "--pile", (dir / "pile.json").string(), "--altitudes", "0.6,1.3", "--no-early-stop",
                      "--emit-frames", "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = load(dir / "mission.json");
  CHECK(j["frames"].size() == 16);
  CHECK(j["stop"].contains("decision"));
  const double p50 = j["pooled"]["characteristic"]["p50"].get<double>();
  const double truth = j["reference"]["characteristic"]["p50"].get<double>();
  CHECK(std::abs(p50 / truth - 1.0) <= 0.15);
  CHECK(fs::exists(dir / "frames" / "frame_001.pgm"));
  CHECK(fs::exists(dir / "plan.csv"));
  CHECK(fs::exists(dir / "layout.json"));
  CHECK(fs::exists(dir / "mission_required.svg"));
}

TEST_CASE("mission input errors") {
  const auto dir = scratch("mission_errors");
  fs::create_directories(dir / "empty");
  CHECK(run({"mission", "--stream", (dir / "empty").string(), "--mm-per-pixel", "0.5", "--output-dir",
             dir.string()}).code == cli::kExitInput);
  CHECK(run({"mission", "--stream", (dir / "empty").string(), "--alpha", "0.8", "--power", "0.8", "--output-dir",
             dir.string()}).code == cli::kExitInput);
  write_file(dir / "bad.json", R"({"truth":{"x_max":10,"x_50":20,"b":2}})");
  CHECK(run({"mission", "--pile", (dir / "bad.json").string(), "--output-dir", dir.string()}).code ==
        cli::kExitInput);
}

TEST_CASE("compare reports") {
  const auto dir = scratch("compare");
  write_file(dir / "a.json", pooled_report({10.0, 20.0, 40.0}, {0.2, 0.5, 1.0}).dump());
  write_file(dir / "b.json", pooled_report({10.0, 20.0, 40.0}, {0.2, 0.53, 1.0}).dump());
  write_file(dir / "far.json", pooled_report({100.0, 200.0}, {0.2, 1.0}).dump());
  write_file(dir / "none.json", R"({"schema":1})");

  REQUIRE(run({"compare", (dir / "a.json").string(), (dir / "a.json").string(), "--output-dir", dir.string()}).code ==
          0);
  const auto self = load(dir / "compare.json");
  for (const auto& row : self["rows"]) CHECK(row["percent_difference"].get<double>() == 0.0);

  REQUIRE(run({"compare", (dir / "a.json").string(), (dir / "b.json").string(), "--output-dir", dir.string()}).code ==
          0);
  bool seen = false;
  const auto shifted = load(dir / "compare.json");
  for (const auto& row : shifted["rows"])
    if (row["size_mm"] == 20.0) {
      CHECK(row["percent_difference"].get<double>() == doctest::Approx(6.0));
      seen = true;
    }
  CHECK(seen);
  CHECK(fs::exists(dir / "compare.svg"));

  CHECK(run({"compare", (dir / "a.json").string(), (dir / "far.json").string(), "--output-dir", dir.string()}).code ==
        cli::kExitInput);
  CHECK(run({"compare", (dir / "a.json").string(), (dir / "none.json").string(), "--output-dir", dir.string()}).code ==
        cli::kExitInput);
}

TEST_CASE("reports are byte-identical across runs") {
  const auto dir = scratch("deterministic");
  auto args = disc_frames(dir, 4, 31);
  args.insert(args.begin(), "analyze");
  for (const std::string& a : std::vector<std::string>{"--reference", data("reference_sieve.csv"), "--mm-per-pixel", "0.5", "--output-dir"})
    args.push_back(a);
  auto first = args, second = args;
  first.push_back((dir / "a").string());
  second.push_back((dir / "b").string());
  REQUIRE(run(first).code == 0);
  REQUIRE(run(second).code == 0);
  CHECK(slurp(dir / "a" / "analyze.json") == slurp(dir / "b" / "analyze.json"));
  CHECK(slurp(dir / "a" / "analyze_distribution.svg") == slurp(dir / "b" / "analyze_distribution.svg"));
}

TEST_CASE("config file, environment and flags") {
  const Config defaults;
  CHECK(defaults.scale_object_mm == 60.0);
  CHECK(defaults.fines_factor == 0.0);
  CHECK(defaults.alpha == 0.05);
  CHECK(defaults.power == 0.80);
  CHECK(defaults.effect_fraction == 0.20);
  CHECK(defaults.overlap == 0.5);

  const auto round = parse_config(defaults.to_text());
  CHECK(round.to_text() == defaults.to_text());

  const auto c = parse_config("# comment\nalpha = 0.1\naltitudes = 0.5, 1.5\nmm_per_pixel = 0.25\n");
  CHECK(c.alpha == 0.1);
  CHECK(c.altitudes == std::vector<double>{0.5, 1.5});
  CHECK(*c.mm_per_pixel == 0.25);
  CHECK_THROWS_AS(parse_config("no_such_key = 1\n"), InputError);
  try {
    parse_config("alpha = 0.1\nbogus = 2\n", {}, "x.cfg");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("x.cfg:2") != std::string::npos);
  }

  const auto dir = scratch("config");
  write_file(dir / "run.cfg", "mm_per_pixel = 0.5\nmethod = interpolation\n");
  const auto frames = disc_frames(dir, 1, 41);
  ::setenv(kConfigEnvVar, (dir / "run.cfg").string().c_str(), 1);
  const auto env_run = run({"analyze", frames[0], "--output-dir", (dir / "env").string()});
  ::unsetenv(kConfigEnvVar);
  REQUIRE(env_run.code == 0);
  CHECK(load(dir / "env" / "analyze.json")["config"]["method"] == "interpolation");

  const auto flag_run = run({"analyze", frames[0], "--config", (dir / "run.cfg").string(), "--method", "swebrec",
                             "--output-dir", (dir / "flag").string()});
  REQUIRE(flag_run.code == 0);
  CHECK(load(dir / "flag" / "analyze.json")["config"]["method"] == "swebrec");

  write_file(dir / "bad.cfg", "frobnicate = 1\n");
  CHECK(run({"analyze", frames[0], "--config", (dir / "bad.cfg").string()}).code == cli::kExitInput);
  CHECK(run({"bogus-verb"}).code == cli::kExitInput);
}
