#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmvad/cli.hpp"
#include "mmvad/errors.hpp"
#include "mmvad/io.hpp"

using namespace mmvad;
using namespace mmvad::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmvad_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mmvad");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kGenerateConfig =
    R"({"N": 12, "K": 2, "M": 4, "T": 5, "model": "jsm2r",
        "prevalent": {"mean": 0, "var": 1}, "anomalous": {"mean": 7, "var": 1}})";

const char* kGridConfig =
    R"({"m_values": [1, 30], "t_values": [1, 20, 40], "k_values": [1],
        "problem": {"N": 40, "model": "jsm2r", "prevalent": {"mean": 0, "var": 1}, "anomalous": {"mean": 7, "var": 1}},
        "detector": {"algorithm": "osga"}, "base_seed": 11})";

}  // namespace

TEST_CASE("generate: shapes, validation, determinism") {
  const auto dir = scratch("generate");
  write_text(dir / "cfg.json", kGenerateConfig);
  auto r = invoke({"generate", "--config", (dir / "cfg.json").string(), "--output-dir", (dir / "a").string(),
                "--seed", "5"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("anomaly_set: ") != std::string::npos);
  const auto signals = read_text(dir / "a" / "signals.csv");
  CHECK(count_lines(signals) == 1 + 12);
  const auto first_row = signals.substr(0, signals.find('\n'));
  CHECK(std::count(first_row.begin(), first_row.end(), ',') == 5);
  const auto sensing = read_sensing_csv(dir / "a" / "sensing.csv");
  CHECK(sensing.n_steps() == 5);
  CHECK(sensing.m_per_step() == 4);
  CHECK(sensing.n_vars() == 12);
  const auto meas = read_measurements_csv(dir / "a" / "measurements.csv");
  CHECK(meas.n_steps() == 5);
  CHECK(meas.m_per_step() == 4);
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(fs::exists(dir / "a" / "anomaly_set.txt"));

  r = invoke({"generate", "--config", (dir / "cfg.json").string(), "--output-dir", (dir / "b").string(), "--seed", "5"});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"signals.csv", "sensing.csv", "measurements.csv", "anomaly_set.txt"})
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));

  auto bad = nlohmann::json::parse(kGenerateConfig);
  bad["model"] = "jsm4r";
  write_text(dir / "bad.json", bad.dump());
  r = invoke({"generate", "--config", (dir / "bad.json").string(), "--output-dir", (dir / "c").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("model") != std::string::npos);

  r = invoke({"generate", "--config", (dir / "missing.json").string(), "--output-dir", (dir / "c").string()});
  CHECK(r.code == kExitIo);
}

TEST_CASE("detect: identity fixture, acie precondition, over-regularized lasso") {
  const auto dir = scratch("detect");
  SensingSequence phi;
  phi.steps.push_back(Matrix::Identity(3, 3));
  MeasurementSet y;
  y.steps.push_back(Vector::Zero(3));
  y.steps[0](1) = 5.0;
  {
    std::ofstream s(dir / "sensing.csv");
    write_sensing_csv(s, phi);
    std::ofstream m(dir / "measurements.csv");
    write_measurements_csv(m, y);
  }
  const std::vector<std::string> data = {"--sensing", (dir / "sensing.csv").string(), "--measurements",
                                         (dir / "measurements.csv").string()};
  auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), data.begin(), data.end());
    return invoke(args);
  };

  auto r = with({"detect", "--algorithm", "osga", "-k", "1"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("estimated_set: 2\n") != std::string::npos);

  r = with({"detect", "--algorithm", "acie", "-k", "3"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("k < M") != std::string::npos);

  r = with({"detect", "--algorithm", "lasso", "-k", "1", "--lambda", "1e9"});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("AllZeroSolution") != std::string::npos);
  CHECK(r.out.find("flag.all_zero_solution: true") != std::string::npos);

  r = with({"detect", "--algorithm", "omp", "-k", "1"});
  CHECK(r.code == kExitUsage);

  r = invoke({"detect", "--algorithm", "osga", "-k", "1", "--sensing", (dir / "nope.csv").string(), "--measurements",
           (dir / "measurements.csv").string()});
  CHECK(r.code == kExitIo);

  write_text(dir / "cfg.json", kGenerateConfig);
  const auto a = invoke({"detect", "--algorithm", "tecc", "-k", "2", "--config", (dir / "cfg.json").string(), "--seed", "3"});
  const auto b = invoke({"detect", "--algorithm", "tecc", "-k", "2", "--config", (dir / "cfg.json").string(), "--seed", "3"});
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.find("true_set: ") != std::string::npos);
}

TEST_CASE("phase: rows, heatmap orientation, thread independence") {
  const auto dir = scratch("phase");
  write_text(dir / "grid.json", kGridConfig);
  auto r1 = invoke({"phase", "--config", (dir / "grid.json").string(), "--output-dir", (dir / "t1").string(),
                 "--threads", "1"});
  REQUIRE(r1.code == kExitOk);
  auto r8 = invoke({"phase", "--config", (dir / "grid.json").string(), "--output-dir", (dir / "t8").string(),
                 "--threads", "8"});
  REQUIRE(r8.code == kExitOk);
  const auto csv = read_text(dir / "t1" / "results_K1.csv");
  CHECK(count_lines(csv) == 1 + 2 * 3);
  CHECK(csv == read_text(dir / "t8" / "results_K1.csv"));
  CHECK(fs::exists(dir / "t1" / "results_K1.json"));
  CHECK_FALSE(fs::exists(dir / "t1" / "cells.partial.jsonl"));

  const auto ppm = read_text(dir / "t1" / "heatmap_osga_K1.ppm");
  CHECK(ppm.find("Jeffreys interval is narrower than 0.1") != std::string::npos);
  const Image img = decode_ppm(ppm);
  CHECK(img.width == 3 * 8);
  CHECK(img.height == 2 * 8);
  auto lum = [](const Rgb& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; };
  // bottom-right cell is the largest (M, T); top-left the smallest
  CHECK(lum(img.at(img.width - 1, img.height - 1)) > lum(img.at(0, 0)));

  // rerun from the manifest reproduces the CSV
  auto again = invoke({"phase", "--config", (dir / "t1" / "manifest.json").string(), "--output-dir",
                    (dir / "rerun").string()});
  REQUIRE(again.code == kExitOk);
  CHECK(read_text(dir / "rerun" / "results_K1.csv") == csv);

  auto bad = nlohmann::json::parse(kGridConfig);
  bad["detector"]["algorithm"] = "nope";
  write_text(dir / "bad.json", bad.dump());
  CHECK(invoke({"phase", "--config", (dir / "bad.json").string(), "--output-dir", (dir / "x").string()}).code ==
        kExitUsage);
}

TEST_CASE("phase: resumes from the partial log of an interrupted run") {
  const auto dir = scratch("resume");
  write_text(dir / "grid.json", kGridConfig);
  const GridSpec grid = grid_spec_from_json(nlohmann::json::parse(kGridConfig));
  fs::create_directories(dir / "out");
  // A sentinel cell no real run would produce, then a torn line.
  const nlohmann::json cell = {{"m", 1},        {"t", 1},           {"k", 1},       {"successes", 7},
                               {"trials", 13},  {"rate", 7.0 / 13}, {"ci_low", 0.3}, {"ci_high", 0.75},
                               {"hit_max_trials", true}, {"wall_time_seconds", 0.0}, {"detector_errors", 0},
                               {"flagged_trials", 0},    {"first_error", ""}};
  write_text(dir / "out" / "cells.partial.jsonl", to_json(grid).dump() + "\n" + cell.dump() + "\n{\"m\": 3");
  const auto r = invoke({"phase", "--config", (dir / "grid.json").string(), "--output-dir", (dir / "out").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("resuming: 1 cells already done") != std::string::npos);
  const auto csv = read_text(dir / "out" / "results_K1.csv");
  CHECK(csv.find("osga,jsm2r,40,1,1,1,7,13,") != std::string::npos);
  CHECK(count_lines(csv) == 7);
}

TEST_CASE("theory: closed forms, verdicts, exit codes") {
  auto r = invoke({"theory", "--N", "100", "--K", "5", "--M", "10", "--mu2", "7", "--sigma2", "1", "--sigma1", "1"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("prevalent_expectation: 3560\n") != std::string::npos);
  CHECK(r.out.find("anomalous_expectation: 8950\n") != std::string::npos);
  CHECK(r.out.find("difference: 5390\n") != std::string::npos);
  CHECK(r.out.find("closed_form_difference: 5390\n") != std::string::npos);
  CHECK(r.out.find("separation_hypothesis: true") != std::string::npos);

  r = invoke({"theory", "--model", "jsm3r", "--sigma2", "1", "--sigma1", "1"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("separation_hypothesis: false") != std::string::npos);

  CHECK(invoke({"theory", "--K", "0"}).code == kExitUsage);
  CHECK(invoke({"theory", "--sigma1", "-2"}).code == kExitUsage);
  CHECK(invoke({"theory", "--model", "jsm9"}).code == kExitUsage);
  CHECK(invoke({"bogus"}).code == kExitUsage);
  CHECK(invoke({}).code == kExitUsage);
}

TEST_CASE("heatmap: colormap is monotone in luminance; ppm round trip") {
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const Rgb c = colormap(i / 100.0);
    const double l = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
    CHECK(l >= prev);
    prev = l;
  }
  const Rgb lo = colormap(-3.0), hi = colormap(7.0);
  CHECK(lo.b == colormap(0.0).b);
  CHECK(hi.r == colormap(1.0).r);

  Image img;
  img.width = 3;
  img.height = 2;
  for (int i = 0; i < 6; ++i) img.pixels.push_back(colormap(i / 5.0));
  const Image back = decode_ppm(encode_ppm(img, {"a caption", "second line"}));
  REQUIRE(back.width == 3);
  REQUIRE(back.height == 2);
  for (int i = 0; i < 6; ++i) CHECK(back.pixels[i].g == img.pixels[i].g);
}
