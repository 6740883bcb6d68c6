#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmvad/experiment.hpp"

namespace mmvad::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;     // bad config, bad flags, violated preconditions
inline constexpr int kExitRuntime = 2;   // detector failure or warning (all-zero LASSO, non-convergence)
inline constexpr int kExitIo = 3;

struct GenerateOptions {
  std::filesystem::path config;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
};

/// Config: problem keys (N, K, model, prevalent, anomalous, optional
/// anomaly_set) plus M and T. Writes signals.csv, sensing.csv,
/// measurements.csv, anomaly_set.txt and manifest.json.
int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err);

struct DetectOptions {
  std::string algorithm = "osga";
  std::string inner = "osga";
  int k = 1;
  std::optional<double> lambda;
  int acie_iterations = 5;
  bool acie_reestimate = false;
  // Either both data files, or a generate-style config drawn with `seed`.
  std::optional<std::filesystem::path> sensing;
  std::optional<std::filesystem::path> measurements;
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 0;
};

/// Prints the estimated set (1-based), scores and diagnostics.
int cmd_detect(const DetectOptions& options, std::ostream& out, std::ostream& err);

struct PhaseOptions {
  std::filesystem::path config;  // grid config, or a manifest written by a previous run
  std::filesystem::path output_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed;  // overrides base_seed
  int heatmap_scale = 8;              // pixels per cell side
};

/// Runs the grid and writes, per K: results_K<k>.csv, results_K<k>.json
/// and heatmap_<algorithm>_K<k>.ppm, plus manifest.json. Completed cells
/// are appended to cells.partial.jsonl as they finish; a rerun with the
/// same config resumes from that file.
int cmd_phase(const PhaseOptions& options, std::ostream& out, std::ostream& err);

struct TheoryOptions {
  int n = 100;
  int k = 5;
  int m = 10;
  double mu2 = 7.0;
  double sigma2_sq = 1.0;
  double sigma1_sq = 1.0;
  std::string model = "jsm2r";
};

int cmd_theory(const TheoryOptions& options, std::ostream& out, std::ostream& err);

/// Full command line (argv[0] is the program name).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// ----------------------------------------------------------------- heatmap

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

/// Linear map from dark blue (rate 0) to yellow (rate 1); luminance
/// increases with rate. Rates are clamped to [0, 1].
Rgb colormap(double rate);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major, top row first

  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Phase diagram for one K: M on the vertical axis (first m value in the
/// top row), T on the horizontal axis, each cell scale x scale pixels.
Image render_phase_diagram(const std::vector<CellResult>& cells, const std::vector<int>& m_values,
                           const std::vector<int>& t_values, int k, int scale);

/// Binary PPM (P6) with the caption lines as header comments.
std::string encode_ppm(const Image& image, const std::vector<std::string>& caption);
Image decode_ppm(const std::string& bytes);

}  // namespace mmvad::cli
