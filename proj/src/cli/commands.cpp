#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mmvad/cli.hpp"
#include "mmvad/errors.hpp"
#include "mmvad/io.hpp"

namespace mmvad::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kPartialFile = "cells.partial.jsonl";

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Maps library errors to exit codes; everything else propagates.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

struct GenerateConfig {
  ProblemConfig problem;
  int m = 1;
  int t = 1;
};

GenerateConfig generate_config_from_json(const json& j) {
  GenerateConfig c;
  c.problem = problem_config_from_json(j);
  for (const char* key : {"M", "T"}) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 1)
      throw ConfigError(key, "missing or not a positive integer");
  }
  c.m = j["M"].get<int>();
  c.t = j["T"].get<int>();
  return c;
}

json cell_to_json(const CellResult& c) {
  return {{"m", c.m},
          {"t", c.t},
          {"k", c.k},
          {"successes", c.successes},
          {"trials", c.trials},
          {"rate", c.rate},
          {"ci_low", c.ci_low},
          {"ci_high", c.ci_high},
          {"hit_max_trials", c.hit_max_trials},
          {"wall_time_seconds", c.wall_time_seconds},
          {"detector_errors", c.detector_errors},
          {"flagged_trials", c.flagged_trials},
          {"first_error", c.first_error}};
}

CellResult cell_from_json(const json& j) {
  CellResult c;
  c.m = j.at("m").get<int>();
  c.t = j.at("t").get<int>();
  c.k = j.at("k").get<int>();
  c.successes = j.at("successes").get<int>();
  c.trials = j.at("trials").get<int>();
  c.rate = j.at("rate").get<double>();
  c.ci_low = j.at("ci_low").get<double>();
  c.ci_high = j.at("ci_high").get<double>();
  c.hit_max_trials = j.at("hit_max_trials").get<bool>();
  c.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  c.detector_errors = j.at("detector_errors").get<int>();
  c.flagged_trials = j.at("flagged_trials").get<int>();
  c.first_error = j.at("first_error").get<std::string>();
  return c;
}

std::vector<CellResult> load_partial(const fs::path& path, const std::string& config_line) {
  std::vector<CellResult> cells;
  std::ifstream in(path);
  if (!in) return cells;
  std::string line;
  if (!std::getline(in, line) || line != config_line) return cells;  // different run: start over
  while (std::getline(in, line)) {
    try {
      cells.push_back(cell_from_json(json::parse(line)));
    } catch (const json::exception&) {
      break;  // torn last line from an interrupted write
    }
  }
  return cells;
}

}  // namespace

int cmd_generate(const GenerateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const std::string start = utc_timestamp();
    const GenerateConfig cfg = generate_config_from_json(read_json_file(o.config));
    SeededRng rng(o.seed);
    const ProblemSpec spec = cfg.problem.instantiate(rng);
    const SignalEnsemble signals = generate_signals(spec, cfg.t, rng);
    const SensingSequence sensing = draw_sensing(cfg.m, spec.n_vars(), cfg.t, rng);
    const MeasurementSet measurements = measure(sensing, signals);

    ensure_dir(o.output_dir);
    std::ostringstream s, p, y;
    write_signals_csv(s, signals);
    write_sensing_csv(p, sensing);
    write_measurements_csv(y, measurements);
    const std::vector<std::pair<std::string, std::string>> files = {
        {"signals.csv", s.str()},
        {"sensing.csv", p.str()},
        {"measurements.csv", y.str()},
        {"anomaly_set.txt", to_one_based_list(spec.anomaly_set()) + "\n"}};
    json outputs = json::array();
    for (const auto& [name, contents] : files) {
      write_file_atomic(o.output_dir / name, contents);
      outputs.push_back(name);
    }
    json cfg_echo = to_json(cfg.problem);
    cfg_echo["M"] = cfg.m;
    cfg_echo["T"] = cfg.t;
    const json manifest = {{"command", "generate"},      {"config", cfg_echo},
                           {"base_seed", o.seed},        {"start", start},
                           {"end", utc_timestamp()},     {"outputs", outputs},
                           {"code_version", std::string(code_version())},
                           {"rng_algorithm", std::string(SeededRng::algorithm_name())}};
    write_file_atomic(o.output_dir / "manifest.json", manifest.dump(2) + "\n");
    out << "anomaly_set: " << to_one_based_list(spec.anomaly_set()) << '\n';
    out << "wrote " << files.size() << " files to " << o.output_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_detect(const DetectOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    DetectorConfig cfg;
    cfg.algorithm = algorithm_from_string(o.algorithm);
    cfg.inner = inner_detector_from_string(o.inner);
    if (o.acie_iterations < 1) throw ConfigError("acie-iterations", "must be >= 1");
    cfg.acie_iterations = o.acie_iterations;
    cfg.acie_reestimate = o.acie_reestimate;
    if (o.lambda) {
      if (!(*o.lambda >= 0.0)) throw ConfigError("lambda", "must be >= 0");
      cfg.lasso.lambda = *o.lambda;
    }

    SensingSequence sensing;
    MeasurementSet measurements;
    std::optional<IndexSet> truth;
    if (o.sensing && o.measurements) {
      sensing = read_sensing_csv(*o.sensing);
      measurements = read_measurements_csv(*o.measurements);
    } else if (o.config) {
      const GenerateConfig gc = generate_config_from_json(read_json_file(*o.config));
      SeededRng rng(o.seed);
      const ProblemSpec spec = gc.problem.instantiate(rng);
      const SignalEnsemble signals = generate_signals(spec, gc.t, rng);
      sensing = draw_sensing(gc.m, spec.n_vars(), gc.t, rng);
      measurements = measure(sensing, signals);
      truth = spec.anomaly_set();
    } else {
      throw ConfigError("input", "give --sensing and --measurements, or --config");
    }

    if (cfg.algorithm == Algorithm::Acie && o.k >= sensing.m_per_step())
      throw DimensionError("acie requires k < M (k=" + std::to_string(o.k) +
                           ", M=" + std::to_string(sensing.m_per_step()) + ")");
    if (cfg.algorithm == Algorithm::Somp && o.k > sensing.m_per_step())
      throw DimensionError("somp requires k <= M (k=" + std::to_string(o.k) +
                           ", M=" + std::to_string(sensing.m_per_step()) + ")");

    const DetectionResult r = run_detector(cfg, measurements, sensing, o.k);
    out << "algorithm: " << to_string(cfg.algorithm) << '\n';
    out << "estimated_set: " << to_one_based_list(r.estimated_set) << '\n';
    if (truth) {
      out << "true_set: " << to_one_based_list(*truth) << '\n';
      out << "exact_recovery: " << (r.estimated_set == *truth ? "true" : "false") << '\n';
    }
    out << "scores:";
    for (Eigen::Index i = 0; i < r.scores.size(); ++i) out << (i ? "," : " ") << format_double(r.scores(i));
    out << '\n';
    for (const auto& [name, v] : r.diagnostics.values) out << "diagnostic." << name << ": " << format_double(v) << '\n';
    for (const auto& [name, v] : r.diagnostics.flags) out << "flag." << name << ": " << (v ? "true" : "false") << '\n';

    int code = kExitOk;
    if (r.diagnostics.flag("all_zero_solution")) {
      err << "warning: AllZeroSolution: the LASSO estimate is identically zero (lambda too large?)\n";
      code = kExitRuntime;
    }
    if (r.diagnostics.flag("non_convergence")) {
      err << "warning: NonConvergence: the LASSO solver stopped before meeting its tolerance\n";
      code = kExitRuntime;
    }
    return code;
  });
}

int cmd_phase(const PhaseOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const std::string start = utc_timestamp();
    json j = read_json_file(o.config);
    if (j.is_object() && j.contains("grid")) j = j["grid"];  // rerun from a manifest
    GridSpec grid = grid_spec_from_json(j);
    if (o.seed) grid.base_seed = *o.seed;
    if (o.threads < 1) throw ConfigError("threads", "must be >= 1");

    ensure_dir(o.output_dir);
    const std::string config_line = to_json(grid).dump();
    const fs::path partial = o.output_dir / kPartialFile;

    GridRunOptions run;
    run.threads = o.threads;
    run.completed = load_partial(partial, config_line);
    if (!run.completed.empty()) out << "resuming: " << run.completed.size() << " cells already done\n";

    std::ofstream log;
    if (run.completed.empty()) {
      log.open(partial, std::ios::trunc);
      log << config_line << '\n';
    } else {
      log.open(partial, std::ios::app);
    }
    if (!log) throw IoError("cannot write " + partial.string());
    run.on_cell = [&](const CellResult& c) { log << cell_to_json(c).dump() << '\n' << std::flush; };

    const std::vector<CellResult> cells = run_grid(grid, run);
    log.close();

    json outputs = json::array();
    const std::string alg(to_string(grid.detector.algorithm));
    for (int k : grid.k_values) {
      std::vector<ResultRow> rows;
      std::vector<CellResult> for_k;
      for (const auto& c : cells)
        if (c.k == k) {
          rows.push_back(make_row(grid, c));
          for_k.push_back(c);
        }
      std::ostringstream csv;
      write_results_csv(csv, rows);
      const std::string stem = "results_K" + std::to_string(k);
      write_file_atomic(o.output_dir / (stem + ".csv"), csv.str());
      json meta = results_metadata(grid);
      meta["K"] = k;
      write_file_atomic(o.output_dir / (stem + ".json"), meta.dump(2) + "\n");

      const Image img = render_phase_diagram(for_k, grid.m_values, grid.t_values, k, o.heatmap_scale);
      const std::vector<std::string> caption = {
          "success rate of " + alg + " (" + std::string(to_string(grid.problem.model)) +
              ", N=" + std::to_string(grid.problem.n_vars) + ", K=" + std::to_string(k) + ")",
          "rows: M from " + std::to_string(grid.m_values.front()) + " (top) to " +
              std::to_string(grid.m_values.back()) + " (bottom); columns: T from " +
              std::to_string(grid.t_values.front()) + " (left) to " + std::to_string(grid.t_values.back()) +
              " (right)",
          "color: linear, dark blue = 0, yellow = 1",
          "each cell estimated until its " + format_double(grid.confidence) + " Jeffreys interval is narrower than " +
              format_double(grid.target_width) + " (or max_trials)"};
      const std::string heat = "heatmap_" + alg + "_K" + std::to_string(k) + ".ppm";
      write_file_atomic(o.output_dir / heat, encode_ppm(img, caption));
      outputs.push_back(stem + ".csv");
      outputs.push_back(stem + ".json");
      outputs.push_back(heat);
    }

    int capped = 0;
    int errors = 0;
    for (const auto& c : cells) {
      capped += c.hit_max_trials ? 1 : 0;
      errors += c.detector_errors;
    }
    const json manifest = {{"command", "phase"},
                           {"grid", to_json(grid)},
                           {"base_seed", grid.base_seed},
                           {"start", start},
                           {"end", utc_timestamp()},
                           {"outputs", outputs},
                           {"cells", cells.size()},
                           {"cells_hit_max_trials", capped},
                           {"detector_errors", errors},
                           {"code_version", std::string(code_version())},
                           {"rng_algorithm", std::string(SeededRng::algorithm_name())}};
    write_file_atomic(o.output_dir / "manifest.json", manifest.dump(2) + "\n");
    std::error_code ec;
    fs::remove(partial, ec);
    out << "cells: " << cells.size() << " (" << capped << " hit max_trials, " << errors << " detector errors)\n";
    for (const auto& f : outputs) out << "wrote " << (o.output_dir / f.get<std::string>()).string() << '\n';
    return kExitOk;
  });
}

int cmd_theory(const TheoryOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const SignalModel model = signal_model_from_string(o.model);
    if (o.n < 2) throw ConfigError("N", "must be >= 2");
    if (o.k < 1 || o.k >= o.n) throw ConfigError("K", "must satisfy 1 <= K < N");
    if (o.m < 1) throw ConfigError("M", "must be >= 1");
    if (!(o.sigma2_sq >= 0.0)) throw ConfigError("sigma2", "variance must be >= 0");
    if (!(o.sigma1_sq >= 0.0)) throw ConfigError("sigma1", "variance must be >= 0");

    TheoryCase c{o.n, o.k, o.m, o.mu2, o.sigma2_sq, o.sigma1_sq, TheoryCaseKind::Prevalent};
    const double prevalent = theory_xi_expectation(c);
    c.kind = TheoryCaseKind::Anomalous;
    const double anomalous = theory_xi_expectation(c);
    out << "prevalent_expectation: " << format_double(prevalent) << '\n';
    out << "anomalous_expectation: " << format_double(anomalous) << '\n';
    out << "difference: " << format_double(anomalous - prevalent) << '\n';
    out << "closed_form_difference: " << format_double(theory_xi_gap(o.m, o.mu2, o.sigma2_sq, o.sigma1_sq)) << '\n';
    out << "separation_hypothesis: "
        << (theory_separation_check(model, o.mu2, o.sigma2_sq, o.sigma1_sq) ? "true" : "false") << '\n';
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anomaly detection from mixed observations: data generation, detection, phase diagrams"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = ".";
  std::string config;
  bool verbose = false;
  app.add_option("--seed", seed, "Base random seed");
  app.add_option("--threads", threads, "Worker threads for phase grids")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", output_dir, "Directory for output files");
  app.add_option("--config", config, "JSON config file");
  app.add_flag("--verbose", verbose, "Echo the resolved options");

  auto* gen = app.add_subcommand("generate", "Draw one problem instance and write it as CSV");

  auto* det = app.add_subcommand("detect", "Run a detector on stored or freshly drawn data");
  DetectOptions d;
  std::string sensing, measurements;
  double lambda = -1.0;
  det->add_option("--algorithm,-a", d.algorithm, "osga|somp|lasso|tecc|acie")->required();
  det->add_option("-k,--k", d.k, "Number of anomalies to report")->required();
  det->add_option("--inner", d.inner, "Inner detector for tecc/acie: osga|somp|lasso");
  det->add_option("--lambda", lambda, "LASSO penalty (default 0.1 * ||phi^T y||_inf)");
  det->add_option("--acie-iterations", d.acie_iterations, "ACIE iterations L");
  det->add_flag("--acie-reestimate", d.acie_reestimate, "Re-estimate the set between ACIE iterations");
  det->add_option("--sensing", sensing, "sensing.csv");
  det->add_option("--measurements", measurements, "measurements.csv");

  auto* phase = app.add_subcommand("phase", "Run a success-rate grid and write CSV and heatmaps");
  int scale = 8;
  phase->add_option("--scale", scale, "Heatmap pixels per cell")->check(CLI::PositiveNumber);

  auto* theory = app.add_subcommand("theory", "Closed-form OSGA statistic expectations");
  TheoryOptions t;
  theory->add_option("--N", t.n, "Number of variables");
  theory->add_option("--K", t.k, "Number of anomalies");
  theory->add_option("--M", t.m, "Measurements per time-step");
  theory->add_option("--mu2", t.mu2, "Anomalous mean");
  theory->add_option("--sigma2", t.sigma2_sq, "Anomalous variance");
  theory->add_option("--sigma1", t.sigma1_sq, "Prevalent variance");
  theory->add_option("--model", t.model, "jsm2r|jsm3r");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (verbose) err << "seed=" << seed << " threads=" << threads << " output-dir=" << output_dir << '\n';

  if (gen->parsed()) {
    if (config.empty()) {
      err << "error: generate needs --config\n";
      return kExitUsage;
    }
    return cmd_generate({config, output_dir, seed}, out, err);
  }
  if (det->parsed()) {
    if (lambda >= 0.0 || det->count("--lambda") > 0) d.lambda = lambda;
    if (!sensing.empty()) d.sensing = sensing;
    if (!measurements.empty()) d.measurements = measurements;
    if (!config.empty()) d.config = config;
    d.seed = seed;
    return cmd_detect(d, out, err);
  }
  if (phase->parsed()) {
    if (config.empty()) {
      err << "error: phase needs --config\n";
      return kExitUsage;
    }
    PhaseOptions p;
    p.config = config;
    p.output_dir = output_dir;
    p.threads = threads;
    if (app.count("--seed") > 0) p.seed = seed;
    p.heatmap_scale = scale;
    return cmd_phase(p, out, err);
  }
  return cmd_theory(t, out, err);
}

}  // namespace mmvad::cli
