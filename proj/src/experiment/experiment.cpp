#include "mmvad/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "mmvad/errors.hpp"

namespace mmvad {

using json = nlohmann::json;

namespace {

std::vector<int> int_list(const json& j, const char* field) {
  if (!j.contains(field)) throw ConfigError(field, "missing");
  const json& v = j[field];
  std::vector<int> out;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError(field, "entries must be integers");
      out.push_back(e.get<int>());
    }
  } else if (v.is_object()) {
    if (!v.contains("from") || !v.contains("to") || !v["from"].is_number_integer() || !v["to"].is_number_integer())
      throw ConfigError(field, "range needs integer 'from' and 'to'");
    const int from = v["from"].get<int>();
    const int to = v["to"].get<int>();
    const int step = v.contains("step") ? v["step"].get<int>() : 1;
    if (step < 1) throw ConfigError(field, "range step must be >= 1");
    if (to < from) throw ConfigError(field, "range 'to' is below 'from'");
    for (long long x = from; x <= to; x += step) out.push_back(static_cast<int>(x));
  } else {
    throw ConfigError(field, "expected an array or {from, to, step}");
  }
  if (out.empty()) throw ConfigError(field, "must not be empty");
  return out;
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& field) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field, "wrong type");
  }
}

}  // namespace

json to_json(const DetectorConfig& c) {
  json lasso;
  if (c.lasso.lambda) lasso["lambda"] = *c.lasso.lambda;
  lasso["lambda_scale"] = c.lasso.lambda_scale;
  lasso["max_iters"] = c.lasso.max_iters;
  lasso["tol"] = c.lasso.tol;
  lasso["acceleration"] = c.lasso.acceleration;
  return {{"algorithm", std::string(to_string(c.algorithm))},
          {"inner", std::string(to_string(c.inner))},
          {"acie_iterations", c.acie_iterations},
          {"acie_reestimate", c.acie_reestimate},
          {"lasso", lasso}};
}

DetectorConfig detector_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("detector", "expected an object");
  DetectorConfig c;
  if (!j.contains("algorithm") || !j["algorithm"].is_string()) throw ConfigError("algorithm", "missing or not a string");
  c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
  if (j.contains("inner")) {
    if (!j["inner"].is_string()) throw ConfigError("inner", "not a string");
    c.inner = inner_detector_from_string(j["inner"].get<std::string>());
  }
  c.acie_iterations = get_or(j, "acie_iterations", c.acie_iterations, "acie_iterations");
  if (c.acie_iterations < 1) throw ConfigError("acie_iterations", "must be >= 1");
  c.acie_reestimate = get_or(j, "acie_reestimate", c.acie_reestimate, "acie_reestimate");
  if (j.contains("lasso")) {
    const json& l = j["lasso"];
    if (!l.is_object()) throw ConfigError("lasso", "expected an object");
    if (l.contains("lambda")) {
      if (!l["lambda"].is_number()) throw ConfigError("lasso.lambda", "not a number");
      const double lambda = l["lambda"].get<double>();
      if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lasso.lambda", "must be finite and >= 0");
      c.lasso.lambda = lambda;
    }
    c.lasso.lambda_scale = get_or(l, "lambda_scale", c.lasso.lambda_scale, "lasso.lambda_scale");
    if (!(c.lasso.lambda_scale >= 0.0)) throw ConfigError("lasso.lambda_scale", "must be >= 0");
    c.lasso.max_iters = get_or(l, "max_iters", c.lasso.max_iters, "lasso.max_iters");
    if (c.lasso.max_iters < 1) throw ConfigError("lasso.max_iters", "must be >= 1");
    c.lasso.tol = get_or(l, "tol", c.lasso.tol, "lasso.tol");
    if (!(c.lasso.tol > 0.0)) throw ConfigError("lasso.tol", "must be > 0");
    c.lasso.acceleration = get_or(l, "acceleration", c.lasso.acceleration, "lasso.acceleration");
  }
  return c;
}

void GridSpec::validate() const {
  auto check_values = [](const std::vector<int>& v, const char* field) {
    if (v.empty()) throw ConfigError(field, "must not be empty");
    for (int x : v)
      if (x < 1) throw ConfigError(field, "values must be >= 1");
  };
  check_values(m_values, "m_values");
  check_values(t_values, "t_values");
  check_values(k_values, "k_values");
  for (int k : k_values) {
    if (k >= problem.n_vars) throw ConfigError("k_values", "every K must be smaller than N");
    if (problem.anomaly_set && static_cast<int>(problem.anomaly_set->size()) != k)
      throw ConfigError("problem.anomaly_set", "fixed set size must match every K");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence", "must be in (0, 1)");
  if (!(target_width > 0.0 && target_width < 1.0)) throw ConfigError("target_width", "must be in (0, 1)");
  if (min_trials < 1) throw ConfigError("min_trials", "must be >= 1");
  if (max_trials < min_trials) throw ConfigError("max_trials", "must be >= min_trials");
}

GridSpec grid_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("grid", "expected a JSON object");
  GridSpec g;
  g.m_values = int_list(j, "m_values");
  g.t_values = int_list(j, "t_values");
  g.k_values = int_list(j, "k_values");
  if (!j.contains("problem")) throw ConfigError("problem", "missing");
  json problem = j["problem"];
  if (problem.is_object() && !problem.contains("K")) problem["K"] = 1;  // replaced per cell
  g.problem = problem_config_from_json(problem);
  if (!j.contains("detector")) throw ConfigError("detector", "missing");
  g.detector = detector_config_from_json(j["detector"]);
  g.confidence = get_or(j, "confidence", g.confidence, "confidence");
  g.target_width = get_or(j, "target_width", g.target_width, "target_width");
  g.min_trials = get_or(j, "min_trials", g.min_trials, "min_trials");
  g.max_trials = get_or(j, "max_trials", g.max_trials, "max_trials");
  if (j.contains("base_seed")) {
    if (!j["base_seed"].is_number_integer()) throw ConfigError("base_seed", "must be an integer");
    g.base_seed = j["base_seed"].get<std::uint64_t>();
  }
  g.validate();
  return g;
}

json to_json(const GridSpec& g) {
  json problem = to_json(g.problem);
  problem.erase("K");
  return {{"m_values", g.m_values},
          {"t_values", g.t_values},
          {"k_values", g.k_values},
          {"problem", problem},
          {"detector", to_json(g.detector)},
          {"confidence", g.confidence},
          {"target_width", g.target_width},
          {"min_trials", g.min_trials},
          {"max_trials", g.max_trials},
          {"base_seed", g.base_seed}};
}

std::uint64_t trial_seed(std::uint64_t base_seed, int m, int t, int k, int trial) {
  return substream_seed(base_seed, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(trial)});
}

TrialOutcome run_trial(const GridSpec& grid, int m, int t, int k, std::uint64_t seed) {
  TrialOutcome out;
  try {
    SeededRng rng(seed);
    ProblemConfig pc = grid.problem;
    pc.n_anomalies = k;
    const ProblemSpec spec = pc.instantiate(rng);
    const SignalEnsemble signals = generate_signals(spec, t, rng);
    const SensingSequence sensing = draw_sensing(m, spec.n_vars(), t, rng);
    const MeasurementSet measurements = measure(sensing, signals);
    const DetectionResult result = run_detector(grid.detector, measurements, sensing, k);
    out.success = result.estimated_set == spec.anomaly_set();
    for (const auto& [name, raised] : result.diagnostics.flags) out.flagged = out.flagged || raised;
  } catch (const Error& e) {
    out.error = true;
    out.message = e.what();
  }
  return out;
}

CellResult run_cell(const GridSpec& grid, int m, int t, int k, const TrialRunner& runner) {
  grid.validate();
  const auto start = std::chrono::steady_clock::now();
  CellResult cell;
  cell.m = m;
  cell.t = t;
  cell.k = k;
  Interval ci;
  while (true) {
    const TrialOutcome o = runner(grid, m, t, k, trial_seed(grid.base_seed, m, t, k, cell.trials));
    ++cell.trials;
    if (o.success) ++cell.successes;
    if (o.flagged) ++cell.flagged_trials;
    if (o.error) {
      if (cell.detector_errors == 0) cell.first_error = o.message;
      ++cell.detector_errors;
    }
    if (cell.trials < grid.min_trials) continue;
    ci = jeffreys_interval(cell.successes, cell.trials, grid.confidence);
    if (ci.width() < grid.target_width) break;
    if (cell.trials >= grid.max_trials) {
      cell.hit_max_trials = true;
      break;
    }
  }
  cell.rate = static_cast<double>(cell.successes) / cell.trials;
  cell.ci_low = ci.low;
  cell.ci_high = ci.high;
  cell.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

std::vector<CellResult> run_grid(const GridSpec& grid, const GridRunOptions& options) {
  grid.validate();
  struct Key {
    int m, t, k;
  };
  std::vector<Key> keys;
  for (int k : grid.k_values)
    for (int m : grid.m_values)
      for (int t : grid.t_values) keys.push_back({m, t, k});

  std::map<std::tuple<int, int, int>, CellResult> done;
  for (const auto& c : options.completed) done.emplace(std::make_tuple(c.m, c.t, c.k), c);

  std::vector<CellResult> results(keys.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto it = done.find({keys[i].m, keys[i].t, keys[i].k});
    if (it != done.end())
      results[i] = it->second;
    else
      todo.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= todo.size()) return;
      const Key& key = keys[todo[j]];
      try {
        results[todo[j]] = run_cell(grid, key.m, key.t, key.k, options.runner);
        if (options.on_cell) {
          std::lock_guard lock(callback_mutex);
          options.on_cell(results[todo[j]]);
        }
      } catch (...) {
        std::lock_guard lock(callback_mutex);
        if (!failure) failure = std::current_exception();
        next.store(todo.size());
        return;
      }
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(todo.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<CellResult> run_variance_sweep(const GridSpec& grid, int m, int t, int k,
                                           const std::vector<double>& ratios, const TrialRunner& runner) {
  std::vector<CellResult> out;
  for (double ratio : ratios) {
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw DomainError("variance ratio must be positive");
    GridSpec g = grid;
    g.problem.anomalous.variance = ratio * grid.problem.prevalent.variance;
    out.push_back(run_cell(g, m, t, k, runner));
  }
  return out;
}

}  // namespace mmvad
