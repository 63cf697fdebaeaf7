#include "edm_cli/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "edm/errors.hpp"

namespace edm::cli {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::set<std::string> kCommonKeys = {"method", "lr",      "eps",     "fw_tol",
                                           "fw_max_iters", "seed", "repeats", "out_dir"};

std::set<std::string> keys_with(std::initializer_list<std::string> extra) {
  std::set<std::string> keys = kCommonKeys;
  keys.insert(extra.begin(), extra.end());
  return keys;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ojson vec_json(const Vector& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("out_dir: cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

fs::path prepare_out_dir(const Settings& s) {
  fs::path dir = s.text("out_dir", "edm_out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("out_dir: cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

FwConfig fw_config(const Settings& s) {
  FwConfig fw;
  fw.tolerance = s.number("fw_tol", fw.tolerance);
  fw.max_iters = s.count("fw_max_iters", fw.max_iters);
  if (!(fw.tolerance > 0.0)) throw ConfigError("fw_tol: must be > 0");
  if (fw.max_iters < 1) throw ConfigError("fw_max_iters: must be >= 1");
  return fw;
}

Method method_of(const Settings& s) {
  try {
    return parse_method(s.text("method", "edm"));
  } catch (const InputError& e) {
    throw ConfigError(std::string("method: ") + e.what());
  }
}

std::string method_label(Method m, bool sgd_name) {
  return m == Method::weighted_sum && sgd_name ? "sgd" : std::string(to_string(m));
}

struct SeedPlan {
  std::uint64_t first = 0;
  std::uint64_t repeats = 1;
};

SeedPlan seeds_of(const Settings& s, std::uint64_t default_repeats) {
  SeedPlan plan{s.count("seed", 0), s.count("repeats", default_repeats)};
  if (plan.repeats < 1) throw ConfigError("repeats: must be >= 1");
  return plan;
}

double positive(const Settings& s, const std::string& key, double fallback) {
  const double v = s.number(key, fallback);
  if (!(v > 0.0)) throw ConfigError(key + ": must be > 0");
  return v;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return {mean, sd};
}

// Column-wise mean and sample standard deviation over seeds; NaN entries
// (absent classes) are skipped.
std::pair<ojson, ojson> aggregate(const std::vector<std::vector<double>>& rows) {
  ojson mean = ojson::array(), sd = ojson::array();
  if (rows.empty()) return {mean, sd};
  for (std::size_t c = 0; c < rows.front().size(); ++c) {
    std::vector<double> col;
    for (const auto& r : rows) {
      if (!std::isnan(r[c])) col.push_back(r[c]);
    }
    if (col.empty()) {
      mean.push_back(nullptr);
      sd.push_back(nullptr);
    } else {
      auto [m, d] = mean_std(col);
      mean.push_back(m);
      sd.push_back(d);
    }
  }
  return {mean, sd};
}

ojson summary_base(const std::string& method, std::uint64_t seed, const RunResult& run) {
  ojson j;
  j["method"] = method;
  j["seed"] = seed;
  j["iterations"] = run.iterations_used;
  j["converged"] = run.converged;
  j["final_losses"] = run.trace.empty() ? ojson::array() : ojson(run.trace.back().losses);
  j["stationarity_residual"] = run.stationarity;
  return j;
}

std::vector<double> split_numbers(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    std::size_t b = cell.find_first_not_of(" \t");
    std::size_t e = cell.find_last_not_of(" \t");
    const std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
    double v = 0.0;
    const char* first = t.data();
    if (!t.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
      throw DataError("gradient file line " + std::to_string(line_no) + ": cannot parse '" + t +
                      "' as a number");
    }
    out.push_back(v);
  }
  if (!line.empty() && line.back() == ',') {
    throw DataError("gradient file line " + std::to_string(line_no) + ": trailing comma");
  }
  return out;
}

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_timing(const fs::path& dir, const std::vector<std::pair<std::uint64_t, double>>& times) {
  ojson j = ojson::object();
  for (const auto& [seed, ms] : times) j["seed_" + std::to_string(seed)]["wall_time_ms"] = ms;
  write_json(dir / "timing.json", j);
}

std::vector<double> synthetic_spec(const Settings& s, std::vector<double> fallback,
                                   std::size_t arity, const char* shape) {
  auto spec = s.numbers("synthetic").value_or(std::move(fallback));
  if (spec.size() != arity) {
    throw ConfigError(std::string("synthetic: expected ") + shape);
  }
  return spec;
}

std::size_t as_size(double v, const char* key) {
  if (v < 1.0 || v != std::floor(v)) throw ConfigError(std::string(key) + ": must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<Vector> read_gradient_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open gradient file '" + path.string() + "'");
  std::vector<Vector> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto values = split_numbers(line, line_no);
    if (!rows.empty() && static_cast<std::size_t>(rows.front().size()) != values.size()) {
      throw DataError("gradient file line " + std::to_string(line_no) + ": has " +
                      std::to_string(values.size()) + " entries, expected " +
                      std::to_string(rows.front().size()));
    }
    rows.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  if (rows.empty()) throw DataError("gradient file '" + path.string() + "' is empty");
  return rows;
}

void write_trace_csv(const fs::path& path, std::span<const IterationTrace> trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("out_dir: cannot write '" + path.string() + "'");
  const std::size_t t = trace.empty() ? 0 : trace.front().losses.size();
  out << "iter";
  for (std::size_t i = 0; i < t; ++i) out << ",loss_" << i;
  out << ",dir_norm,gamma";
  for (std::size_t i = 0; i < t; ++i) out << ",beta_" << i;
  out << ",step_norm\n";
  for (const auto& rec : trace) {
    out << rec.iteration;
    for (double l : rec.losses) out << ',' << fmt(l);
    out << ',' << fmt(rec.direction_norm) << ',';
    if (rec.gamma) out << fmt(*rec.gamma);
    for (std::size_t i = 0; i < rec.weights.dim(); ++i) out << ',' << fmt(rec.weights[i]);
    out << ',' << fmt(rec.step_norm) << '\n';
  }
}

ojson run_direction(const Settings& s) {
  s.require_known({"gradients", "method", "fw_tol", "fw_max_iters", "out_dir"});
  const auto file = s.text("gradients");
  if (!file) throw ConfigError("gradients: a gradient file is required");
  const Method method = method_of(s);
  if (method == Method::weighted_sum) throw ConfigError("method: direction supports edm or mgda");
  const FwConfig fw = fw_config(s);
  const fs::path dir = prepare_out_dir(s);

  std::vector<Vector> rows = read_gradient_file(*file);
  const GradientSet grads(rows);
  const DirectionResult d = method == Method::edm ? edm_direction(grads, fw) : mgda_direction(grads, fw);

  // EDM: (d_b, g_i) - |d_b|^2 |g_i|, zero on the support.
  // MGDA: (d_h, g_i) - |d_h|^2, zero for interior weights.
  ojson residuals = ojson::array();
  const double sq = d.direction_norm * d.direction_norm;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double inner = d.raw_direction.dot(grads.gradients()[i]);
    residuals.push_back(method == Method::edm ? inner - sq * grads.norms()[i] : inner - sq);
  }

  ojson j;
  j["method"] = std::string(to_string(method));
  j["num_objectives"] = grads.size();
  j["dimension"] = grads.dim();
  j["weights"] = vec_json(d.weights.values());
  j["raw_direction"] = vec_json(d.raw_direction);
  j["gamma"] = optional_json(d.gamma);
  j["normalized_direction"] = vec_json(d.normalized_direction);
  j["direction_norm"] = d.direction_norm;
  j["stationary"] = d.stationary();
  j["support"] = d.support;
  j["identity_residuals"] = residuals;
  j["solver_converged"] = d.solver.converged;
  write_json(dir / "direction.json", j);
  return j;
}

ojson run_solve(const Settings& s) {
  s.require_known(keys_with({"iters", "problem", "dim", "start", "weights", "kappa"}));
  const std::string problem_name = s.text("problem", "quadratic_pair");
  if (problem_name != "quadratic_pair") {
    throw ConfigError("problem: unknown problem '" + problem_name + "' (available: quadratic_pair)");
  }
  OptimizerConfig cfg;
  cfg.method = method_of(s);
  cfg.learning_rate = positive(s, "lr", 0.1);
  cfg.max_iters = s.count("iters", 5000);
  if (cfg.max_iters < 1) throw ConfigError("iters: must be >= 1");
  cfg.stop_tolerance = positive(s, "eps", 1e-8);
  cfg.fw = fw_config(s);
  const double kappa = s.number("kappa", 1.0);
  if (!(kappa >= 1.0)) throw ConfigError("kappa: must be >= 1");
  if (cfg.method == Method::weighted_sum) {
    cfg.weights = s.numbers("weights").value_or(std::vector<double>{1.0, 1.0});
    if (cfg.weights->size() != 2) throw ConfigError("weights: quadratic_pair needs 2 weights");
    for (double w : *cfg.weights) {
      if (!(w > 0.0)) throw ConfigError("weights: every weight must be > 0");
    }
  } else if (s.has("weights")) {
    throw ConfigError("weights: only used by method sgd / weighted_sum");
  }

  const auto start = s.numbers("start");
  const std::size_t dim = start ? start->size() : as_size(s.number("dim", 2), "dim");
  if (start && s.has("dim") && s.count("dim", 0) != dim) {
    throw ConfigError("dim: does not match the length of start");
  }
  if (dim < 1) throw ConfigError("dim: must be >= 1");

  Vector c1 = Vector::Zero(static_cast<Eigen::Index>(dim));
  Vector c2 = c1;
  c1(0) = -1.0;
  c2(0) = 1.0;
  auto pair = std::make_shared<const QuadraticPair>(c1, c2);
  const ScaledProblem problem(pair, kappa, 1);

  const SeedPlan seeds = seeds_of(s, 1);
  const fs::path dir = prepare_out_dir(s);
  ojson runs = ojson::array();
  std::vector<std::pair<std::uint64_t, double>> times;
  std::vector<double> distances;
  bool all_converged = true;
  for (std::uint64_t k = 0; k < seeds.repeats; ++k) {
    const std::uint64_t seed = seeds.first + k;
    Vector theta0(static_cast<Eigen::Index>(dim));
    if (start) {
      for (std::size_t i = 0; i < dim; ++i) theta0(static_cast<Eigen::Index>(i)) = (*start)[i];
    } else {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, 2.0);
      for (Eigen::Index i = 0; i < theta0.size(); ++i) theta0(i) = normal(rng);
    }
    cfg.seed = seed;
    Stopwatch clock;
    const RunResult result = run(problem, theta0, cfg);
    times.emplace_back(seed, clock.elapsed_ms());

    ojson j = summary_base(method_label(cfg.method, false), seed, result);
    j["problem"] = problem_name;
    j["kappa"] = kappa;
    j["start"] = vec_json(theta0);
    j["final_point"] = vec_json(result.final_point);
    const double dist = pareto_set_distance(*pair, result.final_point);
    j["segment_distance"] = dist;
    distances.push_back(dist);
    all_converged = all_converged && result.converged;

    write_trace_csv(dir / ("trace_seed" + std::to_string(seed) + ".csv"), result.trace);
    write_json(dir / ("summary_seed" + std::to_string(seed) + ".json"), j);
    runs.push_back(std::move(j));
  }

  ojson agg;
  agg["command"] = "solve";
  agg["method"] = method_label(cfg.method, false);
  agg["repeats"] = seeds.repeats;
  agg["all_converged"] = all_converged;
  auto [mean, sd] = mean_std(distances);
  agg["segment_distance_mean"] = mean;
  agg["segment_distance_std"] = sd;
  agg["runs"] = std::move(runs);
  write_json(dir / "summary.json", agg);
  write_timing(dir, times);
  return agg;
}

ImbalancedOutcome run_imbalanced_experiment(const Settings& s) {
  s.require_known(keys_with({"epochs", "mu", "csv", "label_column", "synthetic", "data_seed",
                             "test_fraction", "batches_per_epoch", "hidden"}));
  ImbalancedConfig cfg;
  cfg.optimizer.method = method_of(s);
  cfg.optimizer.learning_rate = positive(s, "lr", 0.003);
  cfg.optimizer.stop_tolerance = positive(s, "eps", 1e-8);
  cfg.optimizer.fw = fw_config(s);
  cfg.epochs = s.count("epochs", 30);
  cfg.batching.batches_per_epoch = s.count("batches_per_epoch", 40);
  if (cfg.batching.batches_per_epoch < 1) throw ConfigError("batches_per_epoch: must be >= 1");
  const double mu = s.number("mu", 1.0);
  if (!(mu > 0.0)) throw ConfigError("mu: must be > 0");
  if (s.has("mu") && cfg.optimizer.method != Method::weighted_sum) {
    throw ConfigError("mu: only used by method sgd");
  }
  const double test_fraction = s.number("test_fraction", 0.2);
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction: must lie strictly between 0 and 1");
  }
  const std::size_t hidden = as_size(s.number("hidden", 100), "hidden");
  const std::uint64_t data_seed = s.count("data_seed", 0);
  if (s.has("csv") && s.has("synthetic")) throw ConfigError("csv: give either csv or synthetic, not both");
  if (s.has("label_column") && !s.has("csv")) throw ConfigError("label_column: only used with csv");
  const SeedPlan seeds = seeds_of(s, 3);

  // Data problems surface as DataError (exit code 2).
  const Dataset full = [&] {
    if (const auto csv = s.text("csv")) return load_csv(*csv, s.text("label_column", "label"));
    const auto spec = synthetic_spec(s, {1000, 50, 2, 3}, 4, "n_major,n_minor,features,separation");
    const double sep = spec[3];
    if (!(sep >= 0.0)) throw ConfigError("synthetic: separation must be >= 0");
    return synth_imbalanced(as_size(spec[0], "synthetic"), as_size(spec[1], "synthetic"),
                            as_size(spec[2], "synthetic"), sep, data_seed);
  }();
  if (full.num_classes() < 2) throw DataError("dataset needs at least two classes");
  auto [train, test] = stratified_split(full, test_fraction, data_seed);
  cfg.batching.per_class_batch_sizes(train);  // ConfigError if a class is too small

  const std::size_t classes = full.num_classes();
  if (cfg.optimizer.method == Method::weighted_sum) {
    // mu weights the least populated class
    const auto& sets = train.class_index_sets();
    std::size_t minority = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (sets[c].size() < sets[minority].size()) minority = c;
    }
    std::vector<double> w(classes, 1.0);
    w[minority] = mu;
    cfg.optimizer.weights = w;
  }

  const fs::path dir = prepare_out_dir(s);
  ImbalancedOutcome outcome;
  ojson runs = ojson::array();
  std::vector<std::pair<std::uint64_t, double>> times;
  const std::string label = method_label(cfg.optimizer.method, true);
  for (std::uint64_t k = 0; k < seeds.repeats; ++k) {
    const std::uint64_t seed = seeds.first + k;
    const std::size_t sizes[] = {full.num_features(), hidden, classes};
    cfg.optimizer.seed = seed;
    cfg.batching.seed = seed;
    Stopwatch clock;
    const ImbalancedResult result = run_imbalanced(MlpParams::glorot(sizes, seed), train, cfg);
    times.emplace_back(seed, clock.elapsed_ms());

    std::vector<double> acc;
    ojson acc_json = ojson::array();
    for (const auto& a : accuracy_per_class(result.model, test)) {
      acc.push_back(a.value_or(std::numeric_limits<double>::quiet_NaN()));
      acc_json.push_back(optional_json(a));
    }
    ojson j = summary_base(label, seed, result.run);
    if (cfg.optimizer.method == Method::weighted_sum) j["mu"] = mu;
    j["per_class_accuracy"] = acc_json;
    write_trace_csv(dir / ("trace_seed" + std::to_string(seed) + ".csv"), result.run.trace);
    write_json(dir / ("summary_seed" + std::to_string(seed) + ".json"), j);
    runs.push_back(std::move(j));
    outcome.accuracy.push_back(std::move(acc));
  }

  auto [mean, sd] = aggregate(outcome.accuracy);
  ojson agg;
  agg["command"] = "imbalanced";
  agg["method"] = label;
  if (cfg.optimizer.method == Method::weighted_sum) agg["mu"] = mu;
  agg["repeats"] = seeds.repeats;
  agg["train_size"] = train.size();
  agg["test_size"] = test.size();
  agg["per_class_accuracy_mean"] = mean;
  agg["per_class_accuracy_std"] = sd;
  agg["runs"] = std::move(runs);
  write_json(dir / "summary.json", agg);
  write_timing(dir, times);
  outcome.summary = std::move(agg);
  return outcome;
}

MultitaskOutcome run_multitask_experiment(const Settings& s) {
  s.require_known(keys_with({"epochs", "kappa", "csv", "label_column", "label2_column", "synthetic",
                             "classes", "data_seed", "test_fraction", "batch_size", "weights"}));
  MultitaskConfig cfg;
  cfg.optimizer.method = method_of(s);
  cfg.optimizer.learning_rate = positive(s, "lr", 0.05);
  cfg.optimizer.stop_tolerance = positive(s, "eps", 1e-8);
  cfg.optimizer.fw = fw_config(s);
  cfg.epochs = s.count("epochs", 25);
  cfg.batch_size = s.count("batch_size", 256);
  if (cfg.batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  cfg.kappa = s.number("kappa", 1.0);
  if (!(cfg.kappa >= 1.0)) throw ConfigError("kappa: must be >= 1");
  if (const auto w = s.numbers("weights")) {
    if (cfg.optimizer.method != Method::weighted_sum) {
      throw ConfigError("weights: only used by method sgd / weighted_sum");
    }
    if (w->size() != 2) throw ConfigError("weights: need one weight per task");
    for (double x : *w) {
      if (!(x > 0.0)) throw ConfigError("weights: every weight must be > 0");
    }
    cfg.optimizer.weights = *w;
  }
  const double test_fraction = s.number("test_fraction", 0.2);
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction: must lie strictly between 0 and 1");
  }
  const std::uint64_t data_seed = s.count("data_seed", 0);
  if (s.has("csv") && s.has("synthetic")) throw ConfigError("csv: give either csv or synthetic, not both");
  const SeedPlan seeds = seeds_of(s, 3);

  const Dataset full = [&] {
    if (const auto csv = s.text("csv")) {
      return load_csv(*csv, s.text("label_column", "label"), s.text("label2_column", "label2"));
    }
    const auto spec = synthetic_spec(s, {4000, 8, 3}, 3, "n,features,separation");
    TwoTaskShape shape;
    shape.classes = as_size(s.number("classes", 4), "classes");
    if (shape.classes < 2) throw ConfigError("classes: must be >= 2");
    shape.separation = spec[2];
    if (!(shape.separation >= 0.0)) throw ConfigError("synthetic: separation must be >= 0");
    const std::size_t m = as_size(spec[1], "synthetic");
    if (m < 2) throw ConfigError("synthetic: a two-task dataset needs at least 2 features");
    return synth_two_task(as_size(spec[0], "synthetic"), m, data_seed, shape);
  }();
  if (!full.two_task()) throw DataError("multitask needs a second label column");
  auto [train, test] = stratified_split(full, test_fraction, data_seed);

  const std::size_t classes = std::max(full.num_classes(), full.num_classes2());
  const fs::path dir = prepare_out_dir(s);
  MultitaskOutcome outcome;
  ojson runs = ojson::array();
  std::vector<std::pair<std::uint64_t, double>> times;
  const std::string label = method_label(cfg.optimizer.method, true);
  for (std::uint64_t k = 0; k < seeds.repeats; ++k) {
    const std::uint64_t seed = seeds.first + k;
    const std::size_t trunk[] = {full.num_features(), 32, 16};
    cfg.optimizer.seed = seed;
    Stopwatch clock;
    const MultitaskResult result = run_multitask(TwoHeadMlp::glorot(trunk, classes, seed), train, cfg);
    times.emplace_back(seed, clock.elapsed_ms());

    std::vector<double> acc = {task_accuracy(result.model, test, 0), task_accuracy(result.model, test, 1)};
    ojson j = summary_base(label, seed, result.run);
    j["kappa"] = cfg.kappa;
    j["per_task_accuracy"] = acc;
    write_trace_csv(dir / ("trace_seed" + std::to_string(seed) + ".csv"), result.run.trace);
    write_json(dir / ("summary_seed" + std::to_string(seed) + ".json"), j);
    runs.push_back(std::move(j));
    outcome.accuracy.push_back(std::move(acc));
    outcome.first_shared_steps.push_back(result.first_shared_step);
  }

  auto [mean, sd] = aggregate(outcome.accuracy);
  ojson agg;
  agg["command"] = "multitask";
  agg["method"] = label;
  agg["kappa"] = cfg.kappa;
  agg["repeats"] = seeds.repeats;
  agg["per_task_accuracy_mean"] = mean;
  agg["per_task_accuracy_std"] = sd;
  agg["runs"] = std::move(runs);
  write_json(dir / "summary.json", agg);
  write_timing(dir, times);
  outcome.summary = std::move(agg);
  return outcome;
}

}  // namespace edm::cli
