#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "urisk/asymptotics.hpp"
#include "urisk/data.hpp"
#include "urisk/diagnostics.hpp"
#include "urisk/risk.hpp"
#include "urisk/train.hpp"

namespace urisk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kThreadsEnv = "UNLABELED_RISK_THREADS";

struct DataOptions {
  std::string path;
  std::string format = "csv";
  std::size_t dim = 0;
  bool header = false;
  bool labeled = false;
};

struct Common {
  DataOptions data;
  std::string eval_data;
  std::string theta;
  std::optional<double> py1;
  std::string loss = "log";
  std::uint64_t seed = 0;
  std::optional<int> threads;
  std::string out_dir = ".";
  int restarts = 5;
};

struct TrainOptions {
  std::string algo = "grad";
  double step_size = GradDescentConfig{}.step_size;
  int max_iterations = GradDescentConfig{}.max_iterations;
  double tolerance = GradDescentConfig{}.tolerance;
  std::string refit = "warm";
  int grid_points = GridSearchConfig{}.grid_points;
  double window = GridSearchConfig{}.window;
  double shrink = GridSearchConfig{}.shrink;
  int max_sweeps = GridSearchConfig{}.max_sweeps;
  bool literal_window = false;
};

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

int resolve_threads(const std::optional<int>& flag) {
  if (flag) return std::max(*flag, 1);
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      return std::max(std::stoi(env), 1);
    } catch (const std::exception&) {
      fail(ErrorKind::kConfig, fmt::format("{} must be an integer, got '{}'", kThreadsEnv, env));
    }
  }
  return 1;
}

double require_py1(const Common& c) {
  if (!c.py1) fail(ErrorKind::kConfig, "--py1 is required");
  if (!(*c.py1 > 0.0 && *c.py1 < 1.0)) {
    fail(ErrorKind::kConfig, fmt::format("--py1 must be in (0, 1), got {}", *c.py1));
  }
  return *c.py1;
}

Dataset load_data(const DataOptions& o, bool labeled) {
  if (o.path.empty()) fail(ErrorKind::kConfig, "--data is required");
  if (o.format == "sparse") {
    if (o.dim == 0) fail(ErrorKind::kConfig, "--dim is required for sparse input");
    Dataset d = load_sparse(o.path, o.dim);
    if (labeled && !d.labeled) fail(ErrorKind::kData, fmt::format("'{}' has no labels", o.path));
    return d;
  }
  DenseCsvOptions csv;
  csv.has_labels = labeled;
  csv.header = o.header;
  if (o.dim != 0) csv.expected_dim = o.dim;
  return load_dense_csv(o.path, csv);
}

Dataset load_eval(const Common& c) {
  DataOptions o = c.data;
  o.path = c.eval_data;
  return load_data(o, true);
}

ClassifierParams read_theta(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, fmt::format("cannot open theta file '{}'", path));
  std::vector<double> w;
  std::string token;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    while (ls >> token) {
      try {
        std::size_t used = 0;
        w.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        fail(ErrorKind::kData, fmt::format("theta file line {}: bad number '{}'", line_no, token));
      }
    }
  }
  if (w.empty()) fail(ErrorKind::kData, fmt::format("theta file '{}' is empty", path));
  return ClassifierParams(std::move(w));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) fail(ErrorKind::kIo, fmt::format("failed writing '{}'", path.string()));
}

std::string theta_text(const ClassifierParams& theta) {
  std::string s;
  for (double w : theta.weights()) s += fmt::format("{:.17g}\n", w);
  return s;
}

json components_json(const MixtureFit& fit, bool means) {
  json j = json::object();
  for (const auto& [y, g] : fit.components) {
    j[y > 0 ? fmt::format("+{}", y) : fmt::format("{}", y)] = means ? g.mean : g.stddev;
  }
  return j;
}

FitConfig fit_config_for(const Common& c, bool training) {
  FitConfig f = training ? default_training_fit_config() : FitConfig{};
  if (!training) f.restarts = c.restarts;
  f.seed = c.seed;
  return f;
}

/// Tracks what a run read and wrote for the manifest.
class Run {
 public:
  Run(std::string subcommand, const Common& common) : subcommand_(std::move(subcommand)), common_(common) {
    fs::create_directories(common.out_dir);
  }

  void input(const std::string& path) {
    if (!path.empty()) inputs_.push_back({{"path", path}, {"fnv1a64", fmt::format("{:016x}", fnv1a64_file(path))}});
  }

  fs::path output(const std::string& name) {
    fs::path p = fs::path(common_.out_dir) / name;
    outputs_.push_back(p.string());
    return p;
  }

  void write_manifest(const json& config) const {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"subcommand", subcommand_}, {"config", config},       {"seed", common_.seed},
              {"inputs", inputs_},         {"outputs", outputs_},    {"wall_time_seconds", wall}};
    write_text(fs::path(common_.out_dir) / "run_manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  const Common& common_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json resolved_config(const CLI::App& sub, const Common& c) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help") continue;
    std::string key = name;
    key.erase(0, key.find_first_not_of('-'));
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_min() == 0) {
        j[key] = true;
      } else if (r.size() == 1) {
        j[key] = r.front();
      } else {
        j[key] = r;
      }
    } else if (opt->get_expected_min() == 0) {
      j[key] = false;
    } else {
      const std::string d = opt->get_default_str();
      j[key] = d.empty() ? json(nullptr) : json(d);
    }
  }
  if (j.contains("threads")) j["threads"] = resolve_threads(c.threads);
  return j;
}

void add_data_options(CLI::App* sub, Common& c, bool with_labels_flag) {
  sub->add_option("--data", c.data.path, "input data file");
  sub->add_option("--format", c.data.format, "input format")
      ->check(CLI::IsMember({"csv", "sparse"}));
  sub->add_option("--dim", c.data.dim, "feature dimension (required for sparse)");
  sub->add_flag("--header", c.data.header, "skip one header line in CSV input");
  if (with_labels_flag) {
    sub->add_flag("--labeled", c.data.labeled, "last CSV column holds labels in {+1,-1}");
  }
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--threads", c.threads, fmt::format("worker threads (fallback: ${})", kThreadsEnv));
  sub->add_option("--out-dir", c.out_dir, "directory for outputs and run_manifest.json");
}

void add_train_options(CLI::App* sub, TrainOptions& t) {
  sub->add_option("--algo", t.algo, "training algorithm")->check(CLI::IsMember({"grad", "grid"}));
  sub->add_option("--step-size", t.step_size, "gradient step size");
  sub->add_option("--max-iter", t.max_iterations, "gradient iterations");
  sub->add_option("--tolerance", t.tolerance, "relative risk change for convergence");
  sub->add_option("--refit", t.refit, "mixture refit at perturbed classifiers")
      ->check(CLI::IsMember({"warm", "cold", "frozen"}));
  sub->add_option("--grid-points", t.grid_points, "grid points per coordinate (odd)");
  sub->add_option("--window", t.window, "initial grid half-width");
  sub->add_option("--shrink", t.shrink, "window shrink factor");
  sub->add_option("--max-sweeps", t.max_sweeps, "grid sweeps");
  sub->add_flag("--literal-window", t.literal_window, "grid half-width 4 * grid-points");
}

TrainResult train_once(const Dataset& data, double py1, LossSpec loss, const TrainOptions& t,
                       const Common& c, int threads, std::optional<ClassifierParams> theta0,
                       const EvalHooks& hooks) {
  const Dataset unlabeled = data.without_labels();
  const LabelMarginals marginals = LabelMarginals::binary(py1);
  const FitConfig fit = fit_config_for(c, true);
  if (t.algo == "grid") {
    GridSearchConfig g;
    g.grid_points = t.grid_points;
    g.window = t.window;
    g.shrink = t.shrink;
    g.max_sweeps = t.max_sweeps;
    g.literal_window = t.literal_window;
    g.seed = c.seed;
    g.threads = threads;
    return train_grid_search(unlabeled.samples, marginals, loss, g, fit, std::move(theta0), hooks);
  }
  GradDescentConfig g;
  g.step_size = t.step_size;
  g.max_iterations = t.max_iterations;
  g.tolerance = t.tolerance;
  g.refit = t.refit == "cold" ? RefitMode::kCold
            : t.refit == "frozen" ? RefitMode::kFrozenFit
                                  : RefitMode::kWarmStart;
  g.seed = c.seed;
  g.threads = threads;
  return train_gradient_descent(unlabeled.samples, marginals, loss, g, fit, std::move(theta0), hooks);
}

LossSpec binary_loss(const std::string& name) {
  const LossSpec loss = LossSpec::parse(name);
  if (!loss.is_binary()) fail(ErrorKind::kConfig, fmt::format("loss '{}' is not binary", name));
  return loss;
}

// ---------------------------------------------------------------- commands

void cmd_estimate_risk(const Common& c, const CLI::App& sub, std::ostream& out) {
  Run run("estimate-risk", c);
  const double py1 = require_py1(c);
  const LossSpec loss = binary_loss(c.loss);
  if (c.theta.empty()) fail(ErrorKind::kConfig, "--theta is required");
  const Dataset data = load_data(c.data, c.data.labeled);
  const ClassifierParams theta = read_theta(c.theta);
  run.input(c.data.path);
  run.input(c.theta);

  const LabelMarginals marginals = LabelMarginals::binary(py1);
  const MarginValues values = margins_batch(theta, data.samples);
  const MixtureFit fit = fit_fixed_weight_mixture(values, marginals, fit_config_for(c, false));
  const RiskReport report = plugin_risk(fit, loss);

  json j;
  j["estimate"] = report.estimate;
  j["n"] = data.size();
  j["p_y"] = py1;
  j["loss"] = std::string(loss.name());
  j["mu"] = components_json(fit, true);
  j["sigma"] = components_json(fit, false);
  try {
    j["asympt_std"] = delta_method_risk_variance(fit, loss).asympt_std(data.size());
  } catch (const Error&) {
    j["asympt_std"] = nullptr;
  }
  if (data.labeled) {
    const double empirical = empirical_risk(data.samples, theta, loss).estimate;
    const double abs_err = std::abs(empirical - report.estimate);
    j["empirical"] = empirical;
    j["abs_err"] = abs_err;
    j["rel_err"] = abs_err / empirical;
  }
  const std::string text = j.dump() + "\n";
  write_text(run.output("risk.json"), text);
  out << text;
  run.write_manifest(resolved_config(sub, c));
}

void cmd_train(const Common& c, const TrainOptions& t, const CLI::App& sub, std::ostream& out) {
  Run run("train", c);
  const double py1 = require_py1(c);
  const LossSpec loss = binary_loss(c.loss);
  const Dataset data = load_data(c.data, c.data.labeled);
  run.input(c.data.path);
  std::optional<ClassifierParams> theta0;
  if (!c.theta.empty()) {
    theta0 = read_theta(c.theta);
    run.input(c.theta);
  }
  std::optional<Dataset> eval;
  if (!c.eval_data.empty()) {
    eval = load_eval(c);
    run.input(c.eval_data);
  }
  EvalHooks hooks;
  if (eval) hooks.labeled = &*eval;

  const TrainResult result =
      train_once(data, py1, loss, t, c, resolve_threads(c.threads), theta0, hooks);

  const fs::path theta_path = run.output("theta.txt");
  write_text(theta_path, theta_text(result.theta));
  const fs::path trace_path = run.output("trace.csv");
  std::ostringstream trace;
  result.trace.write_csv(trace);
  write_text(trace_path, trace.str());

  json j;
  j["algo"] = t.algo;
  j["status"] = result.trace.status;
  j["iterations"] = result.trace.records.back().iteration;
  j["risk_unsup"] = result.trace.records.back().risk_unsup;
  j["skipped_coordinates"] = result.trace.skipped_coordinates;
  if (eval) {
    j["risk_sup"] = *result.trace.records.back().risk_sup;
    j["error_rate"] = *result.trace.records.back().error_rate;
  }
  j["theta"] = theta_path.string();
  j["trace"] = trace_path.string();
  out << j.dump() << "\n";
  run.write_manifest(resolved_config(sub, c));
}

void cmd_misspec_sweep(const Common& c, const TrainOptions& t, const std::vector<double>& grid,
                       const CLI::App& sub, std::ostream& out) {
  Run run("misspec-sweep", c);
  if (grid.empty()) fail(ErrorKind::kConfig, "--py1-grid needs at least one value");
  if (c.eval_data.empty()) fail(ErrorKind::kConfig, "--eval-data is required");
  const LossSpec loss = binary_loss(c.loss);
  const Dataset data = load_data(c.data, c.data.labeled);
  const Dataset eval = load_eval(c);
  run.input(c.data.path);
  run.input(c.eval_data);
  std::optional<ClassifierParams> theta0;
  if (!c.theta.empty()) {
    theta0 = read_theta(c.theta);
    run.input(c.theta);
  }
  const int threads = resolve_threads(c.threads);

  std::string csv = "assumed_p,risk_unsup,risk_sup,error_rate,error\n";
  for (double p : grid) {
    try {
      if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::kConfig, fmt::format("assumed p {} outside (0, 1)", p));
      const TrainResult r = train_once(data, p, loss, t, c, threads, theta0, {});
      csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},\n", p, r.trace.records.back().risk_unsup,
                         empirical_risk(eval.samples, r.theta, loss).estimate,
                         error_rate(r.theta, eval.samples));
    } catch (const Error& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      csv += fmt::format("{:.17g},,,,{}: {}\n", p, to_string(e.kind()), msg);
    }
  }
  write_text(run.output("misspec.csv"), csv);
  out << csv;
  run.write_manifest(resolved_config(sub, c));
}

void cmd_asymvar(const Common& c, const std::string& axis_name, std::vector<double> grid,
                 const SurfaceBase& base, const CLI::App& sub, std::ostream& out) {
  Run run("asymvar", c);
  const LossSpec loss = binary_loss(c.loss);
  SurfaceAxis axis = SurfaceAxis::kImbalance;
  if (axis_name == "separation") axis = SurfaceAxis::kSeparation;
  if (axis_name == "ratio") axis = SurfaceAxis::kVarianceRatio;
  if (grid.empty()) {
    switch (axis) {
      case SurfaceAxis::kImbalance:
        grid = {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
        break;
      case SurfaceAxis::kSeparation:
        grid = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
        break;
      case SurfaceAxis::kVarianceRatio:
        grid = {0.5, 0.75, 1.0, 1.5, 2.0};
        break;
    }
  }
  const auto points = accuracy_surface(axis, grid, base, loss);
  std::ostringstream csv;
  write_surface_csv(csv, points);
  write_text(run.output("accuracy_surface.csv"), csv.str());
  out << csv.str();
  run.write_manifest(resolved_config(sub, c));
}

void cmd_normality(const Common& c, const std::string& cls, int bins, bool standardize,
                   const CLI::App& sub, std::ostream& out) {
  Run run("normality", c);
  if (c.theta.empty()) fail(ErrorKind::kConfig, "--theta is required");
  const bool conditional = !cls.empty();
  const Dataset data = load_data(c.data, c.data.labeled || conditional);
  const ClassifierParams theta = read_theta(c.theta);
  run.input(c.data.path);
  run.input(c.theta);

  std::vector<double> values;
  std::optional<MixtureFit> model;
  if (conditional) {
    if (!data.labeled) fail(ErrorKind::kData, "--class needs labeled data");
    const ClassId y = cls == "-1" ? -1 : 1;
    for (const Sample& s : data.samples) {
      if (s.label == y) values.push_back(margin(theta, s));
    }
    if (values.empty()) fail(ErrorKind::kData, fmt::format("no samples of class {}", cls));
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    model = MixtureFit::single(Gaussian{mean, std::sqrt(ss / n)});
  } else {
    const MarginValues all = margins_batch(theta, data.samples);
    values.assign(all.values().begin(), all.values().end());
    model = fit_fixed_weight_mixture(all, LabelMarginals::binary(require_py1(c)),
                                     fit_config_for(c, false));
  }
  const MarginValues margins(values);
  const NormalityReport report = normality_check(margins, *model, standardize);
  histogram_export(margins, *model, bins, run.output("histogram.csv"), standardize);

  json j;
  j["ks_statistic"] = report.ks_statistic;
  j["scaled_statistic"] = report.scaled_statistic();
  j["n"] = report.n;
  j["standardized"] = report.standardized;
  j["model"] = conditional ? "gaussian" : "mixture";
  j["mu"] = components_json(*model, true);
  j["sigma"] = components_json(*model, false);
  const std::string text = j.dump() + "\n";
  write_text(run.output("normality.json"), text);
  out << text;
  run.write_manifest(resolved_config(sub, c));
}

void cmd_synth(const Common& c, SynthConfig config, const std::string& family,
               const CLI::App& sub, std::ostream& out) {
  Run run("synth", c);
  config.family = family == "gaussian" ? SynthFamily::kGaussianShift : SynthFamily::kUniformShift;
  config.seed = c.seed;
  if (c.py1) config.p_positive = *c.py1;
  const SyntheticData synth = generate_synthetic(config);

  std::ostringstream data;
  const bool sparse = c.data.format == "sparse";
  if (sparse) {
    write_sparse(data, synth.dataset);
  } else {
    write_dense_csv(data, synth.dataset);
  }
  const fs::path data_path = run.output(sparse ? "synth.svm" : "synth.csv");
  write_text(data_path, data.str());
  const fs::path theta_path = run.output("theta_ref.txt");
  write_text(theta_path, theta_text(synth.reference_theta));

  json j;
  j["data"] = data_path.string();
  j["theta"] = theta_path.string();
  j["n"] = synth.dataset.size();
  j["dim"] = synth.dataset.dim;
  j["shift"] = synth.shift;
  j["calibration_accuracy"] = synth.calibration_accuracy;
  out << j.dump() << "\n";
  run.write_manifest(resolved_config(sub, c));
}

void report_error(std::ostream& err, ErrorKind kind, const std::string& message,
                  const std::string& usage = {}) {
  json j = {{"error", std::string(to_string(kind))}, {"message", message}, {"exit_code", exit_code(kind)}};
  if (!usage.empty()) j["usage"] = usage;
  err << j.dump() << "\n";
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kIdentifiability:
      return 1;
    case ErrorKind::kData:
    case ErrorKind::kDegenerateData:
    case ErrorKind::kDimension:
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
  }
  return 3;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unlabeled risk estimation and training for linear classifiers", "urisk"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);

  Common c;
  TrainOptions t;
  std::vector<double> py1_grid;
  std::string axis = "imbalance";
  std::vector<double> surface_grid;
  SurfaceBase base;
  std::string cls;
  int bins = 30;
  bool standardize = false;
  SynthConfig synth;
  std::string family = "uniform";

  auto* estimate = app.add_subcommand("estimate-risk", "plug-in risk of a classifier from unlabeled data");
  add_data_options(estimate, c, true);
  estimate->add_option("--theta", c.theta, "classifier weights file");
  estimate->add_option("--py1", c.py1, "known p(Y=+1)");
  estimate->add_option("--loss", c.loss, "loss")->check(CLI::IsMember({"exp", "log", "hinge"}));
  estimate->add_option("--restarts", c.restarts, "mixture fit restarts");
  add_common(estimate, c);

  auto* train = app.add_subcommand("train", "train a classifier without labels");
  add_data_options(train, c, true);
  train->add_option("--py1", c.py1, "known p(Y=+1)");
  train->add_option("--loss", c.loss, "loss")->check(CLI::IsMember({"exp", "log", "hinge"}));
  train->add_option("--theta", c.theta, "initial classifier weights file");
  train->add_option("--eval-data", c.eval_data, "labeled data for R_n and error rate per iteration");
  add_train_options(train, t);
  add_common(train, c);

  auto* misspec = app.add_subcommand("misspec-sweep", "train under a range of assumed p(Y=+1)");
  add_data_options(misspec, c, true);
  misspec->add_option("--py1-grid", py1_grid, "assumed p(Y=+1) values")->delimiter(',');
  misspec->add_option("--loss", c.loss, "loss")->check(CLI::IsMember({"exp", "log", "hinge"}));
  misspec->add_option("--theta", c.theta, "initial classifier weights file");
  misspec->add_option("--eval-data", c.eval_data, "labeled evaluation data");
  add_train_options(misspec, t);
  add_common(misspec, c);

  auto* asymvar = app.add_subcommand("asymvar", "asymptotic accuracy along one axis");
  asymvar->add_option("--axis", axis, "imbalance, separation or ratio")
      ->check(CLI::IsMember({"imbalance", "separation", "ratio"}));
  asymvar->add_option("--grid", surface_grid, "grid values")->delimiter(',');
  asymvar->add_option("--loss", c.loss, "loss")->check(CLI::IsMember({"exp", "log", "hinge"}));
  asymvar->add_option("--base-p", base.p_positive, "p(Y=+1) when not varied");
  asymvar->add_option("--base-sep", base.separation, "mean separation when not varied");
  asymvar->add_option("--base-sigma", base.sigma_negative, "sigma of class -1");
  asymvar->add_option("--base-ratio", base.sigma_ratio, "sigma_+1 / sigma_-1 when not varied");
  add_common(asymvar, c);

  auto* normality = app.add_subcommand("normality", "KS check of margins against a fitted model");
  add_data_options(normality, c, true);
  normality->add_option("--theta", c.theta, "classifier weights file");
  normality->add_option("--py1", c.py1, "known p(Y=+1) for the mixture model");
  normality->add_option("--class", cls, "check f(X) | Y=class against a single Gaussian")
      ->check(CLI::IsMember({"+1", "1", "-1"}));
  normality->add_option("--bins", bins, "histogram bins");
  normality->add_flag("--standardize", standardize, "centre and scale margins first");
  normality->add_option("--restarts", c.restarts, "mixture fit restarts");
  add_common(normality, c);

  auto* synthcmd = app.add_subcommand("synth", "generate labeled synthetic data");
  synthcmd->add_option("--dim", synth.dim, "dimension");
  synthcmd->add_option("--n", synth.n, "samples");
  synthcmd->add_option("--py1", c.py1, "p(Y=+1)");
  synthcmd->add_option("--accuracy", synth.target_accuracy, "target accuracy of theta_ref");
  synthcmd->add_option("--family", family, "uniform or gaussian")
      ->check(CLI::IsMember({"uniform", "gaussian"}));
  synthcmd->add_option("--format", c.data.format, "output format")
      ->check(CLI::IsMember({"csv", "sparse"}));
  add_common(synthcmd, c);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    report_error(err, ErrorKind::kConfig, e.what(), subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  try {
    if (chosen == estimate) {
      cmd_estimate_risk(c, *chosen, out);
    } else if (chosen == train) {
      cmd_train(c, t, *chosen, out);
    } else if (chosen == misspec) {
      cmd_misspec_sweep(c, t, py1_grid, *chosen, out);
    } else if (chosen == asymvar) {
      cmd_asymvar(c, axis, surface_grid, base, *chosen, out);
    } else if (chosen == normality) {
      cmd_normality(c, cls, bins, standardize, *chosen, out);
    } else {
      cmd_synth(c, synth, family, *chosen, out);
    }
  } catch (const Error& e) {
    const bool usage = e.kind() == ErrorKind::kConfig;
    report_error(err, e.kind(), e.what(), usage ? chosen->help() : std::string{});
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    report_error(err, ErrorKind::kIo, e.what());
    return exit_code(ErrorKind::kIo);
  }
  return 0;
}

}  // namespace urisk::cli
