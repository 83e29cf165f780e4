#include "urisk/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "urisk/parallel.hpp"
#include "urisk/random.hpp"

namespace urisk {

namespace {

constexpr int kMaxInitialPerturbations = 20;

void require_binary(const LabelMarginals& marginals, LossSpec loss) {
  if (!marginals.is_binary()) fail(ErrorKind::kConfig, "training supports binary problems only");
  if (!loss.is_binary()) {
    fail(ErrorKind::kConfig, fmt::format("training needs a binary loss, got {}", loss.name()));
  }
  marginals.require_identifiable();
}

void require_dims(std::span<const Sample> samples, const ClassifierParams& theta) {
  if (samples.empty()) fail(ErrorKind::kData, "training set is empty");
  if (samples.front().features.size() != theta.dim()) {
    fail(ErrorKind::kDimension, fmt::format("theta has dimension {}, samples have {}", theta.dim(),
                                            samples.front().features.size()));
  }
}

bool all_zero(const ClassifierParams& theta) {
  const auto w = theta.weights();
  return std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
}

TraceRecord make_record(int iteration, double risk, const ClassifierParams& theta, LossSpec loss,
                        const EvalHooks& hooks) {
  TraceRecord rec;
  rec.iteration = iteration;
  rec.risk_unsup = risk;
  if (hooks.labeled != nullptr) {
    rec.risk_sup = empirical_risk(hooks.labeled->samples, theta, loss).estimate;
    rec.error_rate = error_rate(theta, hooks.labeled->samples);
  }
  return rec;
}

/// The zero classifier (and any classifier giving constant margins) cannot be
/// evaluated. Nudge theta with small seeded noise until it can.
UnsupervisedEvaluation evaluate_start(ClassifierParams& theta, std::span<const Sample> samples,
                                      const LabelMarginals& marginals, LossSpec loss,
                                      const FitConfig& fit_config, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x7e57a27ULL));
  std::normal_distribution<double> noise(0.0, 1e-2);
  for (int attempt = 0;; ++attempt) {
    try {
      return unsupervised_risk_at(theta, samples, marginals, loss, fit_config);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateData || attempt >= kMaxInitialPerturbations) throw;
      std::vector<double> w(theta.weights().begin(), theta.weights().end());
      for (double& x : w) x += noise(rng);
      theta = ClassifierParams(std::move(w));
    }
  }
}

/// One M-step on `values` with responsibilities taken from `fit` evaluated at
/// `reference` (the margins the fit was estimated on).
MixtureFit frozen_moment_update(const MarginValues& reference, const MarginValues& values,
                                const MixtureFit& fit, double variance_floor_factor) {
  const auto& priors = fit.marginals.priors();
  const std::size_t n = values.size();
  double mean_all = 0.0;
  for (double v : values.values()) mean_all += v;
  mean_all /= static_cast<double>(n);
  double var_all = 0.0;
  for (double v : values.values()) var_all += (v - mean_all) * (v - mean_all);
  var_all /= static_cast<double>(n);
  const double floor = variance_floor_factor * var_all;

  MixtureFit out = fit;
  for (const auto& [y, prior] : priors) {
    double sw = 0.0, sz = 0.0;
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      double own = 0.0;
      for (const auto& [c, pc] : priors) {
        const Gaussian& gc = fit.component(c);
        const double d = pc * std::exp(normal_log_pdf(reference[i], gc.mean, gc.stddev));
        total += d;
        if (c == y) own = d;
      }
      r[i] = total > 0.0 ? own / total : prior;
      sw += r[i];
      sz += r[i] * values[i];
    }
    if (!(sw > 0.0)) continue;
    const double mu = sz / sw;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += r[i] * (values[i] - mu) * (values[i] - mu);
    out.components[y] = Gaussian{mu, std::sqrt(std::max(ss / sw, floor))};
  }
  return out;
}

}  // namespace

void GradDescentConfig::validate() const {
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) {
    fail(ErrorKind::kConfig, fmt::format("step size must be finite and >= 0, got {}", step_size));
  }
  if (!(fd_relative_step > 0.0) || !(fd_min_step > 0.0)) {
    fail(ErrorKind::kConfig, "finite-difference steps must be positive");
  }
  if (max_iterations < 0) fail(ErrorKind::kConfig, "max_iterations must be >= 0");
  if (!(tolerance >= 0.0)) fail(ErrorKind::kConfig, "tolerance must be >= 0");
  if (stall_patience < 1) fail(ErrorKind::kConfig, "stall patience must be >= 1");
}

void GridSearchConfig::validate() const {
  if (grid_points < 3 || grid_points % 2 == 0) {
    fail(ErrorKind::kConfig, fmt::format("grid_points must be odd and >= 3, got {}", grid_points));
  }
  if (!(window > 0.0) || !std::isfinite(window)) {
    fail(ErrorKind::kConfig, "grid window must be positive and finite");
  }
  if (!(shrink > 0.0 && shrink < 1.0)) fail(ErrorKind::kConfig, "shrink factor must be in (0, 1)");
  if (max_sweeps < 0) fail(ErrorKind::kConfig, "max_sweeps must be >= 0");
  if (!(min_window > 0.0)) fail(ErrorKind::kConfig, "min_window must be positive");
}

void TrainTrace::write_csv(std::ostream& out) const {
  out << "iter,risk_unsup,risk_sup,error_rate\n";
  for (const TraceRecord& r : records) {
    out << r.iteration << ',' << fmt::format("{:.17g}", r.risk_unsup) << ',';
    if (r.risk_sup) out << fmt::format("{:.17g}", *r.risk_sup);
    out << ',';
    if (r.error_rate) out << fmt::format("{:.17g}", *r.error_rate);
    out << '\n';
  }
}

UnsupervisedEvaluation unsupervised_risk_at(const ClassifierParams& theta,
                                            std::span<const Sample> samples,
                                            const LabelMarginals& marginals, LossSpec loss,
                                            const FitConfig& fit_config,
                                            const MixtureFit* warm_start) {
  const MarginValues values = margins_batch(theta, samples);
  MixtureFit fit = fit_with_warm_start(values, marginals, fit_config, warm_start);
  RiskReport report = plugin_risk(fit, loss);
  report.n = values.size();
  return {std::move(report), std::move(fit)};
}

FitConfig default_training_fit_config() {
  FitConfig c;
  c.restarts = 2;
  c.loglik_rel_tolerance = 1e-12;
  c.max_iterations = 2000;
  return c;
}

ClassifierParams random_initial_theta(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) fail(ErrorKind::kDimension, "theta dimension must be positive");
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> w(dim);
  for (double& x : w) x = u(rng);
  return ClassifierParams(std::move(w));
}

TrainResult train_gradient_descent(std::span<const Sample> samples, const LabelMarginals& marginals,
                                   LossSpec loss, const GradDescentConfig& config,
                                   const FitConfig& fit_config,
                                   std::optional<ClassifierParams> theta0, const EvalHooks& hooks) {
  config.validate();
  fit_config.validate();
  require_binary(marginals, loss);
  if (samples.empty()) fail(ErrorKind::kData, "training set is empty");
  if (theta0 && all_zero(*theta0)) {
    fail(ErrorKind::kConfig, "zero initial theta is a degenerate starting point");
  }
  ClassifierParams theta = theta0 ? *theta0
                                  : random_initial_theta(samples.front().features.size(), config.seed);
  require_dims(samples, theta);

  UnsupervisedEvaluation current =
      evaluate_start(theta, samples, marginals, loss, fit_config, config.seed);
  TrainTrace trace;
  trace.records.push_back(make_record(0, current.report.estimate, theta, loss, hooks));

  const std::size_t d = theta.dim();
  const MarginValues* reference = nullptr;
  MarginValues reference_values;
  int stall = 0;
  trace.status = "max-iterations";

  for (int t = 1; t <= config.max_iterations; ++t) {
    if (config.refit == RefitMode::kFrozenFit) {
      reference_values = margins_batch(theta, samples);
      reference = &reference_values;
    }
    // Slot 2j is theta + h e_j, slot 2j+1 is theta - h e_j.
    std::vector<double> risks(2 * d, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> steps(d);
    for (std::size_t j = 0; j < d; ++j) {
      steps[j] = std::max(config.fd_min_step, config.fd_relative_step * std::abs(theta[j]));
    }
    parallel_for(2 * d, config.threads, [&](std::size_t slot) {
      const std::size_t j = slot / 2;
      const double sign = slot % 2 == 0 ? 1.0 : -1.0;
      try {
        const ClassifierParams probe = theta.with_coordinate(j, theta[j] + sign * steps[j]);
        const MarginValues values = margins_batch(probe, samples);
        MixtureFit fit = [&] {
          switch (config.refit) {
            case RefitMode::kWarmStart:
              return refine_mixture(values, current.fit, fit_config);
            case RefitMode::kCold:
              return fit_fixed_weight_mixture(values, marginals, fit_config);
            case RefitMode::kFrozenFit:
              break;
          }
          return frozen_moment_update(*reference, values, current.fit,
                                      fit_config.variance_floor_factor);
        }();
        risks[slot] = plugin_risk(fit, loss).estimate;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateData && e.kind() != ErrorKind::kNumeric) throw;
      }
    });

    std::vector<double> w(theta.weights().begin(), theta.weights().end());
    bool moved = false;
    for (std::size_t j = 0; j < d; ++j) {
      const double rp = risks[2 * j];
      const double rm = risks[2 * j + 1];
      if (!std::isfinite(rp) || !std::isfinite(rm)) {
        ++trace.skipped_coordinates;
        continue;
      }
      const double step = config.step_size * (rp - rm) / (2.0 * steps[j]);
      if (step != 0.0) moved = true;
      w[j] -= step;
    }
    if (!moved) {
      trace.status = "stalled";
      break;
    }
    ClassifierParams next(std::move(w));
    UnsupervisedEvaluation next_eval = [&] {
      try {
        return unsupervised_risk_at(next, samples, marginals, loss, fit_config, &current.fit);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateData) throw;
        return evaluate_start(next, samples, marginals, loss, fit_config, config.seed + t);
      }
    }();
    const double previous = current.report.estimate;
    const double risk = next_eval.report.estimate;
    theta = std::move(next);
    current = std::move(next_eval);
    trace.records.push_back(make_record(t, risk, theta, loss, hooks));

    stall = risk >= previous ? stall + 1 : 0;
    if (stall >= config.stall_patience) {
      trace.status = "stalled";
      break;
    }
    const double rel = std::abs(previous - risk) / std::max(std::abs(previous), 1e-300);
    if (risk < previous && rel < config.tolerance) {
      trace.status = "converged";
      break;
    }
  }
  return {std::move(theta), std::move(trace)};
}

TrainResult train_grid_search(std::span<const Sample> samples, const LabelMarginals& marginals,
                              LossSpec loss, const GridSearchConfig& config,
                              const FitConfig& fit_config, std::optional<ClassifierParams> theta0,
                              const EvalHooks& hooks) {
  config.validate();
  fit_config.validate();
  require_binary(marginals, loss);
  if (samples.empty()) fail(ErrorKind::kData, "training set is empty");
  if (theta0 && all_zero(*theta0)) {
    fail(ErrorKind::kConfig, "zero initial theta is a degenerate starting point");
  }
  ClassifierParams theta = theta0 ? *theta0
                                  : random_initial_theta(samples.front().features.size(), config.seed);
  require_dims(samples, theta);

  UnsupervisedEvaluation current =
      evaluate_start(theta, samples, marginals, loss, fit_config, config.seed);
  TrainTrace trace;
  trace.records.push_back(make_record(0, current.report.estimate, theta, loss, hooks));
  trace.status = "max-iterations";

  const std::size_t g = static_cast<std::size_t>(config.grid_points);
  const std::size_t mid = g / 2;
  double window = config.literal_window ? 4.0 * config.grid_points : config.window;
  if (window < config.min_window) trace.status = "converged";

  for (int sweep = 1; sweep <= config.max_sweeps && window >= config.min_window; ++sweep) {
    bool changed = false;
    for (std::size_t j = 0; j < theta.dim(); ++j) {
      const double center = theta[j];
      std::vector<double> values(g);
      for (std::size_t k = 0; k < g; ++k) {
        values[k] = k == mid ? center
                             : center + window * (2.0 * static_cast<double>(k) / (g - 1) - 1.0);
      }
      std::vector<std::optional<UnsupervisedEvaluation>> evals(g);
      parallel_for(g, config.threads, [&](std::size_t k) {
        if (k == mid) return;
        try {
          evals[k] = unsupervised_risk_at(theta.with_coordinate(j, values[k]), samples, marginals,
                                          loss, fit_config, &current.fit);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kDegenerateData && e.kind() != ErrorKind::kNumeric) throw;
        }
      });
      std::size_t best = mid;
      double best_risk = current.report.estimate;
      for (std::size_t k = 0; k < g; ++k) {
        if (k == mid || !evals[k]) continue;
        const double r = evals[k]->report.estimate;
        if (r > best_risk) continue;
        if (r == best_risk) {
          const double dk = std::abs(values[k] - center);
          const double db = std::abs(values[best] - center);
          if (dk > db || (dk == db && values[k] >= values[best])) continue;
        }
        best = k;
        best_risk = r;
      }
      if (best != mid) {
        theta = theta.with_coordinate(j, values[best]);
        current = std::move(*evals[best]);
        changed = true;
      }
    }
    trace.records.push_back(make_record(sweep, current.report.estimate, theta, loss, hooks));
    if (!changed) {
      window *= config.shrink;
      if (window < config.min_window) trace.status = "converged";
    }
  }
  return {std::move(theta), std::move(trace)};
}

std::vector<double> empirical_risk_gradient(std::span<const Sample> labeled,
                                            const ClassifierParams& theta, LossSpec loss) {
  if (!loss.is_binary()) fail(ErrorKind::kConfig, "analytic gradient needs a binary loss");
  if (labeled.empty()) fail(ErrorKind::kData, "gradient of an empty sample");
  std::vector<double> grad(theta.dim(), 0.0);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const Sample& s = labeled[i];
    if (!s.label || (*s.label != 1 && *s.label != -1)) {
      fail(ErrorKind::kData, fmt::format("sample {} needs a label in {{-1, +1}}", i));
    }
    const double y = *s.label;
    const double ya = y * margin(theta, s);
    double dl = 0.0;  // d loss / d(y a)
    switch (loss.kind) {
      case LossKind::kExp:
        dl = -std::exp(-ya);
        break;
      case LossKind::kLog:
        dl = ya >= 0.0 ? -std::exp(-ya) / (1.0 + std::exp(-ya)) : -1.0 / (1.0 + std::exp(ya));
        break;
      case LossKind::kHinge:
        dl = ya < 1.0 ? -1.0 : 0.0;
        break;
      default:
        break;
    }
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += dl * y * s.features[j];
  }
  for (double& g : grad) g /= static_cast<double>(labeled.size());
  return grad;
}

ClassifierParams train_supervised_baseline(std::span<const Sample> labeled, LossSpec loss,
                                           const SupervisedConfig& config,
                                           std::optional<ClassifierParams> theta0) {
  if (!loss.is_binary()) fail(ErrorKind::kConfig, "supervised baseline needs a binary loss");
  if (labeled.empty()) fail(ErrorKind::kData, "supervised baseline needs labeled samples");
  if (!(config.step_size > 0.0)) fail(ErrorKind::kConfig, "step size must be positive");
  ClassifierParams theta = theta0 ? *theta0 : ClassifierParams::zeros(labeled.front().features.size());
  require_dims(labeled, theta);

  double step = config.step_size;
  ClassifierParams best = theta;
  double best_risk = empirical_risk(labeled, theta, loss).estimate;
  double risk = best_risk;
  int increases = 0;
  int failures = 0;
  for (int it = 0; it < config.max_iterations; ++it) {
    const auto grad = empirical_risk_gradient(labeled, theta, loss);
    std::vector<double> w(theta.weights().begin(), theta.weights().end());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step * grad[j];
    ClassifierParams next(std::move(w));
    const double next_risk = empirical_risk(labeled, next, loss).estimate;
    increases = next_risk > risk ? increases + 1 : 0;
    const double rel = std::abs(risk - next_risk) / std::max(std::abs(risk), 1e-300);
    theta = std::move(next);
    risk = next_risk;
    if (risk < best_risk) {
      best_risk = risk;
      best = theta;
    }
    if (increases >= config.divergence_patience) {
      if (++failures >= config.max_failures) {
        fail(ErrorKind::kNumeric, "supervised baseline diverged after repeated step halving");
      }
      step *= 0.5;
      theta = best;
      risk = best_risk;
      increases = 0;
      continue;
    }
    if (increases == 0 && rel < config.tolerance) break;
  }
  return best;
}

double error_rate(const ClassifierParams& theta, std::span<const Sample> labeled) {
  if (labeled.empty()) fail(ErrorKind::kData, "error rate of an empty sample");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const Sample& s = labeled[i];
    if (!s.label || (*s.label != 1 && *s.label != -1)) {
      fail(ErrorKind::kData, fmt::format("sample {} needs a label in {{-1, +1}}", i));
    }
    const int predicted = margin(theta, s) >= 0.0 ? 1 : -1;
    if (predicted != *s.label) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labeled.size());
}

}  // namespace urisk
