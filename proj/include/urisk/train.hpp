#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urisk/core.hpp"
#include "urisk/data.hpp"
#include "urisk/mixture.hpp"
#include "urisk/risk.hpp"

namespace urisk {

/// How the mixture is re-estimated at the perturbed classifiers used for the
/// finite-difference gradient.
enum class RefitMode {
  kWarmStart,  // EM started from the fit at the current classifier
  kCold,       // independent fit with the usual restarts
  kFrozenFit,  // responsibilities frozen at the current fit, one moment update
};

struct GradDescentConfig {
  double step_size = 2.0;
  double fd_relative_step = 1e-4;  // h_i = max(fd_min_step, fd_relative_step * |theta_i|)
  double fd_min_step = 1e-4;
  int max_iterations = 100;
  double tolerance = 1e-6;         // on the relative change of the risk estimate
  int stall_patience = 10;
  std::uint64_t seed = 0;
  RefitMode refit = RefitMode::kWarmStart;
  int threads = 1;

  void validate() const;
};

struct GridSearchConfig {
  int grid_points = 17;         // odd, so the current value is on the grid
  double window = 2.0;          // half-width of the per-coordinate search range
  double shrink = 0.5;
  int max_sweeps = 40;
  double min_window = 1e-3;
  /// Half-width 4 * grid_points instead of `window`.
  bool literal_window = false;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  double risk_unsup = 0.0;
  std::optional<double> risk_sup;
  std::optional<double> error_rate;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  std::string status;  // converged, max-iterations, stalled
  /// Gradient coordinates dropped because a perturbed fit failed.
  std::size_t skipped_coordinates = 0;

  /// `iter,risk_unsup,risk_sup,error_rate`, empty fields where labels are absent.
  void write_csv(std::ostream& out) const;
};

/// Labeled data used only for reporting R_n and the error rate per iteration.
struct EvalHooks {
  const Dataset* labeled = nullptr;
};

struct TrainResult {
  ClassifierParams theta;
  TrainTrace trace;
};

struct UnsupervisedEvaluation {
  RiskReport report;
  MixtureFit fit;
};

/// Margins, fixed-weight mixture fit, plug-in risk -- the quantity both
/// trainers minimize.
UnsupervisedEvaluation unsupervised_risk_at(const ClassifierParams& theta,
                                            std::span<const Sample> samples,
                                            const LabelMarginals& marginals, LossSpec loss,
                                            const FitConfig& fit_config,
                                            const MixtureFit* warm_start = nullptr);

/// Fit configuration used by the trainers unless one is supplied.
FitConfig default_training_fit_config();

/// Coordinates drawn uniformly from (-2, 2).
ClassifierParams random_initial_theta(std::size_t dim, std::uint64_t seed);

TrainResult train_gradient_descent(std::span<const Sample> samples, const LabelMarginals& marginals,
                                   LossSpec loss, const GradDescentConfig& config,
                                   const FitConfig& fit_config,
                                   std::optional<ClassifierParams> theta0 = std::nullopt,
                                   const EvalHooks& hooks = {});

TrainResult train_grid_search(std::span<const Sample> samples, const LabelMarginals& marginals,
                              LossSpec loss, const GridSearchConfig& config,
                              const FitConfig& fit_config,
                              std::optional<ClassifierParams> theta0 = std::nullopt,
                              const EvalHooks& hooks = {});

struct SupervisedConfig {
  double step_size = 1.0;
  int max_iterations = 10000;
  double tolerance = 1e-10;
  int divergence_patience = 10;
  int max_failures = 5;
};

/// Gradient of the empirical risk with respect to theta.
std::vector<double> empirical_risk_gradient(std::span<const Sample> labeled,
                                            const ClassifierParams& theta, LossSpec loss);

/// Labeled gradient descent on the empirical risk, the comparison baseline.
ClassifierParams train_supervised_baseline(std::span<const Sample> labeled, LossSpec loss,
                                           const SupervisedConfig& config = {},
                                           std::optional<ClassifierParams> theta0 = std::nullopt);

/// Fraction of samples with sign(f(x)) != y, where sign(0) = +1.
double error_rate(const ClassifierParams& theta, std::span<const Sample> labeled);

}  // namespace urisk
