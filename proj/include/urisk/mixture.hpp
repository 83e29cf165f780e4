#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "urisk/core.hpp"

namespace urisk {

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

/// One-dimensional Gaussian mixture whose weights are the known class priors.
/// The component stored under class y models f(X) | Y = y; there is no
/// relabeling, the weight p(y) is what ties a component to its class.
struct MixtureFit {
  LabelMarginals marginals;
  std::map<ClassId, Gaussian> components;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Loglikelihood before each M-step, then at the final parameters.
  std::vector<double> loglik_trace;
  std::size_t sample_size = 0;

  static MixtureFit binary(double p_positive, Gaussian positive, Gaussian negative);
  /// Single Gaussian wrapped as a one-class mixture (for diagnostics).
  static MixtureFit single(Gaussian g);

  const Gaussian& component(ClassId y) const;
  double mean(ClassId y) const { return component(y).mean; }
  double stddev(ClassId y) const { return component(y).stddev; }

  double pdf(double z) const;
  double log_pdf(double z) const;
  double cdf(double z) const;

  /// Components present for exactly the marginals' classes, finite, sigma >= 0.
  void validate(bool require_positive_sigma) const;
};

struct FitConfig {
  int max_iterations = 500;
  double loglik_rel_tolerance = 1e-9;
  int restarts = 5;
  double variance_floor_factor = 1e-8;
  /// The pooled fit (every component equal to the sample mean and variance)
  /// is always a candidate. It is kept unless a separated fit beats its
  /// loglikelihood by more than this many nats, plus (K-1) log n when
  /// `pooled_bic` is set (BIC for the 2(K-1) extra parameters).
  double pooled_margin_nats = 0.0;
  bool pooled_bic = true;
  std::uint64_t seed = 0;

  void validate() const;
};

double normal_log_pdf(double z, double mean, double stddev);

/// sum_i log sum_y p(y) N(values[i]; mu_y, sigma_y^2), using the priors given
/// in `marginals` and the component parameters of `fit`.
double loglikelihood(const MarginValues& values, const LabelMarginals& marginals,
                     const MixtureFit& fit);

/// Maximum likelihood means and standard deviations by EM with mixing weights
/// held at the known priors. Runs several initializations (quantile splits in
/// every class ordering, then seeded perturbations) and keeps the best.
MixtureFit fit_fixed_weight_mixture(const MarginValues& values, const LabelMarginals& marginals,
                                    const FitConfig& config);

/// One EM run started from `start` (warm start). Same preconditions as
/// fit_fixed_weight_mixture.
MixtureFit refine_mixture(const MarginValues& values, const MixtureFit& start,
                          const FitConfig& config);

/// Better of a warm-started run and a cold fit, by final loglikelihood.
MixtureFit fit_with_warm_start(const MarginValues& values, const LabelMarginals& marginals,
                               const FitConfig& config, const MixtureFit* warm_start);

/// For each score vector f_{theta^k}(X), a K-component fixed-weight mixture
/// estimating f_{theta^k}(X) | Y = k' for every class k'.
std::vector<MixtureFit> fit_multiclass_mixtures(std::span<const MarginValues> all_margins,
                                                const LabelMarginals& marginals,
                                                const FitConfig& config);

}  // namespace urisk
