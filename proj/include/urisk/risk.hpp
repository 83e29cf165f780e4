#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "urisk/core.hpp"
#include "urisk/mixture.hpp"

namespace urisk {

enum class LossKind { kExp, kLog, kHinge, kMulticlassLog, kMulticlassHinge };

struct LossSpec {
  LossKind kind = LossKind::kLog;

  bool is_binary() const;
  std::string_view name() const;
  /// Accepts exp, log, hinge, multiclass-log, multiclass-hinge.
  static LossSpec parse(std::string_view name);

  bool operator==(const LossSpec&) const = default;
};

/// log(1 + exp(x)) without overflow.
double softplus(double x);

/// Binary losses on the margin alpha = f(x) with y in {-1, +1}:
/// exp(-y a), log(1 + exp(-y a)), (1 - y a)_+.
double loss_eval(LossSpec loss, ClassId y, double margin);

/// Multiclass losses on the score vector (scores[k-1] = f_{theta^k}(x)),
/// y in 1..K:  sum_{k != y} log(1 + exp(-f_k))  or  sum_{k != y} (1 + f_k)_+.
double loss_eval(LossSpec loss, ClassId y, std::span<const double> scores);

enum class RiskMethod { kPlugin, kEmpirical };

std::string_view to_string(RiskMethod method);

struct RiskReport {
  double estimate = 0.0;
  RiskMethod method = RiskMethod::kPlugin;
  LossSpec loss;
  std::size_t n = 0;
  std::optional<MixtureFit> fit;
  std::optional<double> asympt_std;
};

/// Mean loss over labeled samples (labels in {-1, +1}).
RiskReport empirical_risk(std::span<const Sample> labeled, const ClassifierParams& params,
                          LossSpec loss);

/// Mean loss from precomputed margins and labels.
double mean_loss(LossSpec loss, std::span<const ClassId> labels, std::span<const double> margins);

/// E[L(y, A)] for A ~ Normal(mu, sigma^2); sigma == 0 is a point mass at mu.
/// Exponential and hinge use closed forms, log loss uses Gauss-Hermite with
/// an adaptive Simpson fallback when 64 and 128 nodes disagree.
double conditional_expected_loss(LossSpec loss, ClassId y, double mu, double sigma);

/// sum_y p(y) E[L(y, A_y)], A_y ~ Normal(mu_y, sigma_y^2) from the fit.
RiskReport plugin_risk(const MixtureFit& fit, LossSpec loss);

/// Multiclass plug-in estimate. fits[k-1] is the K-component mixture fitted
/// to f_{theta^k}(X); its component for class y estimates f_{theta^k}(X) | Y=y.
RiskReport plugin_risk_multiclass(std::span<const MixtureFit> fits, LossSpec loss);

}  // namespace urisk
