#include "urisk/risk.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "urisk/quadrature.hpp"

namespace urisk {

namespace {

void require_binary_label(ClassId y) {
  if (y != 1 && y != -1) fail(ErrorKind::kData, fmt::format("binary label must be -1 or +1, got {}", y));
}

double finite_or_fail(double value, std::string_view what) {
  if (!std::isfinite(value)) fail(ErrorKind::kNumeric, fmt::format("{} is not finite", what));
  return value;
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double expected_log_loss(ClassId y, double mu, double sigma) {
  auto g = [y](double a) { return softplus(-static_cast<double>(y) * a); };
  const double coarse =
      quadrature::gaussian_expectation(quadrature::cached_gauss_hermite(64), mu, sigma, g);
  const double fine =
      quadrature::gaussian_expectation(quadrature::cached_gauss_hermite(128), mu, sigma, g);
  if (std::abs(fine - coarse) <= 1e-9 * std::abs(fine)) return fine;

  const double two_pi_sqrt = std::sqrt(2.0 * std::numbers::pi);
  auto integrand = [&](double a) {
    const double u = (a - mu) / sigma;
    return g(a) * std::exp(-0.5 * u * u) / (two_pi_sqrt * sigma);
  };
  const auto result =
      quadrature::adaptive_simpson(integrand, mu - 10.0 * sigma, mu + 10.0 * sigma, 1e-10);
  if (!result.converged) fail(ErrorKind::kNumeric, "log-loss quadrature did not converge");
  return result.value;
}

}  // namespace

bool LossSpec::is_binary() const {
  return kind == LossKind::kExp || kind == LossKind::kLog || kind == LossKind::kHinge;
}

std::string_view LossSpec::name() const {
  switch (kind) {
    case LossKind::kExp: return "exp";
    case LossKind::kLog: return "log";
    case LossKind::kHinge: return "hinge";
    case LossKind::kMulticlassLog: return "multiclass-log";
    case LossKind::kMulticlassHinge: return "multiclass-hinge";
  }
  return "unknown";
}

LossSpec LossSpec::parse(std::string_view name) {
  if (name == "exp") return {LossKind::kExp};
  if (name == "log") return {LossKind::kLog};
  if (name == "hinge") return {LossKind::kHinge};
  if (name == "multiclass-log") return {LossKind::kMulticlassLog};
  if (name == "multiclass-hinge") return {LossKind::kMulticlassHinge};
  fail(ErrorKind::kConfig, fmt::format("unknown loss '{}'", name));
}

std::string_view to_string(RiskMethod method) {
  return method == RiskMethod::kPlugin ? "plugin" : "empirical";
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double loss_eval(LossSpec loss, ClassId y, double margin) {
  if (!std::isfinite(margin)) fail(ErrorKind::kNumeric, "loss evaluated at a non-finite margin");
  require_binary_label(y);
  const double ya = static_cast<double>(y) * margin;
  switch (loss.kind) {
    case LossKind::kExp: return std::exp(-ya);
    case LossKind::kLog: return softplus(-ya);
    case LossKind::kHinge: return std::max(0.0, 1.0 - ya);
    default: break;
  }
  fail(ErrorKind::kConfig, fmt::format("loss '{}' needs a score vector", loss.name()));
}

double loss_eval(LossSpec loss, ClassId y, std::span<const double> scores) {
  if (loss.is_binary()) fail(ErrorKind::kConfig, fmt::format("loss '{}' is binary", loss.name()));
  if (y < 1 || static_cast<std::size_t>(y) > scores.size()) {
    fail(ErrorKind::kData, fmt::format("class {} outside 1..{}", y, scores.size()));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (static_cast<ClassId>(k + 1) == y) continue;
    const double f = scores[k];
    if (!std::isfinite(f)) fail(ErrorKind::kNumeric, "loss evaluated at a non-finite score");
    total += loss.kind == LossKind::kMulticlassLog ? softplus(-f) : std::max(0.0, 1.0 + f);
  }
  return total;
}

double mean_loss(LossSpec loss, std::span<const ClassId> labels, std::span<const double> margins) {
  if (labels.size() != margins.size()) fail(ErrorKind::kDimension, "labels and margins differ in length");
  if (labels.empty()) fail(ErrorKind::kData, "empirical risk of an empty sample");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total += loss_eval(loss, labels[i], margins[i]);
  return total / static_cast<double>(labels.size());
}

RiskReport empirical_risk(std::span<const Sample> labeled, const ClassifierParams& params,
                          LossSpec loss) {
  if (!loss.is_binary()) fail(ErrorKind::kConfig, "empirical risk supports binary losses");
  if (labeled.empty()) fail(ErrorKind::kData, "empirical risk of an empty sample");
  double total = 0.0;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled[i].label) fail(ErrorKind::kData, fmt::format("sample {} has no label", i));
    total += loss_eval(loss, *labeled[i].label, margin(params, labeled[i]));
  }
  RiskReport report;
  report.estimate = total / static_cast<double>(labeled.size());
  report.method = RiskMethod::kEmpirical;
  report.loss = loss;
  report.n = labeled.size();
  return report;
}

double conditional_expected_loss(LossSpec loss, ClassId y, double mu, double sigma) {
  if (!(sigma >= 0.0)) fail(ErrorKind::kConfig, fmt::format("sigma must be >= 0, got {}", sigma));
  if (!std::isfinite(mu) || !std::isfinite(sigma)) fail(ErrorKind::kNumeric, "non-finite Gaussian parameters");
  require_binary_label(y);
  if (sigma == 0.0) return loss_eval(loss, y, mu);

  const double yd = static_cast<double>(y);
  switch (loss.kind) {
    case LossKind::kExp:
      return finite_or_fail(std::exp(-yd * mu + 0.5 * sigma * sigma), "expected exponential loss");
    case LossKind::kHinge: {
      const double k = 1.0 - yd * mu;
      const double u = k / sigma;
      return finite_or_fail(k * std_normal_cdf(u) + sigma * std_normal_pdf(u), "expected hinge loss");
    }
    case LossKind::kLog:
      return finite_or_fail(expected_log_loss(y, mu, sigma), "expected log loss");
    default: break;
  }
  fail(ErrorKind::kConfig, fmt::format("loss '{}' is not a binary loss", loss.name()));
}

RiskReport plugin_risk(const MixtureFit& fit, LossSpec loss) {
  if (!loss.is_binary()) fail(ErrorKind::kConfig, "use plugin_risk_multiclass for multiclass losses");
  fit.validate(false);
  if (!fit.marginals.is_binary()) fail(ErrorKind::kConfig, "plugin_risk needs binary marginals");
  double total = 0.0;
  for (const auto& [y, p] : fit.marginals.priors()) {
    const Gaussian& g = fit.component(y);
    total += p * conditional_expected_loss(loss, y, g.mean, g.stddev);
  }
  RiskReport report;
  report.estimate = total;
  report.method = RiskMethod::kPlugin;
  report.loss = loss;
  report.n = fit.sample_size;
  report.fit = fit;
  return report;
}

RiskReport plugin_risk_multiclass(std::span<const MixtureFit> fits, LossSpec loss) {
  if (loss.is_binary()) fail(ErrorKind::kConfig, fmt::format("loss '{}' is binary", loss.name()));
  if (fits.size() < 2) fail(ErrorKind::kConfig, "multiclass risk needs K >= 2 fits");
  const LabelMarginals& marginals = fits.front().marginals;
  const std::size_t num_classes = fits.size();
  if (marginals.num_classes() != num_classes) {
    fail(ErrorKind::kConfig, "number of fits must equal the number of classes");
  }
  for (const MixtureFit& fit : fits) {
    fit.validate(false);
    if (!(fit.marginals == marginals)) fail(ErrorKind::kConfig, "fits use inconsistent marginals");
  }
  for (std::size_t k = 1; k <= num_classes; ++k) {
    if (!marginals.contains(static_cast<ClassId>(k))) {
      fail(ErrorKind::kConfig, fmt::format("multiclass classes must be 1..{}", num_classes));
    }
  }

  // (1 + f)_+ is the binary hinge at y = -1 and log(1 + e^{-f}) the binary
  // log loss at y = +1, so each term reuses the one-dimensional expectation.
  const LossSpec term_loss{loss.kind == LossKind::kMulticlassLog ? LossKind::kLog : LossKind::kHinge};
  const ClassId term_label = loss.kind == LossKind::kMulticlassLog ? 1 : -1;

  double total = 0.0;
  for (const auto& [y, p] : marginals.priors()) {
    double inner = 0.0;
    for (std::size_t k = 1; k <= num_classes; ++k) {
      if (static_cast<ClassId>(k) == y) continue;
      const Gaussian& g = fits[k - 1].component(y);
      inner += conditional_expected_loss(term_loss, term_label, g.mean, g.stddev);
    }
    total += p * inner;
  }
  RiskReport report;
  report.estimate = total;
  report.method = RiskMethod::kPlugin;
  report.loss = loss;
  report.n = fits.front().sample_size;
  return report;
}

}  // namespace urisk
