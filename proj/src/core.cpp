#include "urisk/core.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace urisk {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIdentifiability: return "identifiability";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kData: return "data";
    case ErrorKind::kDegenerateData: return "degenerate-data";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

ClassifierParams::ClassifierParams(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) {
    fail(ErrorKind::kConfig, "classifier must have dimension >= 1");
  }
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (!std::isfinite(weights_[j])) {
      fail(ErrorKind::kConfig, fmt::format("classifier weight {} is not finite", j));
    }
  }
}

ClassifierParams ClassifierParams::zeros(std::size_t dim) {
  return ClassifierParams(std::vector<double>(dim, 0.0));
}

ClassifierParams ClassifierParams::with_coordinate(std::size_t j, double value) const {
  std::vector<double> w = weights_;
  w.at(j) = value;
  return ClassifierParams(std::move(w));
}

ClassifierParams ClassifierParams::scaled(double factor) const {
  std::vector<double> w = weights_;
  for (double& v : w) v *= factor;
  return ClassifierParams(std::move(w));
}

LabelMarginals::LabelMarginals(std::map<ClassId, double> priors)
    : priors_(std::move(priors)) {
  if (priors_.empty()) fail(ErrorKind::kConfig, "label marginals are empty");
  double total = 0.0;
  for (const auto& [y, p] : priors_) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      fail(ErrorKind::kConfig, fmt::format("prior for class {} must be in (0,1], got {}", y, p));
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    fail(ErrorKind::kConfig, fmt::format("priors sum to {:.17g}, expected 1", total));
  }
}

LabelMarginals LabelMarginals::binary(double p_positive) {
  if (!(p_positive > 0.0 && p_positive < 1.0)) {
    fail(ErrorKind::kConfig, fmt::format("p(Y=1) must be in (0,1), got {}", p_positive));
  }
  return LabelMarginals({{-1, 1.0 - p_positive}, {1, p_positive}});
}

double LabelMarginals::prior(ClassId y) const {
  auto it = priors_.find(y);
  if (it == priors_.end()) fail(ErrorKind::kConfig, fmt::format("no prior for class {}", y));
  return it->second;
}

bool LabelMarginals::is_binary() const {
  return priors_.size() == 2 && contains(-1) && contains(1);
}

bool LabelMarginals::is_identifiable() const {
  if (priors_.size() < 2) return false;
  for (auto a = priors_.begin(); a != priors_.end(); ++a) {
    for (auto b = std::next(a); b != priors_.end(); ++b) {
      if (a->second == b->second) return false;
    }
  }
  return true;
}

void LabelMarginals::require_identifiable() const {
  if (!is_identifiable()) {
    fail(ErrorKind::kIdentifiability,
         "label marginals must be pairwise distinct (uniform priors make the "
         "mixture unidentifiable up to label swap)");
  }
}

MarginValues::MarginValues(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorKind::kNumeric, fmt::format("margin value {} is not finite", i));
    }
  }
}

double margin(const ClassifierParams& params, std::span<const double> features) {
  if (features.size() != params.dim()) {
    fail(ErrorKind::kDimension, fmt::format("feature dimension {} does not match classifier dimension {}",
                                            features.size(), params.dim()));
  }
  const auto w = params.weights();
  const double value = std::inner_product(w.begin(), w.end(), features.begin(), 0.0);
  if (!std::isfinite(value)) fail(ErrorKind::kNumeric, "margin is not finite");
  return value;
}

double margin(const ClassifierParams& params, const Sample& sample) {
  return margin(params, std::span<const double>(sample.features));
}

MarginValues margins_batch(const ClassifierParams& params, std::span<const Sample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      out.push_back(margin(params, samples[i]));
    } catch (const Error& e) {
      fail(e.kind(), fmt::format("sample {}: {}", i, e.what()));
    }
  }
  return MarginValues(std::move(out));
}

}  // namespace urisk
