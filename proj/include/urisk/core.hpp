#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "urisk/error.hpp"

namespace urisk {

/// Class identifier. Binary problems use -1 and +1, multiclass uses 1..K.
using ClassId = int;

/// Weight vector of a linear score f(x) = sum_j w_j x_j. No intercept; append
/// a constant feature during ingestion if a bias is needed.
class ClassifierParams {
 public:
  explicit ClassifierParams(std::vector<double> weights);

  static ClassifierParams zeros(std::size_t dim);

  std::size_t dim() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t j) const { return weights_[j]; }

  /// Copy with coordinate j replaced; the result is validated like any other.
  ClassifierParams with_coordinate(std::size_t j, double value) const;
  ClassifierParams scaled(double factor) const;

 private:
  std::vector<double> weights_;
};

struct Sample {
  std::vector<double> features;
  std::optional<ClassId> label;
};

/// Known class prior p(Y). Positivity and normalization are enforced on
/// construction; the distinctness required for identifiability is checked
/// separately so that uniform priors can still be used for evaluation.
class LabelMarginals {
 public:
  explicit LabelMarginals(std::map<ClassId, double> priors);

  /// Binary prior with p(Y=+1) = p_positive.
  static LabelMarginals binary(double p_positive);

  std::size_t num_classes() const noexcept { return priors_.size(); }
  const std::map<ClassId, double>& priors() const noexcept { return priors_; }
  double prior(ClassId y) const;
  bool contains(ClassId y) const { return priors_.count(y) != 0; }
  bool is_binary() const;

  /// All priors pairwise distinct (binary: p(+1) != p(-1)).
  bool is_identifiable() const;
  /// Throws ErrorKind::kIdentifiability unless is_identifiable().
  void require_identifiable() const;

  bool operator==(const LabelMarginals&) const = default;

 private:
  std::map<ClassId, double> priors_;
};

/// Margin values f(x_i) for a dataset, all finite.
class MarginValues {
 public:
  MarginValues() = default;
  explicit MarginValues(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

double margin(const ClassifierParams& params, std::span<const double> features);
double margin(const ClassifierParams& params, const Sample& sample);

MarginValues margins_batch(const ClassifierParams& params,
                           std::span<const Sample> samples);

}  // namespace urisk
