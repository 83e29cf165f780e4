#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "urisk/core.hpp"
#include "urisk/mixture.hpp"

namespace urisk {

/// Kolmogorov-Smirnov distance between the empirical CDF of the margins and
/// the CDF of a fitted model. The model is usually fitted to the same data,
/// so classical KS p-values would be conservative; none are reported.
struct NormalityReport {
  double ks_statistic = 0.0;
  std::size_t n = 0;
  MixtureFit model;
  bool standardized = false;

  double scaled_statistic() const;  // ks * sqrt(n)
};

/// Model for (z - shift) / scale when z follows `fit`.
MixtureFit affine_transform(const MixtureFit& fit, double shift, double scale);

double ks_statistic(std::span<const double> values, const MixtureFit& model);

/// With `standardize`, values are centred and scaled by their empirical mean
/// and (population) standard deviation and the model is transformed to match.
NormalityReport normality_check(const MarginValues& values, const MixtureFit& model,
                                bool standardize = false);

struct HistogramRow {
  double bin_center = 0.0;
  double empirical_density = 0.0;
  double model_density = 0.0;
};

std::vector<HistogramRow> histogram(const MarginValues& values, const MixtureFit& model, int bins,
                                    bool standardize = false);

void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows);

/// Writes `bin_center,empirical_density,model_density` to path.
void histogram_export(const MarginValues& values, const MixtureFit& model, int bins,
                      const std::filesystem::path& path, bool standardize = false);

}  // namespace urisk
