#include "urisk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

namespace urisk {

namespace {

struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;
};

Standardizer empirical_standardizer(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  return {mean, sd > 0.0 ? sd : 1.0};
}

std::vector<double> standardize_values(std::span<const double> v, const Standardizer& s) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = (x - s.mean) / s.scale;
  return out;
}

}  // namespace

double NormalityReport::scaled_statistic() const {
  return ks_statistic * std::sqrt(static_cast<double>(n));
}

MixtureFit affine_transform(const MixtureFit& fit, double shift, double scale) {
  if (!(scale > 0.0)) fail(ErrorKind::kConfig, "affine scale must be positive");
  MixtureFit out = fit;
  for (auto& [y, g] : out.components) {
    g.mean = (g.mean - shift) / scale;
    g.stddev /= scale;
  }
  return out;
}

double ks_statistic(std::span<const double> values, const MixtureFit& model) {
  if (values.empty()) fail(ErrorKind::kData, "KS statistic of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    // Ties share one CDF jump.
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double f = model.cdf(sorted[i]);
    d = std::max({d, static_cast<double>(j + 1) / n - f, f - static_cast<double>(i) / n});
    i = j + 1;
  }
  return std::clamp(d, 0.0, 1.0);
}

NormalityReport normality_check(const MarginValues& values, const MixtureFit& model, bool standardize) {
  if (values.size() < 20) {
    fail(ErrorKind::kData, fmt::format("normality check needs n >= 20, got {}", values.size()));
  }
  model.validate(true);
  if (!standardize) {
    return NormalityReport{ks_statistic(values.values(), model), values.size(), model, false};
  }
  const Standardizer s = empirical_standardizer(values.values());
  MixtureFit transformed = affine_transform(model, s.mean, s.scale);
  const double ks = ks_statistic(standardize_values(values.values(), s), transformed);
  return NormalityReport{ks, values.size(), std::move(transformed), true};
}

std::vector<HistogramRow> histogram(const MarginValues& values, const MixtureFit& model, int bins,
                                    bool standardize) {
  if (values.empty()) fail(ErrorKind::kData, "histogram of an empty sample");
  if (bins < 5) fail(ErrorKind::kConfig, fmt::format("histogram needs at least 5 bins, got {}", bins));
  model.validate(true);

  std::vector<double> v(values.values().begin(), values.values().end());
  MixtureFit m = model;
  if (standardize) {
    const Standardizer s = empirical_standardizer(v);
    v = standardize_values(v, s);
    m = affine_transform(model, s.mean, s.scale);
  }
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  std::vector<std::size_t> counts(bins, 0);
  for (double x : v) {
    auto b = static_cast<long>((x - lo) / width);
    b = std::clamp<long>(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::vector<HistogramRow> rows;
  rows.reserve(bins);
  const double n = static_cast<double>(v.size());
  for (int b = 0; b < bins; ++b) {
    const double center = lo + (b + 0.5) * width;
    rows.push_back({center, static_cast<double>(counts[b]) / (n * width), m.pdf(center)});
  }
  return rows;
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows) {
  out << "bin_center,empirical_density,model_density\n";
  for (const HistogramRow& r : rows) {
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", r.bin_center, r.empirical_density, r.model_density);
  }
}

void histogram_export(const MarginValues& values, const MixtureFit& model, int bins,
                      const std::filesystem::path& path, bool standardize) {
  const auto rows = histogram(values, model, bins, standardize);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, fmt::format("cannot write '{}'", path.string()));
  write_histogram_csv(out, rows);
  if (!out) fail(ErrorKind::kIo, fmt::format("failed writing '{}'", path.string()));
}

}  // namespace urisk
