#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urisk/core.hpp"

namespace urisk {

struct Dataset {
  std::vector<Sample> samples;
  std::size_t dim = 0;
  bool labeled = false;
  std::string provenance;

  std::size_t size() const noexcept { return samples.size(); }
  /// Homogeneous dimension, finite entries, labels present iff `labeled`.
  void validate() const;
  std::vector<ClassId> labels() const;
  Dataset without_labels() const;
};

enum class SynthFamily { kUniformShift, kGaussianShift };

struct SynthConfig {
  std::size_t dim = 100;
  std::size_t n = 1000;
  double p_positive = 0.5;
  double target_accuracy = 0.9;
  SynthFamily family = SynthFamily::kUniformShift;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  ClassifierParams reference_theta;
  double shift = 0.0;               // per-dimension separation between class means
  double calibration_accuracy = 0.0;  // accuracy of reference_theta on the calibration draw
};

/// Features are independent per dimension. Class -1 is centred at -shift/2
/// and class +1 at +shift/2 in every dimension, with unit-width uniform or
/// unit-variance Gaussian noise. The shift is calibrated by bisection so that
/// the reference classifier (1,...,1)/sqrt(d) reaches the target accuracy on
/// a separate 10^5-sample calibration draw.
SyntheticData generate_synthetic(const SynthConfig& config);

/// Accuracy of the reference classifier at a given shift, measured on the
/// calibration stream for `config`.
double reference_accuracy_at_shift(const SynthConfig& config, double shift, std::size_t draws);

struct DenseCsvOptions {
  bool has_labels = false;
  std::optional<std::size_t> label_column;  // default: last column
  std::optional<std::size_t> expected_dim;
  bool header = false;
};

Dataset parse_dense_csv(std::istream& in, const DenseCsvOptions& options, std::string provenance = "stream");
Dataset load_dense_csv(const std::filesystem::path& path, const DenseCsvOptions& options);

/// Lines of `label idx:val ...` with 1-based strictly increasing indices;
/// label `?` marks an unlabeled sample.
Dataset parse_sparse(std::istream& in, std::size_t dim, std::string provenance = "stream");
Dataset load_sparse(const std::filesystem::path& path, std::size_t dim);

/// Features then (if labeled) the label as the last column, 17 significant digits.
void write_dense_csv(std::ostream& out, const Dataset& dataset);
void write_sparse(std::ostream& out, const Dataset& dataset);

struct StandardizationTable {
  std::vector<double> mean;
  std::vector<double> stddev;     // population convention; 1 for constant features
  std::vector<bool> constant;
};

std::pair<Dataset, StandardizationTable> standardize(const Dataset& dataset);

/// Deterministic shuffled split; the first part holds round(fraction * n) samples.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double fraction, std::uint64_t seed);

}  // namespace urisk
