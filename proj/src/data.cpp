#include "urisk/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "urisk/random.hpp"

namespace urisk {

namespace {

constexpr std::size_t kCalibrationDraws = 100000;
constexpr double kShiftUpper = 4.0;
constexpr int kBisectionSteps = 40;

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<ClassId> parse_binary_label(std::string_view s) {
  s = trim(s);
  if (s == "+1" || s == "1") return 1;
  if (s == "-1") return -1;
  return std::nullopt;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  return in;
}

// Standard normal or centred unit-width uniform noise, per family.
template <class Rng>
double draw_noise(SynthFamily family, Rng& rng) {
  if (family == SynthFamily::kUniformShift) {
    return std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  }
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Calibration draw summarized by the reference-classifier score of the noise
// alone; the margin at shift s is base + y * s * sqrt(d) / 2.
struct CalibrationDraw {
  std::vector<double> base;
  std::vector<ClassId> labels;
};

CalibrationDraw calibration_draw(const SynthConfig& config, std::size_t draws) {
  std::mt19937_64 rng(splitmix64(config.seed ^ 0xca11b7a7e5eedULL));
  std::bernoulli_distribution positive(config.p_positive);
  CalibrationDraw out;
  out.base.reserve(draws);
  out.labels.reserve(draws);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config.dim));
  for (std::size_t i = 0; i < draws; ++i) {
    out.labels.push_back(positive(rng) ? 1 : -1);
    double s = 0.0;
    for (std::size_t j = 0; j < config.dim; ++j) s += draw_noise(config.family, rng);
    out.base.push_back(s * inv_sqrt_d);
  }
  return out;
}

double accuracy_on(const CalibrationDraw& draw, double shift, std::size_t dim) {
  const double offset = 0.5 * shift * std::sqrt(static_cast<double>(dim));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < draw.base.size(); ++i) {
    const double m = draw.base[i] + draw.labels[i] * offset;
    const ClassId predicted = m >= 0.0 ? 1 : -1;
    if (predicted == draw.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(draw.base.size());
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

void Dataset::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.features.size() != dim) {
      fail(ErrorKind::kDimension, fmt::format("sample {} has dimension {}, expected {}", i, s.features.size(), dim));
    }
    if (s.label.has_value() != labeled) {
      fail(ErrorKind::kData, fmt::format("sample {} label presence is inconsistent with the dataset", i));
    }
    for (double v : s.features) {
      if (!std::isfinite(v)) fail(ErrorKind::kData, fmt::format("sample {} has a non-finite feature", i));
    }
  }
}

std::vector<ClassId> Dataset::labels() const {
  if (!labeled) fail(ErrorKind::kData, "dataset is unlabeled");
  std::vector<ClassId> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(*s.label);
  return out;
}

Dataset Dataset::without_labels() const {
  Dataset out = *this;
  for (Sample& s : out.samples) s.label.reset();
  out.labeled = false;
  return out;
}

void SynthConfig::validate() const {
  if (dim < 1) fail(ErrorKind::kConfig, "synthetic dimension must be >= 1");
  if (n < 1) fail(ErrorKind::kConfig, "synthetic sample count must be >= 1");
  if (!(p_positive > 0.0 && p_positive < 1.0)) fail(ErrorKind::kConfig, "p(Y=1) must be in (0,1)");
  if (!(target_accuracy > 0.5 && target_accuracy < 1.0)) {
    fail(ErrorKind::kConfig, fmt::format("target accuracy must be strictly between 0.5 and 1, got {}", target_accuracy));
  }
}

double reference_accuracy_at_shift(const SynthConfig& config, double shift, std::size_t draws) {
  return accuracy_on(calibration_draw(config, draws), shift, config.dim);
}

SyntheticData generate_synthetic(const SynthConfig& config) {
  config.validate();

  const CalibrationDraw calib = calibration_draw(config, kCalibrationDraws);
  if (accuracy_on(calib, kShiftUpper, config.dim) < config.target_accuracy - 0.005) {
    fail(ErrorKind::kConfig, fmt::format("target accuracy {} is unattainable within shift [0, {}]",
                                         config.target_accuracy, kShiftUpper));
  }
  double lo = 0.0;
  double hi = kShiftUpper;
  for (int step = 0; step < kBisectionSteps; ++step) {
    const double mid = 0.5 * (lo + hi);
    (accuracy_on(calib, mid, config.dim) < config.target_accuracy ? lo : hi) = mid;
  }
  const double shift = 0.5 * (lo + hi);
  const double calibrated = accuracy_on(calib, shift, config.dim);
  if (std::abs(calibrated - config.target_accuracy) > 0.005) {
    fail(ErrorKind::kConfig, fmt::format("calibration reached accuracy {}, target {}", calibrated, config.target_accuracy));
  }

  std::mt19937_64 rng(splitmix64(config.seed));
  std::bernoulli_distribution positive(config.p_positive);
  Dataset data;
  data.dim = config.dim;
  data.labeled = true;
  data.provenance = fmt::format("synthetic family={} d={} n={} p1={} accuracy={} seed={}",
                                config.family == SynthFamily::kUniformShift ? "uniform" : "gaussian",
                                config.dim, config.n, config.p_positive, config.target_accuracy, config.seed);
  data.samples.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const ClassId y = positive(rng) ? 1 : -1;
    Sample s{std::vector<double>(config.dim), y};
    const double center = 0.5 * shift * y;
    for (double& x : s.features) x = center + draw_noise(config.family, rng);
    data.samples.push_back(std::move(s));
  }

  const double w = 1.0 / std::sqrt(static_cast<double>(config.dim));
  return SyntheticData{std::move(data), ClassifierParams(std::vector<double>(config.dim, w)), shift, calibrated};
}

Dataset parse_dense_csv(std::istream& in, const DenseCsvOptions& options, std::string provenance) {
  Dataset data;
  data.labeled = options.has_labels;
  data.provenance = std::move(provenance);
  std::string line;
  std::size_t row = 0;
  std::optional<std::size_t> columns;
  if (options.header) {
    std::getline(in, line);
    ++row;
  }
  while (std::getline(in, line)) {
    ++row;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = text.find(',', start);
      cells.push_back(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!columns) {
      columns = cells.size();
    } else if (cells.size() != *columns) {
      fail(ErrorKind::kData, fmt::format("row {}: expected {} columns, found {}", row, *columns, cells.size()));
    }
    const std::size_t label_col = options.label_column.value_or(cells.size() - 1);
    if (options.has_labels && label_col >= cells.size()) {
      fail(ErrorKind::kData, fmt::format("row {}: label column {} out of range", row, label_col));
    }
    Sample s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (options.has_labels && c == label_col) {
        s.label = parse_binary_label(cells[c]);
        if (!s.label) fail(ErrorKind::kData, fmt::format("row {}: unknown label '{}'", row, trim(cells[c])));
        continue;
      }
      const auto v = parse_double(cells[c]);
      if (!v) fail(ErrorKind::kData, fmt::format("row {}, column {}: '{}' is not a number", row, c + 1, trim(cells[c])));
      s.features.push_back(*v);
    }
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) fail(ErrorKind::kData, "dense CSV contains no rows");
  data.dim = data.samples.front().features.size();
  if (data.dim == 0) fail(ErrorKind::kData, "dense CSV has no feature columns");
  if (options.expected_dim && *options.expected_dim != data.dim) {
    fail(ErrorKind::kData, fmt::format("dense CSV has {} feature columns, declared dimension is {}",
                                       data.dim, *options.expected_dim));
  }
  data.validate();
  return data;
}

Dataset load_dense_csv(const std::filesystem::path& path, const DenseCsvOptions& options) {
  auto in = open_input(path);
  return parse_dense_csv(in, options, path.string());
}

Dataset parse_sparse(std::istream& in, std::size_t dim, std::string provenance) {
  if (dim < 1) fail(ErrorKind::kConfig, "sparse input needs a declared dimension >= 1");
  Dataset data;
  data.dim = dim;
  data.provenance = std::move(provenance);
  std::string line;
  std::size_t lineno = 0;
  std::optional<bool> labeled;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream tokens{std::string(trim(line))};
    std::string token;
    if (!(tokens >> token)) continue;

    Sample s{std::vector<double>(dim, 0.0), std::nullopt};
    if (token != "?") {
      s.label = parse_binary_label(token);
      if (!s.label) fail(ErrorKind::kData, fmt::format("line {}: unknown label '{}'", lineno, token));
    }
    if (labeled && *labeled != s.label.has_value()) {
      fail(ErrorKind::kData, fmt::format("line {}: mixes labeled and unlabeled samples", lineno));
    }
    labeled = s.label.has_value();

    std::size_t previous = 0;
    while (tokens >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos) {
        fail(ErrorKind::kData, fmt::format("line {}: expected idx:val, found '{}'", lineno, token));
      }
      std::size_t index = 0;
      const std::string_view idx_text(token.data(), colon);
      const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || index == 0) {
        fail(ErrorKind::kData, fmt::format("line {}: invalid index '{}'", lineno, idx_text));
      }
      if (index > dim) fail(ErrorKind::kData, fmt::format("line {}: index {} exceeds dimension {}", lineno, index, dim));
      if (index <= previous) fail(ErrorKind::kData, fmt::format("line {}: indices must be strictly increasing", lineno));
      const auto v = parse_double(std::string_view(token).substr(colon + 1));
      if (!v) fail(ErrorKind::kData, fmt::format("line {}: invalid value in '{}'", lineno, token));
      s.features[index - 1] = *v;
      previous = index;
    }
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) fail(ErrorKind::kData, "sparse input contains no samples");
  data.labeled = labeled.value_or(false);
  data.validate();
  return data;
}

Dataset load_sparse(const std::filesystem::path& path, std::size_t dim) {
  auto in = open_input(path);
  return parse_sparse(in, dim, path.string());
}

void write_dense_csv(std::ostream& out, const Dataset& dataset) {
  for (const Sample& s : dataset.samples) {
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      if (j > 0) out << ',';
      out << format_number(s.features[j]);
    }
    if (dataset.labeled) out << ',' << (*s.label > 0 ? "+1" : "-1");
    out << '\n';
  }
}

void write_sparse(std::ostream& out, const Dataset& dataset) {
  for (const Sample& s : dataset.samples) {
    out << (s.label ? (*s.label > 0 ? "+1" : "-1") : "?");
    for (std::size_t j = 0; j < s.features.size(); ++j) {
      if (s.features[j] != 0.0) out << ' ' << (j + 1) << ':' << format_number(s.features[j]);
    }
    out << '\n';
  }
}

std::pair<Dataset, StandardizationTable> standardize(const Dataset& dataset) {
  Dataset out = dataset;
  StandardizationTable table;
  const std::size_t n = dataset.size();
  const std::size_t d = dataset.dim;
  table.mean.assign(d, 0.0);
  table.stddev.assign(d, 1.0);
  table.constant.assign(d, false);
  if (n < 2) return {std::move(out), std::move(table)};

  for (const Sample& s : dataset.samples) {
    for (std::size_t j = 0; j < d; ++j) table.mean[j] += s.features[j];
  }
  for (double& m : table.mean) m /= static_cast<double>(n);
  std::vector<double> ss(d, 0.0);
  for (const Sample& s : dataset.samples) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = s.features[j] - table.mean[j];
      ss[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(ss[j] / static_cast<double>(n));
    if (sd > 0.0) {
      table.stddev[j] = sd;
    } else {
      table.constant[j] = true;
    }
  }
  for (Sample& s : out.samples) {
    for (std::size_t j = 0; j < d; ++j) s.features[j] = (s.features[j] - table.mean[j]) / table.stddev[j];
  }
  return {std::move(out), std::move(table)};
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorKind::kConfig, "split fraction must be in (0,1)");
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(splitmix64(seed ^ 0x5b117ULL));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(dataset.size())));
  Dataset first{{}, dataset.dim, dataset.labeled, dataset.provenance + " [split a]"};
  Dataset second{{}, dataset.dim, dataset.labeled, dataset.provenance + " [split b]"};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    (k < cut ? first : second).samples.push_back(dataset.samples[idx[k]]);
  }
  return {std::move(first), std::move(second)};
}

}  // namespace urisk
