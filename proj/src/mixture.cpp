#include "urisk/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "urisk/random.hpp"

namespace urisk {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double log_sum_exp(std::span<const double> terms) {
  const double hi = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return hi + std::log(s);
}

struct Moments {
  double mean;
  double variance;
};

Moments moments(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / n};
}

// Parameters mid-EM, in the marginals' class order.
struct State {
  std::vector<double> log_prior;
  std::vector<double> mean;
  std::vector<double> var;
};

class FixedWeightEm {
 public:
  FixedWeightEm(const MarginValues& values, const LabelMarginals& marginals,
                const FitConfig& config)
      : z_(values.values()), marginals_(marginals), config_(config) {
    for (const auto& [y, p] : marginals.priors()) {
      classes_.push_back(y);
      log_prior_.push_back(std::log(p));
    }
    const Moments m = moments(z_);
    pooled_var_ = m.variance;
    var_floor_ = config.variance_floor_factor * m.variance;
    resp_.resize(z_.size() * classes_.size());
  }

  void prepare_sorted() {
    if (sorted_.empty()) {
      sorted_.assign(z_.begin(), z_.end());
      std::sort(sorted_.begin(), sorted_.end());
    }
  }

  const std::vector<ClassId>& classes() const { return classes_; }
  double pooled_var() const { return pooled_var_; }
  double var_floor() const { return var_floor_; }

  State quantile_init(std::span<const std::size_t> order) {
    prepare_sorted();
    const std::vector<double>& sorted = sorted_;
    const std::size_t k = classes_.size();
    State s{log_prior_, std::vector<double>(k), std::vector<double>(k)};
    const double n = static_cast<double>(sorted.size());
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t c = order[pos];
      cumulative += std::exp(log_prior_[c]);
      if (begin >= sorted.size()) begin = sorted.size() - 1;
      std::size_t end = pos + 1 == order.size()
                            ? sorted.size()
                            : static_cast<std::size_t>(std::llround(cumulative * n));
      end = std::clamp(end, begin + 1, sorted.size());
      const Moments m = moments(std::span<const double>(sorted).subspan(begin, end - begin));
      s.mean[c] = m.mean;
      s.var[c] = std::max(m.variance, var_floor_);
      begin = end;
    }
    return s;
  }

  State from_fit(const MixtureFit& fit) const {
    State s{log_prior_, {}, {}};
    for (ClassId y : classes_) {
      const Gaussian& g = fit.component(y);
      s.mean.push_back(g.mean);
      s.var.push_back(std::max(g.stddev * g.stddev, var_floor_));
    }
    return s;
  }

  MixtureFit run(State s) {
    const std::size_t k = classes_.size();
    const std::size_t n = z_.size();
    std::vector<double> terms(k);
    std::vector<double> trace;
    bool converged = false;
    int iter = 0;
    for (; iter < config_.max_iterations; ++iter) {
      const double ll = e_step(s, terms);
      if (!trace.empty()) {
        const double prev = trace.back();
        const double rel = (ll - prev) / std::max(std::abs(prev), 1e-300);
        trace.push_back(ll);
        if (rel < config_.loglik_rel_tolerance) {
          converged = true;
          break;
        }
      } else {
        trace.push_back(ll);
      }
      m_step(s);
    }
    if (!converged) trace.push_back(e_step(s, terms));
    if (polish(s, terms, trace)) converged = true;

    MixtureFit fit{marginals_, {}, trace.back(), iter, converged, std::move(trace), n};
    for (std::size_t c = 0; c < k; ++c) {
      fit.components[classes_[c]] = Gaussian{s.mean[c], std::sqrt(s.var[c])};
    }
    if (!std::isfinite(fit.loglik)) fail(ErrorKind::kNumeric, "mixture loglikelihood is not finite");
    return fit;
  }

 private:
  // Weighted mean and variance with the weights held fixed, from resp_.
  void m_step(State& s) const {
    const std::size_t k = classes_.size();
    const std::size_t n = z_.size();
    for (std::size_t c = 0; c < k; ++c) {
      double w = 0.0;
      double wz = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp_[i * k + c];
        w += r;
        wz += r * z_[i];
      }
      if (!(w > 1e-300)) continue;  // empty component keeps its parameters
      const double mean = wz / w;
      double wss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = z_[i] - mean;
        wss += resp_[i * k + c] * d * d;
      }
      s.mean[c] = mean;
      s.var[c] = std::max(wss / w, var_floor_);
    }
  }

  State em_map(const State& s, std::vector<double>& terms) {
    State out = s;
    e_step(s, terms);
    m_step(out);
    return out;
  }

  // EM stops on a loglikelihood criterion, which leaves the parameters
  // accurate only to about sqrt(tolerance). Risk finite differences need far
  // better, so a few Newton steps are taken on the fixed-point equation
  // M(x) = x, Jacobian by forward differences. A step is kept only if the
  // loglikelihood does not drop. Returns true when the residual is negligible.
  bool polish(State& s, std::vector<double>& terms, std::vector<double>& trace) {
    const std::size_t k = classes_.size();
    const int dims = static_cast<int>(2 * k);
    const auto pack = [&](const State& st) {
      Eigen::VectorXd x(dims);
      for (std::size_t c = 0; c < k; ++c) {
        x[2 * c] = st.mean[c];
        x[2 * c + 1] = st.var[c];
      }
      return x;
    };
    const auto unpack = [&](const Eigen::VectorXd& x) {
      State st{log_prior_, std::vector<double>(k), std::vector<double>(k)};
      for (std::size_t c = 0; c < k; ++c) {
        st.mean[c] = x[2 * c];
        st.var[c] = x[2 * c + 1];
      }
      return st;
    };
    // residual measured in units of each component's spread
    const auto small = [&](const Eigen::VectorXd& d, const Eigen::VectorXd& x) {
      for (std::size_t c = 0; c < k; ++c) {
        if (std::abs(d[2 * c]) > 1e-13 * std::sqrt(x[2 * c + 1])) return false;
        if (std::abs(d[2 * c + 1]) > 1e-13 * x[2 * c + 1]) return false;
      }
      return true;
    };

    double ll = trace.back();
    for (int it = 0; it < 6; ++it) {
      for (double v : s.var)
        if (v <= var_floor_ * (1.0 + 1e-9)) return false;  // floor active, not a smooth fixed point
      const Eigen::VectorXd x = pack(s);
      const Eigen::VectorXd mx = pack(em_map(s, terms));
      const Eigen::VectorXd g = mx - x;
      if (small(g, x)) return true;
      Eigen::MatrixXd jac(dims, dims);
      for (int j = 0; j < dims; ++j) {
        Eigen::VectorXd xp = x;
        const double scale = j % 2 == 0 ? std::sqrt(x[j + 1]) : x[j];
        const double h = 1e-7 * scale;
        xp[j] += h;
        jac.col(j) = (pack(em_map(unpack(xp), terms)) - mx) / h;
      }
      jac -= Eigen::MatrixXd::Identity(dims, dims);
      const Eigen::VectorXd dx = jac.fullPivLu().solve(-g);
      if (!dx.allFinite()) return false;
      const Eigen::VectorXd xn = x + dx;
      State next = unpack(xn);
      for (double v : next.var)
        if (!(v > var_floor_)) return false;
      const double ll_next = e_step(next, terms);
      if (!std::isfinite(ll_next) || ll_next < ll - 1e-12 * std::abs(ll)) return false;
      s = std::move(next);
      ll = ll_next;
      trace.push_back(ll);
      if (small(dx, xn)) return true;
    }
    return false;
  }

  // Fills responsibilities for the current state and returns the loglikelihood.
  double e_step(const State& s, std::vector<double>& terms) {
    const std::size_t k = classes_.size();
    std::vector<double> log_norm(k);
    for (std::size_t c = 0; c < k; ++c) {
      log_norm[c] = s.log_prior[c] - kLogSqrt2Pi - 0.5 * std::log(s.var[c]);
    }
    double ll = 0.0;
    if (k == 2) {
      // Two classes: one exp and one log1p per point.
      const double inv0 = 0.5 / s.var[0];
      const double inv1 = 0.5 / s.var[1];
      for (std::size_t i = 0; i < z_.size(); ++i) {
        const double d0 = z_[i] - s.mean[0];
        const double d1 = z_[i] - s.mean[1];
        const double t0 = log_norm[0] - d0 * d0 * inv0;
        const double t1 = log_norm[1] - d1 * d1 * inv1;
        const double e = std::exp(-std::abs(t1 - t0));
        const double hi = std::max(t0, t1);
        ll += hi + std::log1p(e);
        const double r_hi = 1.0 / (1.0 + e);
        resp_[2 * i] = t0 >= t1 ? r_hi : 1.0 - r_hi;
        resp_[2 * i + 1] = 1.0 - resp_[2 * i];
      }
      return ll;
    }
    for (std::size_t i = 0; i < z_.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        const double d = z_[i] - s.mean[c];
        terms[c] = log_norm[c] - 0.5 * d * d / s.var[c];
      }
      const double lse = log_sum_exp(terms);
      ll += lse;
      for (std::size_t c = 0; c < k; ++c) resp_[i * k + c] = std::exp(terms[c] - lse);
    }
    return ll;
  }

  std::span<const double> z_;
  const LabelMarginals& marginals_;
  const FitConfig& config_;
  std::vector<ClassId> classes_;
  std::vector<double> log_prior_;
  std::vector<double> resp_;
  std::vector<double> sorted_;
  double pooled_var_ = 0.0;
  double var_floor_ = 0.0;
};

void check_fit_inputs(const MarginValues& values, const LabelMarginals& marginals,
                      const FitConfig& config) {
  config.validate();
  marginals.require_identifiable();
  if (values.size() < 4) {
    fail(ErrorKind::kData, fmt::format("mixture fit needs at least 4 values, got {}", values.size()));
  }
  const auto v = values.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi || !(moments(v).variance > 0.0)) {
    fail(ErrorKind::kDegenerateData, "all margin values are identical; mixture fit is degenerate");
  }
}

std::size_t factorial_capped(std::size_t k, std::size_t cap) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= k && f < cap; ++i) f *= i;
  return std::min(f, cap);
}

}  // namespace

double normal_log_pdf(double z, double mean, double stddev) {
  const double u = (z - mean) / stddev;
  return -kLogSqrt2Pi - std::log(stddev) - 0.5 * u * u;
}

MixtureFit MixtureFit::binary(double p_positive, Gaussian positive, Gaussian negative) {
  MixtureFit fit{LabelMarginals::binary(p_positive), {{1, positive}, {-1, negative}}, 0.0, 0, true, {}};
  fit.validate(false);
  return fit;
}

MixtureFit MixtureFit::single(Gaussian g) {
  MixtureFit fit{LabelMarginals({{1, 1.0}}), {{1, g}}, 0.0, 0, true, {}};
  fit.validate(false);
  return fit;
}

const Gaussian& MixtureFit::component(ClassId y) const {
  auto it = components.find(y);
  if (it == components.end()) fail(ErrorKind::kConfig, fmt::format("mixture has no component for class {}", y));
  return it->second;
}

double MixtureFit::log_pdf(double z) const {
  std::vector<double> terms;
  terms.reserve(components.size());
  for (const auto& [y, p] : marginals.priors()) {
    const Gaussian& g = component(y);
    terms.push_back(std::log(p) + normal_log_pdf(z, g.mean, g.stddev));
  }
  return log_sum_exp(terms);
}

double MixtureFit::pdf(double z) const { return std::exp(log_pdf(z)); }

double MixtureFit::cdf(double z) const {
  double total = 0.0;
  for (const auto& [y, p] : marginals.priors()) {
    const Gaussian& g = component(y);
    const double phi = g.stddev > 0.0
                           ? 0.5 * std::erfc(-(z - g.mean) / (g.stddev * std::numbers::sqrt2))
                           : (z >= g.mean ? 1.0 : 0.0);
    total += p * phi;
  }
  return std::clamp(total, 0.0, 1.0);
}

void MixtureFit::validate(bool require_positive_sigma) const {
  if (components.size() != marginals.num_classes()) {
    fail(ErrorKind::kConfig, "mixture components do not match the label marginals");
  }
  for (const auto& [y, p] : marginals.priors()) {
    const Gaussian& g = component(y);
    if (!std::isfinite(g.mean) || !std::isfinite(g.stddev)) {
      fail(ErrorKind::kNumeric, fmt::format("mixture parameters for class {} are not finite", y));
    }
    if (g.stddev < 0.0 || (require_positive_sigma && !(g.stddev > 0.0))) {
      fail(ErrorKind::kConfig, fmt::format("standard deviation for class {} must be positive", y));
    }
  }
}

void FitConfig::validate() const {
  if (max_iterations < 1) fail(ErrorKind::kConfig, "max_iterations must be >= 1");
  if (!(loglik_rel_tolerance > 0.0)) fail(ErrorKind::kConfig, "loglik tolerance must be > 0");
  if (restarts < 1) fail(ErrorKind::kConfig, "restarts must be >= 1");
  if (!(variance_floor_factor >= 0.0)) fail(ErrorKind::kConfig, "variance floor factor must be >= 0");
  if (!(pooled_margin_nats >= 0.0) || !std::isfinite(pooled_margin_nats)) {
    fail(ErrorKind::kConfig, "pooled margin must be finite and >= 0");
  }
}

double loglikelihood(const MarginValues& values, const LabelMarginals& marginals,
                     const MixtureFit& fit) {
  if (values.empty()) fail(ErrorKind::kData, "loglikelihood of an empty sample");
  fit.validate(true);
  std::vector<double> log_weight;
  std::vector<Gaussian> comps;
  for (const auto& [y, p] : marginals.priors()) {
    log_weight.push_back(std::log(p));
    comps.push_back(fit.component(y));
  }
  std::vector<double> terms(comps.size());
  double ll = 0.0;
  for (double z : values.values()) {
    for (std::size_t c = 0; c < comps.size(); ++c) {
      terms[c] = log_weight[c] + normal_log_pdf(z, comps[c].mean, comps[c].stddev);
    }
    ll += log_sum_exp(terms);
  }
  return ll;
}

namespace {

MixtureFit best_em_fit(FixedWeightEm& em, const FitConfig& config) {
  const std::size_t k = em.classes().size();
  const std::size_t orderings = factorial_capped(k, 24);
  const std::size_t runs = std::max<std::size_t>(config.restarts, orderings);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<std::size_t>> perms;
  for (std::size_t r = 0; r < orderings; ++r) {
    perms.push_back(order);
    std::next_permutation(order.begin(), order.end());
  }

  std::mt19937_64 rng(splitmix64(config.seed));
  std::normal_distribution<double> jitter(0.0, 0.5 * std::sqrt(em.pooled_var()));

  std::optional<MixtureFit> best;
  for (std::size_t r = 0; r < runs; ++r) {
    State init = em.quantile_init(perms[r % orderings]);
    if (r >= orderings) {
      for (double& m : init.mean) m += jitter(rng);
    }
    MixtureFit fit = em.run(std::move(init));
    if (!best || fit.loglik > best->loglik) best = std::move(fit);
  }
  return *std::move(best);
}

// All components at the sample moments: a fixed point of EM for any priors.
MixtureFit pooled_fit(const MarginValues& values, const LabelMarginals& marginals) {
  const Moments m = moments(values.values());
  MixtureFit fit{marginals, {}, 0.0, 0, true, {}, values.size()};
  for (const auto& [y, p] : marginals.priors()) fit.components[y] = Gaussian{m.mean, std::sqrt(m.variance)};
  fit.loglik = loglikelihood(values, marginals, fit);
  fit.loglik_trace = {fit.loglik};
  return fit;
}

MixtureFit prefer_pooled(const MarginValues& values, const LabelMarginals& marginals,
                         const FitConfig& config, MixtureFit separated) {
  MixtureFit pooled = pooled_fit(values, marginals);
  double margin = config.pooled_margin_nats;
  if (config.pooled_bic) {
    margin += static_cast<double>(marginals.num_classes() - 1) * std::log(static_cast<double>(values.size()));
  }
  return separated.loglik > pooled.loglik + margin ? separated : pooled;
}

}  // namespace

MixtureFit fit_fixed_weight_mixture(const MarginValues& values, const LabelMarginals& marginals,
                                    const FitConfig& config) {
  check_fit_inputs(values, marginals, config);
  FixedWeightEm em(values, marginals, config);
  return prefer_pooled(values, marginals, config, best_em_fit(em, config));
}

MixtureFit refine_mixture(const MarginValues& values, const MixtureFit& start,
                          const FitConfig& config) {
  check_fit_inputs(values, start.marginals, config);
  start.validate(false);
  FixedWeightEm em(values, start.marginals, config);
  return em.run(em.from_fit(start));
}

MixtureFit fit_with_warm_start(const MarginValues& values, const LabelMarginals& marginals,
                               const FitConfig& config, const MixtureFit* warm_start) {
  check_fit_inputs(values, marginals, config);
  FixedWeightEm em(values, marginals, config);
  MixtureFit best = best_em_fit(em, config);
  if (warm_start != nullptr && warm_start->marginals == marginals) {
    warm_start->validate(false);
    MixtureFit warm = em.run(em.from_fit(*warm_start));
    if (warm.loglik > best.loglik) best = std::move(warm);
  }
  return prefer_pooled(values, marginals, config, std::move(best));
}

std::vector<MixtureFit> fit_multiclass_mixtures(std::span<const MarginValues> all_margins,
                                                const LabelMarginals& marginals,
                                                const FitConfig& config) {
  if (marginals.num_classes() < 2) fail(ErrorKind::kConfig, "multiclass fit needs K >= 2");
  marginals.require_identifiable();
  if (all_margins.size() != marginals.num_classes()) {
    fail(ErrorKind::kConfig, fmt::format("expected {} margin vectors, got {}",
                                         marginals.num_classes(), all_margins.size()));
  }
  std::vector<MixtureFit> fits;
  fits.reserve(all_margins.size());
  for (const MarginValues& values : all_margins) {
    fits.push_back(fit_fixed_weight_mixture(values, marginals, config));
  }
  return fits;
}

}  // namespace urisk
