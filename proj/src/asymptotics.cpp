#include "urisk/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "urisk/quadrature.hpp"

namespace urisk {

namespace {

constexpr std::array<ClassId, 2> kClasses{1, -1};

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

void require_binary_fit(const MixtureFit& eta) {
  if (!eta.marginals.is_binary()) fail(ErrorKind::kConfig, "asymptotics need a binary mixture");
  eta.validate(true);
}

}  // namespace

EtaVector to_eta(const MixtureFit& fit) {
  EtaVector eta;
  eta << fit.mean(1), fit.mean(-1), fit.stddev(1) * fit.stddev(1), fit.stddev(-1) * fit.stddev(-1);
  return eta;
}

MixtureFit from_eta(const EtaVector& eta, const LabelMarginals& marginals) {
  if (!(eta[2] >= 0.0) || !(eta[3] >= 0.0)) fail(ErrorKind::kNumeric, "negative variance in eta");
  if (!marginals.is_binary()) fail(ErrorKind::kConfig, "eta parameterization is binary only");
  return MixtureFit::binary(marginals.prior(1), Gaussian{eta[0], std::sqrt(eta[2])},
                            Gaussian{eta[1], std::sqrt(eta[3])});
}

double AsymptoticVariance::asympt_std(std::size_t n) const {
  if (n == 0) fail(ErrorKind::kConfig, "sample size must be positive");
  return std::sqrt(risk_variance / static_cast<double>(n));
}

double moment_integral(int m, int n, ClassId i, ClassId j, const MixtureFit& eta) {
  if (m < 0 || n < 0) fail(ErrorKind::kConfig, "moment orders must be non-negative");
  require_binary_fit(eta);
  const Gaussian gi = eta.component(i);
  const Gaussian gj = eta.component(j);

  auto integrand = [&](double z) {
    const double ui = (z - gi.mean) / gi.stddev;
    const double uj = (z - gj.mean) / gj.stddev;
    const double log_ratio = normal_log_pdf(z, gi.mean, gi.stddev) +
                             normal_log_pdf(z, gj.mean, gj.stddev) - eta.log_pdf(z);
    return ipow(ui, m) * ipow(uj, n) * std::exp(log_ratio);
  };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double max_sigma = 0.0;
  for (const auto& [y, g] : eta.components) {
    lo = std::min(lo, g.mean);
    hi = std::max(hi, g.mean);
    max_sigma = std::max(max_sigma, g.stddev);
  }
  lo -= 12.0 * max_sigma;
  hi += 12.0 * max_sigma;

  const auto coarse = quadrature::adaptive_simpson(integrand, lo, hi, 1e-10);
  const auto fine = quadrature::adaptive_simpson(integrand, lo, hi, 1e-12, 128);
  const double scale = std::max(fine.abs_value, 1e-300);
  if (!coarse.converged || !fine.converged || std::abs(fine.value - coarse.value) > 1e-6 * scale) {
    fail(ErrorKind::kNumeric, fmt::format("M_{{{},{}}}({},{}) quadrature did not converge", m, n, i, j));
  }
  return fine.value;
}

FisherMatrix fisher_information(const MixtureFit& eta) {
  require_binary_fit(eta);
  const auto& pr = eta.marginals;

  // Index 0,1 -> means of (+1, -1); 2,3 -> variances of (+1, -1).
  auto entry = [&](int a, int b) {
    const ClassId ci = kClasses[a % 2];
    const ClassId cj = kClasses[b % 2];
    const double pi = pr.prior(ci);
    const double pj = pr.prior(cj);
    const double si = eta.stddev(ci);
    const double sj = eta.stddev(cj);
    const bool var_a = a >= 2;
    const bool var_b = b >= 2;
    if (!var_a && !var_b) {
      return pi * pj / (si * sj) * moment_integral(1, 1, ci, cj, eta);
    }
    if (!var_a && var_b) {
      return pi * pj / (2.0 * si * sj * sj) *
             (moment_integral(1, 2, ci, cj, eta) - moment_integral(1, 0, ci, cj, eta));
    }
    if (var_a && !var_b) {
      return pi * pj / (2.0 * si * si * sj) *
             (moment_integral(2, 1, ci, cj, eta) - moment_integral(0, 1, ci, cj, eta));
    }
    return pi * pj / (4.0 * si * si * sj * sj) *
           (moment_integral(2, 2, ci, cj, eta) - moment_integral(2, 0, ci, cj, eta) -
            moment_integral(0, 2, ci, cj, eta) + moment_integral(0, 0, ci, cj, eta));
  };

  Eigen::Matrix4d info;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) info(a, b) = entry(a, b);
  }
  const double norm = info.cwiseAbs().maxCoeff();
  if ((info - info.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(norm, 1e-300)) {
    fail(ErrorKind::kNumeric, "assembled Fisher information is not symmetric");
  }
  info = 0.5 * (info + info.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(info);
  const auto ev = eig.eigenvalues();
  if (ev.minCoeff() < -1e-8 * std::max(ev.maxCoeff(), 0.0)) {
    fail(ErrorKind::kNumeric, "assembled Fisher information is not positive semidefinite");
  }
  return FisherMatrix{info, pr, to_eta(eta)};
}

Eigen::Vector4d score(const MixtureFit& eta, double z) {
  require_binary_fit(eta);
  const double log_p = eta.log_pdf(z);
  Eigen::Vector4d s;
  for (int c = 0; c < 2; ++c) {
    const ClassId y = kClasses[c];
    const Gaussian& g = eta.component(y);
    const double p = eta.marginals.prior(y);
    const double u = (z - g.mean) / g.stddev;
    const double ratio = std::exp(normal_log_pdf(z, g.mean, g.stddev) - log_p);
    s[c] = p / g.stddev * u * ratio;
    s[c + 2] = p / (2.0 * g.stddev * g.stddev) * (u * u - 1.0) * ratio;
  }
  return s;
}

double risk_of_eta(const EtaVector& eta, const LabelMarginals& marginals, LossSpec loss) {
  return plugin_risk(from_eta(eta, marginals), loss).estimate;
}

AsymptoticVariance delta_method_risk_variance(const MixtureFit& eta, LossSpec loss) {
  eta.marginals.require_identifiable();
  const FisherMatrix fisher = fisher_information(eta);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(fisher.entries);
  const auto ev = eig.eigenvalues();
  const double lmin = ev.minCoeff();
  const double lmax = ev.maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin >= 1e12) {
    fail(ErrorKind::kIdentifiability,
         fmt::format("Fisher information is singular (condition number {:.3g}); the mixture is "
                     "near-unidentifiable at this parameter",
                     lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity()));
  }

  AsymptoticVariance out;
  out.parameter_cov = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();

  const EtaVector center = fisher.eta;
  for (int k = 0; k < 4; ++k) {
    const double h = 1e-5 * std::max(std::abs(center[k]), 1.0);
    EtaVector up = center;
    EtaVector down = center;
    up[k] += h;
    down[k] -= h;
    out.gradient[k] = (risk_of_eta(up, eta.marginals, loss) - risk_of_eta(down, eta.marginals, loss)) / (2.0 * h);
  }
  const double v = out.gradient.dot(out.parameter_cov * out.gradient);
  if (v < -1e-12) fail(ErrorKind::kNumeric, "negative delta-method variance");
  out.risk_variance = std::max(v, 0.0);
  return out;
}

MixtureFit surface_eta(SurfaceAxis axis, double x, const SurfaceBase& base) {
  SurfaceBase b = base;
  switch (axis) {
    case SurfaceAxis::kImbalance: b.p_positive = x; break;
    case SurfaceAxis::kSeparation: b.separation = x; break;
    case SurfaceAxis::kVarianceRatio: b.sigma_ratio = x; break;
  }
  return MixtureFit::binary(b.p_positive, Gaussian{0.5 * b.separation, b.sigma_ratio * b.sigma_negative},
                            Gaussian{-0.5 * b.separation, b.sigma_negative});
}

std::vector<SurfacePoint> accuracy_surface(SurfaceAxis axis, std::span<const double> grid,
                                           const SurfaceBase& base, LossSpec loss) {
  if (grid.empty()) fail(ErrorKind::kConfig, "accuracy surface grid is empty");
  std::vector<SurfacePoint> out;
  out.reserve(grid.size());
  for (double x : grid) {
    SurfacePoint point{x, std::nullopt};
    try {
      const auto var = delta_method_risk_variance(surface_eta(axis, x, base), loss);
      if (var.risk_variance > 0.0) point.accuracy = 1.0 / var.risk_variance;
    } catch (const Error&) {
      // recorded as missing
    }
    out.push_back(point);
  }
  return out;
}

void write_surface_csv(std::ostream& out, std::span<const SurfacePoint> points) {
  out << "x,accuracy\n";
  for (const SurfacePoint& p : points) {
    out << fmt::format("{:.17g},", p.x);
    if (p.accuracy) out << fmt::format("{:.17g}", *p.accuracy);
    out << '\n';
  }
}

}  // namespace urisk
