#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "urisk/mixture.hpp"
#include "urisk/risk.hpp"

namespace urisk {

/// Coordinates of the binary mixture parameter, in this order:
/// (mu_{+1}, mu_{-1}, sigma^2_{+1}, sigma^2_{-1}).
enum class EtaCoord { kMeanPos = 0, kMeanNeg = 1, kVarPos = 2, kVarNeg = 3 };

using EtaVector = Eigen::Vector4d;

EtaVector to_eta(const MixtureFit& fit);
MixtureFit from_eta(const EtaVector& eta, const LabelMarginals& marginals);

struct FisherMatrix {
  Eigen::Matrix4d entries;
  LabelMarginals marginals;
  EtaVector eta;
};

struct AsymptoticVariance {
  Eigen::Matrix4d parameter_cov;  // inverse Fisher information
  double risk_variance = 0.0;     // grad^T cov grad, variance of sqrt(n)(R_hat - R)
  Eigen::Vector4d gradient;       // dh/d eta by central differences

  /// Standard deviation of the risk estimate for a sample of size n.
  double asympt_std(std::size_t n) const;
};

/// M_{m,n}(i, j) = integral of ((z-mu_i)/s_i)^m ((z-mu_j)/s_j)^n p_i(z) p_j(z) / p(z) dz
/// where p_i are the component densities and p the mixture density.
double moment_integral(int m, int n, ClassId i, ClassId j, const MixtureFit& eta);

/// 4x4 Fisher information of the fixed-weight binary mixture in eta coordinates.
FisherMatrix fisher_information(const MixtureFit& eta);

/// Score vector d log p_eta(z) / d eta at a single point; the Fisher matrix
/// is its expected outer product.
Eigen::Vector4d score(const MixtureFit& eta, double z);

/// Plug-in risk as a function of eta.
double risk_of_eta(const EtaVector& eta, const LabelMarginals& marginals, LossSpec loss);

AsymptoticVariance delta_method_risk_variance(const MixtureFit& eta, LossSpec loss);

enum class SurfaceAxis { kImbalance, kSeparation, kVarianceRatio };

/// Fixed parameters while one axis of the accuracy surface is varied. Means
/// are placed symmetrically at +-separation/2; sigma_{+1} = ratio * sigma_{-1}.
struct SurfaceBase {
  double p_positive = 0.7;
  double separation = 2.0;
  double sigma_negative = 1.0;
  double sigma_ratio = 1.0;
};

struct SurfacePoint {
  double x = 0.0;
  std::optional<double> accuracy;  // 1 / asymptotic variance; missing on failure
};

MixtureFit surface_eta(SurfaceAxis axis, double x, const SurfaceBase& base);

std::vector<SurfacePoint> accuracy_surface(SurfaceAxis axis, std::span<const double> grid,
                                           const SurfaceBase& base, LossSpec loss);

/// Header `x,accuracy`; missing accuracies are written as empty fields.
void write_surface_csv(std::ostream& out, std::span<const SurfacePoint> points);

}  // namespace urisk
