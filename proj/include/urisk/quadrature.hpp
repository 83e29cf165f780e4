#pragma once

#include <functional>
#include <span>
#include <vector>

namespace urisk::quadrature {

/// Nodes and weights of the n-point Gauss-Hermite rule for the weight
/// exp(-t^2) on the real line. Weights sum to sqrt(pi).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gauss_hermite(int n);

/// Cached rule for the counts used repeatedly (64 and 128); other counts are
/// computed on demand.
const GaussHermiteRule& cached_gauss_hermite(int n);

/// E[g(A)] for A ~ Normal(mu, sigma^2) using the given rule after the
/// substitution A = mu + sqrt(2) sigma t.
double gaussian_expectation(const GaussHermiteRule& rule, double mu, double sigma,
                            const std::function<double(double)>& g);

struct IntegrationResult {
  double value = 0.0;
  double abs_value = 0.0;  // integral of |f|, used to scale convergence tests
  bool converged = true;   // false when any panel hit the depth limit
  long evaluations = 0;
};

/// Adaptive composite Simpson with Richardson correction. The interval is
/// first partitioned into `initial_panels` panels so narrow features are not
/// skipped; each panel is refined until its local error estimate falls below
/// its share of rel_tol * (integral of |f|).
IntegrationResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                   double rel_tol, int initial_panels = 64, int max_depth = 48);

}  // namespace urisk::quadrature
