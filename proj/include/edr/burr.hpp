#pragma once

#include <optional>
#include <vector>

#include "edr/errors.hpp"

namespace edr::detect {

/// Burr type III with location/scale extension. Support is x > loc.
struct BurrParams {
  double c = 1.0;      // > 0
  double d = 1.0;      // > 0
  double loc = 0.0;
  double scale = 1.0;  // > 0
};

/// F(x) = (1 + z^-c)^-d with z = (x - loc) / scale; 0 for z <= 0.
double burr3_cdf(double x, const BurrParams& p);

/// Inverse CDF: loc + scale * (q^(-1/d) - 1)^(-1/c) for q in (0, 1).
double burr3_quantile(double q, const BurrParams& p);

/// Maximum-likelihood fit. loc is pinned at min(samples) - 1e-6 * range
/// unless overridden; (c, d, scale) are optimized in log-space with a
/// deterministic Nelder-Mead started from quantile-matched values.
/// Requires at least 50 samples (InsufficientData) with nonzero spread
/// (DegenerateData).
BurrParams fit_burr3(const std::vector<double>& samples,
                     std::optional<double> loc_override = std::nullopt);

enum class QuantileMethod { Empirical, BurrFit };

/// Nearest-rank sample quantile: sorted[ceil(rho * n)] (1-based).
double empirical_quantile(std::vector<double> samples, double rho);

/// Upper threshold at tail mass rho, either the nearest-rank sample
/// quantile or the quantile of a fitted Burr III. Requires 0 < rho < 1 and
/// at least 50 samples.
double calibrate_threshold(const std::vector<double>& samples, double rho,
                           QuantileMethod method);

}  // namespace edr::detect
