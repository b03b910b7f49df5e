#include "edr/burr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace edr::detect {

namespace {

void check_params(const BurrParams& p) {
  if (!(p.c > 0.0) || !(p.d > 0.0) || !(p.scale > 0.0) || !std::isfinite(p.loc)) {
    throw std::invalid_argument("burr3: requires c > 0, d > 0, scale > 0, finite loc");
  }
}

/// log(1 + exp(u)) without overflow.
double softplus(double u) { return u > 36.0 ? u : std::log1p(std::exp(u)); }

/// Negative log-likelihood over z = x - loc > 0; theta = (ln c, ln d, ln scale).
double negative_log_likelihood(const std::array<double, 3>& theta,
                               const std::vector<double>& z) {
  const double c = std::exp(theta[0]);
  const double d = std::exp(theta[1]);
  const double scale = std::exp(theta[2]);
  if (!std::isfinite(c) || !std::isfinite(d) || !std::isfinite(scale)) {
    return std::numeric_limits<double>::infinity();
  }
  double nll = 0.0;
  for (double zi : z) {
    const double lz = std::log(zi / scale);
    nll += -std::log(c) - std::log(d) + (c + 1.0) * lz + (d + 1.0) * softplus(-c * lz) +
           theta[2];
  }
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

/// Fixed-shape Nelder-Mead in 3 dimensions; fully deterministic.
std::array<double, 3> nelder_mead_3d(std::array<double, 3> start,
                                     const std::vector<double>& z) {
  constexpr int kDim = 3;
  constexpr int kMaxIter = 600;
  struct Vertex {
    std::array<double, kDim> x;
    double f;
  };
  std::array<Vertex, kDim + 1> simplex;
  simplex[0] = {start, negative_log_likelihood(start, z)};
  for (int i = 0; i < kDim; ++i) {
    auto x = start;
    x[static_cast<std::size_t>(i)] += 0.3;
    simplex[static_cast<std::size_t>(i) + 1] = {x, negative_log_likelihood(x, z)};
  }
  const auto order = [&] {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  };
  order();

  for (int iter = 0; iter < kMaxIter; ++iter) {
    if (std::abs(simplex.back().f - simplex.front().f) < 1e-12) break;

    std::array<double, kDim> centroid{};
    for (int v = 0; v < kDim; ++v) {
      for (int i = 0; i < kDim; ++i) centroid[i] += simplex[v].x[i] / kDim;
    }
    const auto at = [&](double coeff) {
      std::array<double, kDim> x;
      for (int i = 0; i < kDim; ++i) {
        x[i] = centroid[i] + coeff * (simplex.back().x[i] - centroid[i]);
      }
      return Vertex{x, negative_log_likelihood(x, z)};
    };

    const Vertex reflected = at(-1.0);
    if (reflected.f < simplex.front().f) {
      const Vertex expanded = at(-2.0);
      simplex.back() = expanded.f < reflected.f ? expanded : reflected;
    } else if (reflected.f < simplex[kDim - 1].f) {
      simplex.back() = reflected;
    } else {
      const Vertex contracted = at(reflected.f < simplex.back().f ? -0.5 : 0.5);
      if (contracted.f < std::min(reflected.f, simplex.back().f)) {
        simplex.back() = contracted;
      } else {
        for (int v = 1; v <= kDim; ++v) {
          for (int i = 0; i < kDim; ++i) {
            simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
          }
          simplex[v].f = negative_log_likelihood(simplex[v].x, z);
        }
      }
    }
    order();
  }
  return simplex.front().x;
}

}  // namespace

double burr3_cdf(double x, const BurrParams& p) {
  check_params(p);
  if (!std::isfinite(x)) throw std::invalid_argument("burr3_cdf: non-finite x");
  const double z = (x - p.loc) / p.scale;
  if (z <= 0.0) return 0.0;
  return std::pow(1.0 + std::pow(z, -p.c), -p.d);
}

double burr3_quantile(double q, const BurrParams& p) {
  check_params(p);
  if (!(q > 0.0) || !(q < 1.0)) {
    throw std::invalid_argument("burr3_quantile: q must lie in (0, 1)");
  }
  return p.loc + p.scale * std::pow(std::pow(q, -1.0 / p.d) - 1.0, -1.0 / p.c);
}

BurrParams fit_burr3(const std::vector<double>& samples, std::optional<double> loc_override) {
  if (samples.size() < 50) {
    throw InsufficientData("fit_burr3: needs at least 50 samples");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("fit_burr3: non-finite sample");
  }
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double range = *mx_it - *mn_it;
  if (range <= 0.0) {
    throw DegenerateData("fit_burr3: samples have zero spread");
  }
  const double loc = loc_override.value_or(*mn_it - 1e-6 * range);
  if (loc >= *mn_it) {
    throw std::invalid_argument("fit_burr3: loc must lie below the sample minimum");
  }

  std::vector<double> z(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) z[i] = samples[i] - loc;

  // Quantile-matched start: d = 1 puts the median at z = scale, and the
  // upper quartile then fixes c through z75 = 3^(1/c).
  std::vector<double> sorted = z;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = [&](double q) {
    const std::size_t idx = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(idx, 1, sorted.size()) - 1];
  };
  const double scale0 = rank(0.5);
  const double z75 = rank(0.75) / scale0;
  double c0 = z75 > 1.001 ? std::log(3.0) / std::log(z75) : 2.0;
  c0 = std::clamp(c0, 0.3, 60.0);

  const std::array<double, 3> theta =
      nelder_mead_3d({std::log(c0), 0.0, std::log(scale0)}, z);
  BurrParams fitted{std::exp(theta[0]), std::exp(theta[1]), loc, std::exp(theta[2])};
  if (!std::isfinite(negative_log_likelihood(theta, z))) {
    throw NumericalFailure("fit_burr3: optimizer ended with non-finite likelihood");
  }
  return fitted;
}

double empirical_quantile(std::vector<double> samples, double rho) {
  if (samples.empty()) throw InsufficientData("empirical_quantile: no samples");
  if (!(rho > 0.0) || !(rho < 1.0)) {
    throw std::invalid_argument("empirical_quantile: rho must lie in (0, 1)");
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::ceil(rho * static_cast<double>(samples.size())));
  return samples[std::clamp<std::size_t>(idx, 1, samples.size()) - 1];
}

double calibrate_threshold(const std::vector<double>& samples, double rho,
                           QuantileMethod method) {
  if (!(rho > 0.0) || !(rho < 1.0)) {
    throw std::invalid_argument("calibrate_threshold: rho must lie in (0, 1)");
  }
  if (samples.size() < 50) {
    throw InsufficientData("calibrate_threshold: needs at least 50 samples");
  }
  switch (method) {
    case QuantileMethod::Empirical:
      return empirical_quantile(samples, rho);
    case QuantileMethod::BurrFit:
      return burr3_quantile(rho, fit_burr3(samples));
  }
  throw std::invalid_argument("calibrate_threshold: unknown method");
}

}  // namespace edr::detect
