#pragma once

#include <Eigen/Dense>

#include "edr/errors.hpp"

namespace edr::gp {

/// Stationary covariance family. output_scale is the prior variance at zero
/// distance, so posterior variance always lies in [0, output_scale].
struct KernelSpec {
  enum class Kind { Matern52, Matern32, SquaredExponential };
  Kind kind = Kind::Matern52;
  double length_scale = 0.2;
  double output_scale = 0.01;
};

/// k(a, b) for the given kernel. Throws std::invalid_argument on dimension
/// mismatch or non-positive hyperparameters.
double kernel_eval(const KernelSpec& kernel, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Training set: one row of `inputs` per observation.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact GP regressor held in factored form. Obtain via fit().
class GpModel {
 public:
  /// Latent posterior at a query point: the observation noise enters the
  /// Gram matrix only, never the returned variance.
  Posterior posterior(const Eigen::VectorXd& x) const;

  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index dim() const { return inputs_.cols(); }
  const KernelSpec& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  double prior_mean() const { return prior_mean_; }
  /// Diagonal boost that made the Cholesky succeed (0 when none was needed).
  double jitter_used() const { return jitter_used_; }

 private:
  friend GpModel fit(const Dataset&, const KernelSpec&, double, double);

  Eigen::MatrixXd inputs_;
  KernelSpec kernel_;
  double noise_variance_ = 0.0;
  double prior_mean_ = 0.0;
  double jitter_used_ = 0.0;
  Eigen::MatrixXd chol_lower_;  // L with L Lᵀ = K + noise I (+ jitter I)
  Eigen::VectorXd alpha_;       // (K + noise I)⁻¹ (y - prior_mean)
};

/// Factorizes the Gram matrix with Cholesky, escalating a diagonal jitter
/// from 1e-10 to 1e-6 in decade steps before giving up with
/// NumericalFailure. An empty dataset yields the prior.
GpModel fit(const Dataset& data, const KernelSpec& kernel, double noise_variance,
            double prior_mean);

}  // namespace edr::gp
