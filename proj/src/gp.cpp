#include "edr/gp.hpp"

#include <cmath>
#include <string>

#include "edr/textio.hpp"

namespace edr::gp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.2360679774997896;

void check_kernel(const KernelSpec& k) {
  if (!(k.length_scale > 0.0) || !std::isfinite(k.length_scale)) {
    throw std::invalid_argument("kernel length_scale must be positive and finite");
  }
  if (!(k.output_scale > 0.0) || !std::isfinite(k.output_scale)) {
    throw std::invalid_argument("kernel output_scale must be positive and finite");
  }
}

double kernel_from_distance(const KernelSpec& k, double r) {
  const double l = k.length_scale;
  switch (k.kind) {
    case KernelSpec::Kind::SquaredExponential:
      return k.output_scale * std::exp(-(r * r) / (2.0 * l * l));
    case KernelSpec::Kind::Matern32: {
      const double t = kSqrt3 * r / l;
      return k.output_scale * (1.0 + t) * std::exp(-t);
    }
    case KernelSpec::Kind::Matern52: {
      const double t = kSqrt5 * r / l;
      return k.output_scale * (1.0 + t + 5.0 * r * r / (3.0 * l * l)) * std::exp(-t);
    }
  }
  throw std::invalid_argument("unknown kernel kind");
}

}  // namespace

double kernel_eval(const KernelSpec& kernel, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_kernel(kernel);
  if (a.size() != b.size()) {
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw std::invalid_argument("kernel_eval: non-finite input");
  }
  return kernel_from_distance(kernel, (a - b).norm());
}

GpModel fit(const Dataset& data, const KernelSpec& kernel, double noise_variance,
            double prior_mean) {
  check_kernel(kernel);
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("fit: noise_variance must be non-negative and finite");
  }
  if (!std::isfinite(prior_mean)) {
    throw std::invalid_argument("fit: prior_mean must be finite");
  }
  if (data.inputs.rows() != data.targets.size()) {
    throw std::invalid_argument("fit: inputs and targets disagree on observation count");
  }
  if (data.size() > 0 && (!data.inputs.allFinite() || !data.targets.allFinite())) {
    throw std::invalid_argument("fit: non-finite training data");
  }

  GpModel model;
  model.inputs_ = data.inputs;
  model.kernel_ = kernel;
  model.noise_variance_ = noise_variance;
  model.prior_mean_ = prior_mean;

  const Eigen::Index n = data.size();
  if (n == 0) return model;

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = kernel.output_scale + noise_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v =
          kernel_from_distance(kernel, (data.inputs.row(i) - data.inputs.row(j)).norm());
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }

  // Jitter escalation: plain attempt first, then decade steps 1e-10..1e-6.
  std::string tried = "0";
  for (double jitter = 0.0;;) {
    Eigen::MatrixXd attempt = gram;
    if (jitter > 0.0) attempt.diagonal().array() += jitter;
    const Eigen::LLT<Eigen::MatrixXd> llt(attempt);
    if (llt.info() == Eigen::Success) {
      model.jitter_used_ = jitter;
      model.chol_lower_ = llt.matrixL();
      const Eigen::VectorXd centered = data.targets.array() - prior_mean;
      model.alpha_ = llt.solve(centered);
      return model;
    }
    jitter = (jitter == 0.0) ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-6 * (1.0 + 1e-12)) {
      throw NumericalFailure("fit: Cholesky failed; jitter levels tried: " + tried);
    }
    tried += ", " + format_double(jitter, 2);
  }
}

Posterior GpModel::posterior(const Eigen::VectorXd& x) const {
  if (!x.allFinite()) {
    throw std::invalid_argument("posterior: non-finite query");
  }
  const Eigen::Index n = size();
  if (n == 0) {
    return {prior_mean_, kernel_.output_scale};
  }
  if (x.size() != dim()) {
    throw std::invalid_argument("posterior: query dimension mismatch");
  }

  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kstar(i) = kernel_eval(kernel_, x, inputs_.row(i).transpose());
  }

  Posterior p;
  p.mean = prior_mean_ + kstar.dot(alpha_);
  const Eigen::VectorXd v =
      chol_lower_.triangularView<Eigen::Lower>().solve(kstar);
  p.variance = std::max(0.0, kernel_.output_scale - v.squaredNorm());
  return p;
}

}  // namespace edr::gp
