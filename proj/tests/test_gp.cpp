#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "edr/errors.hpp"
#include "edr/gp.hpp"
#include "edr/rng.hpp"

using namespace edr;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

/// Direct dense-inverse evaluation of the posterior equations; the
/// factorized implementation must agree with this to tight tolerance.
gp::Posterior dense_posterior(const gp::Dataset& data, const gp::KernelSpec& kernel,
                              double noise, double prior_mean, const Eigen::VectorXd& x) {
  const Eigen::Index n = data.size();
  Eigen::MatrixXd gram(n, n);
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      gram(i, j) = gp::kernel_eval(kernel, data.inputs.row(i), data.inputs.row(j));
    }
    kstar(i) = gp::kernel_eval(kernel, data.inputs.row(i), x);
  }
  gram.diagonal().array() += noise;
  const Eigen::MatrixXd inv = gram.fullPivLu().inverse();
  const Eigen::VectorXd centered = data.targets.array() - prior_mean;
  gp::Posterior p;
  p.mean = prior_mean + kstar.dot(inv * centered);
  p.variance = gp::kernel_eval(kernel, x, x) - kstar.dot(inv * kstar);
  return p;
}

struct RandomInstance {
  gp::Dataset data;
  gp::KernelSpec kernel;
  double noise = 0.0;
  double prior_mean = 0.0;
};

RandomInstance random_instance(SplitMix64& rng, Eigen::Index max_n = 25) {
  RandomInstance inst;
  const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.next_u64() % 3);
  const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u64() % max_n);
  inst.data.inputs.resize(n, dim);
  inst.data.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) inst.data.inputs(i, j) = -1.0 + 3.0 * rng.next_unit();
    inst.data.targets(i) = 2.0 * rng.next_normal();
  }
  const std::uint64_t kind = rng.next_u64() % 3;
  inst.kernel.kind = kind == 0   ? gp::KernelSpec::Kind::Matern52
                     : kind == 1 ? gp::KernelSpec::Kind::Matern32
                                 : gp::KernelSpec::Kind::SquaredExponential;
  inst.kernel.length_scale = 0.1 + 1.9 * rng.next_unit();
  inst.kernel.output_scale = 0.005 + 2.0 * rng.next_unit();
  inst.noise = 1e-4 + 0.1 * rng.next_unit();
  inst.prior_mean = -2.0 + 4.0 * rng.next_unit();
  return inst;
}

Eigen::VectorXd random_query(SplitMix64& rng, Eigen::Index dim) {
  Eigen::VectorXd q(dim);
  for (Eigen::Index j = 0; j < dim; ++j) q(j) = -1.5 + 4.0 * rng.next_unit();
  return q;
}

}  // namespace

TEST_CASE("kernel closed forms match hand evaluation") {
  const gp::KernelSpec m52{gp::KernelSpec::Kind::Matern52, 1.0, 1.0};
  CHECK(gp::kernel_eval(m52, vec1(0.3), vec1(0.3)) == doctest::Approx(1.0).epsilon(1e-15));
  const double r1 = gp::kernel_eval(m52, vec1(0.0), vec1(1.0));
  const double sqrt5 = std::sqrt(5.0);
  CHECK(r1 == doctest::Approx((1.0 + sqrt5 + 5.0 / 3.0) * std::exp(-sqrt5)).epsilon(1e-14));
  CHECK(r1 == doctest::Approx(0.52399).epsilon(1e-4));

  const gp::KernelSpec se{gp::KernelSpec::Kind::SquaredExponential, 2.0, 0.01};
  const double se2 = gp::kernel_eval(se, vec1(0.0), vec1(2.0));
  CHECK(se2 == doctest::Approx(0.01 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(se2 == doctest::Approx(0.0060653).epsilon(1e-4));

  const gp::KernelSpec m32{gp::KernelSpec::Kind::Matern32, 0.5, 2.0};
  const double r = std::sqrt(2.0) * 0.7;
  const double s3r = std::sqrt(3.0) * r / 0.5;
  CHECK(gp::kernel_eval(m32, vec2(0.0, 0.0), vec2(0.7, 0.7)) ==
        doctest::Approx(2.0 * (1.0 + s3r) * std::exp(-s3r)).epsilon(1e-14));
}

TEST_CASE("kernel is symmetric and peaks only at zero distance") {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    gp::KernelSpec spec;
    spec.kind = trial % 3 == 0   ? gp::KernelSpec::Kind::Matern52
                : trial % 3 == 1 ? gp::KernelSpec::Kind::Matern32
                                 : gp::KernelSpec::Kind::SquaredExponential;
    spec.length_scale = 0.1 + rng.next_unit();
    spec.output_scale = 0.01 + rng.next_unit();
    const Eigen::VectorXd a = vec2(rng.next_normal(), rng.next_normal());
    const Eigen::VectorXd b = vec2(rng.next_normal(), rng.next_normal());
    const double kab = gp::kernel_eval(spec, a, b);
    CHECK(kab == gp::kernel_eval(spec, b, a));
    CHECK(gp::kernel_eval(spec, a, a) == doctest::Approx(spec.output_scale).epsilon(1e-15));
    if ((a - b).norm() > 1e-12) CHECK(kab < spec.output_scale);
  }
}

TEST_CASE("kernel_eval validates its arguments") {
  gp::KernelSpec spec;
  CHECK_THROWS_AS(gp::kernel_eval(spec, vec1(0.0), vec2(0.0, 0.0)), std::invalid_argument);
  spec.length_scale = 0.0;
  CHECK_THROWS_AS(gp::kernel_eval(spec, vec1(0.0), vec1(1.0)), std::invalid_argument);
  spec.length_scale = 0.2;
  spec.output_scale = -1.0;
  CHECK_THROWS_AS(gp::kernel_eval(spec, vec1(0.0), vec1(1.0)), std::invalid_argument);
}

TEST_CASE("empty model returns the prior everywhere") {
  gp::Dataset data;
  data.inputs.resize(0, 2);
  data.targets.resize(0);
  gp::KernelSpec kernel;  // output_scale 0.01 default
  const gp::GpModel model = gp::fit(data, kernel, 0.01, 0.0);
  SplitMix64 rng(7);
  for (int i = 0; i < 10; ++i) {
    const gp::Posterior p = model.posterior(vec2(rng.next_normal(), rng.next_normal()));
    CHECK(p.mean == 0.0);
    CHECK(p.variance == 0.01);
  }
}

TEST_CASE("single observation reproduces the 1x1 hand solve") {
  gp::Dataset data;
  data.inputs.resize(1, 1);
  data.inputs << 0.0;
  data.targets.resize(1);
  data.targets << 2.0;
  const gp::KernelSpec kernel{gp::KernelSpec::Kind::Matern52, 1.0, 1.0};
  const gp::GpModel model = gp::fit(data, kernel, 0.01, 0.0);
  const gp::Posterior p = model.posterior(vec1(0.0));
  CHECK(p.mean == doctest::Approx(2.0 / 1.01).epsilon(1e-12));
  CHECK(p.variance == doctest::Approx(1.0 - 1.0 / 1.01).epsilon(1e-9));
}

TEST_CASE("factorized posterior agrees with the dense-inverse evaluation") {
  SplitMix64 rng(20240901);
  for (int trial = 0; trial < 40; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const gp::GpModel model = gp::fit(inst.data, inst.kernel, inst.noise, inst.prior_mean);
    for (int q = 0; q < 5; ++q) {
      const Eigen::VectorXd x = random_query(rng, inst.data.dim());
      const gp::Posterior fast = model.posterior(x);
      const gp::Posterior slow =
          dense_posterior(inst.data, inst.kernel, inst.noise, inst.prior_mean, x);
      CHECK(std::abs(fast.mean - slow.mean) <= 1e-8);
      CHECK(std::abs(fast.variance - std::max(0.0, slow.variance)) <= 1e-8);
    }
  }
}

TEST_CASE("noise-free fit interpolates its training data") {
  gp::Dataset data;
  data.inputs.resize(6, 2);
  data.inputs << 0.1, 0.2, 0.9, 0.4, 0.5, 0.5, 0.3, 0.8, 0.7, 0.1, 0.2, 0.6;
  data.targets.resize(6);
  data.targets << -1.0, 0.5, 2.0, 0.0, 1.5, -0.25;
  gp::KernelSpec kernel;
  kernel.output_scale = 1.0;
  const gp::GpModel model = gp::fit(data, kernel, 0.0, 0.0);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const gp::Posterior p = model.posterior(data.inputs.row(i).transpose());
    CHECK(p.mean == doctest::Approx(data.targets(i)).epsilon(1e-6));
    CHECK(p.variance <= 1e-8);
  }
}

TEST_CASE("adding an observation never increases posterior variance") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = random_instance(rng, 15);
    if (inst.data.size() < 2) continue;
    gp::Dataset fewer;
    fewer.inputs = inst.data.inputs.topRows(inst.data.size() - 1);
    fewer.targets = inst.data.targets.head(inst.data.size() - 1);
    const gp::GpModel before = gp::fit(fewer, inst.kernel, inst.noise, inst.prior_mean);
    const gp::GpModel after = gp::fit(inst.data, inst.kernel, inst.noise, inst.prior_mean);
    for (int q = 0; q < 10; ++q) {
      const Eigen::VectorXd x = random_query(rng, inst.data.dim());
      CHECK(after.posterior(x).variance <= before.posterior(x).variance + 1e-9);
    }
  }
}

TEST_CASE("posterior variance stays within [0, output_scale]") {
  SplitMix64 rng(512);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const gp::GpModel model = gp::fit(inst.data, inst.kernel, inst.noise, inst.prior_mean);
    for (int q = 0; q < 10; ++q) {
      const gp::Posterior p = model.posterior(random_query(rng, inst.data.dim()));
      CHECK(p.variance >= 0.0);
      CHECK(p.variance <= inst.kernel.output_scale + 1e-12);
    }
  }
}

TEST_CASE("far-away queries revert to the prior") {
  gp::Dataset data;
  data.inputs.resize(3, 1);
  data.inputs << 0.0, 0.5, 1.0;
  data.targets.resize(3);
  data.targets << 4.0, 5.0, 6.0;
  gp::KernelSpec kernel;
  kernel.output_scale = 0.01;
  const gp::GpModel model = gp::fit(data, kernel, 0.01, -1.0);
  const gp::Posterior p = model.posterior(vec1(50.0));
  CHECK(std::abs(p.mean - (-1.0)) <= 1e-6);
  CHECK(std::abs(p.variance - 0.01) <= 1e-6);
}

TEST_CASE("a constant target shift with matching prior shifts the mean exactly") {
  SplitMix64 rng(31337);
  const RandomInstance inst = random_instance(rng);
  const gp::GpModel base = gp::fit(inst.data, inst.kernel, inst.noise, inst.prior_mean);
  for (double c : {-5.0, 0.0, 5.0}) {
    gp::Dataset shifted = inst.data;
    shifted.targets.array() += c;
    const gp::GpModel moved = gp::fit(shifted, inst.kernel, inst.noise, inst.prior_mean + c);
    for (int q = 0; q < 10; ++q) {
      const Eigen::VectorXd x = random_query(rng, inst.data.dim());
      const gp::Posterior a = base.posterior(x);
      const gp::Posterior b = moved.posterior(x);
      CHECK(b.mean - a.mean == doctest::Approx(c).epsilon(1e-9));
      CHECK(b.variance == doctest::Approx(a.variance).epsilon(1e-12));
    }
  }
}

TEST_CASE("duplicate rows with zero noise are rescued by jitter") {
  gp::Dataset data;
  data.inputs.resize(2, 1);
  data.inputs << 0.5, 0.5;
  data.targets.resize(2);
  data.targets << 1.0, 1.0;
  gp::KernelSpec kernel;
  kernel.output_scale = 1.0;
  const gp::GpModel model = gp::fit(data, kernel, 0.0, 0.0);
  CHECK(model.jitter_used() > 0.0);
  const gp::Posterior p = model.posterior(vec1(0.5));
  CHECK(std::isfinite(p.mean));
  CHECK(std::isfinite(p.variance));
  CHECK(p.mean == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("fit validates its inputs") {
  gp::Dataset data;
  data.inputs.resize(2, 1);
  data.inputs << 0.0, 1.0;
  data.targets.resize(1);
  data.targets << 1.0;
  gp::KernelSpec kernel;
  CHECK_THROWS_AS(gp::fit(data, kernel, 0.01, 0.0), std::invalid_argument);
  data.targets.resize(2);
  data.targets << 1.0, 2.0;
  CHECK_THROWS_AS(gp::fit(data, kernel, -0.01, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gp::fit(data, kernel, 0.01, std::nan("")), std::invalid_argument);
  data.targets(1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(gp::fit(data, kernel, 0.01, 0.0), std::invalid_argument);
}

TEST_CASE("refitting identical data reproduces identical posteriors") {
  SplitMix64 rng(777);
  const RandomInstance inst = random_instance(rng);
  const gp::GpModel a = gp::fit(inst.data, inst.kernel, inst.noise, inst.prior_mean);
  const gp::GpModel b = gp::fit(inst.data, inst.kernel, inst.noise, inst.prior_mean);
  for (int q = 0; q < 10; ++q) {
    const Eigen::VectorXd x = random_query(rng, inst.data.dim());
    const gp::Posterior pa = a.posterior(x);
    const gp::Posterior pb = b.posterior(x);
    CHECK(pa.mean == pb.mean);
    CHECK(pa.variance == pb.variance);
  }
}
