#pragma once

#include <Eigen/Dense>

#include "edr/gp.hpp"

namespace edr::acq {

enum class Sense { Maximize, Minimize };

/// Exploration-weight decay: beta(0) == beta0, beta(i) == beta_k for
/// i >= k_step, non-increasing in between.
struct BetaSchedule {
  enum class Shape { QuadraticDecay, LinearDecay };
  Shape shape = Shape::QuadraticDecay;
  double beta0 = 0.07;
  double beta_k = 0.0;
  int k_step = 5;
};

double beta_at(const BetaSchedule& schedule, int step);

/// Additive age penalty applied to past rate observations before each refit.
struct PenaltyConfig {
  double gain = 6.15;
  double offset = 0.1;
};

/// rate + gain * ln(age) + offset. age counts steps since the observation
/// and must be >= 1.
double penalize(double rate, int age, const PenaltyConfig& config = {});

/// Axis-aligned search box; lower < upper per axis.
struct ActionBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }
  static ActionBounds unit_box(Eigen::Index dim);
};

/// Budget for the staged optimizer: full grid scan, then pattern-search
/// refinement of the best cells with step halving down to min_step
/// (box-normalized units).
struct OptBudget {
  int grid_per_axis = 16;
  int refine_top = 4;
  double min_step = 1e-4;
};

/// Confidence-bound value mu ± sqrt(beta * var); Minimize uses the lower
/// bound so that smaller is better for both senses' optimizers.
double acquisition_value(const gp::GpModel& model, const Eigen::VectorXd& a, double beta,
                         Sense sense);

/// Deterministic staged search: uniform grid of cell centers, pattern-search
/// refinement of the best cells, exact ties broken toward the
/// lexicographically smallest point. When no candidate strictly beats the
/// box center (e.g. a flat posterior), the center is returned.
Eigen::VectorXd optimize_acquisition(const gp::GpModel& model, double beta,
                                     const ActionBounds& bounds, Sense sense,
                                     const OptBudget& budget = {});

}  // namespace edr::acq
