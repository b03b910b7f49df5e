#include "edr/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace edr::acq {

namespace {

void check_schedule(const BetaSchedule& s) {
  if (!std::isfinite(s.beta0) || !std::isfinite(s.beta_k)) {
    throw std::invalid_argument("beta schedule: non-finite endpoints");
  }
  if (s.beta_k < 0.0 || s.beta0 < s.beta_k) {
    throw std::invalid_argument("beta schedule requires beta0 >= beta_k >= 0");
  }
  if (s.k_step < 1) {
    throw std::invalid_argument("beta schedule requires k_step >= 1");
  }
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

}  // namespace

double beta_at(const BetaSchedule& schedule, int step) {
  check_schedule(schedule);
  if (step < 0) throw std::invalid_argument("beta_at: step must be >= 0");
  // Endpoints returned verbatim so the pinned values are bit-exact.
  if (step == 0) return schedule.beta0;
  if (step >= schedule.k_step) return schedule.beta_k;
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.k_step);
  const double span = schedule.beta0 - schedule.beta_k;
  switch (schedule.shape) {
    case BetaSchedule::Shape::QuadraticDecay:
      return schedule.beta_k + span * (1.0 - frac * frac);
    case BetaSchedule::Shape::LinearDecay:
      return schedule.beta_k + span * (1.0 - frac);
  }
  throw std::invalid_argument("beta_at: unknown shape");
}

double penalize(double rate, int age, const PenaltyConfig& config) {
  if (!std::isfinite(rate)) throw std::invalid_argument("penalize: non-finite rate");
  if (age < 1) throw std::invalid_argument("penalize: age must be >= 1");
  if (!(config.gain >= 0.0) || !(config.offset >= 0.0)) {
    throw std::invalid_argument("penalize: gain and offset must be >= 0");
  }
  return rate + config.gain * std::log(static_cast<double>(age)) + config.offset;
}

ActionBounds ActionBounds::unit_box(Eigen::Index dim) {
  ActionBounds b;
  b.lower = Eigen::VectorXd::Zero(dim);
  b.upper = Eigen::VectorXd::Ones(dim);
  return b;
}

double acquisition_value(const gp::GpModel& model, const Eigen::VectorXd& a, double beta,
                         Sense sense) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("acquisition_value: beta must be >= 0 and finite");
  }
  const gp::Posterior p = model.posterior(a);
  const double width = std::sqrt(beta * p.variance);
  return sense == Sense::Maximize ? p.mean + width : p.mean - width;
}

Eigen::VectorXd optimize_acquisition(const gp::GpModel& model, double beta,
                                     const ActionBounds& bounds, Sense sense,
                                     const OptBudget& budget) {
  const Eigen::Index dim = bounds.dim();
  if (dim < 1 || bounds.upper.size() != dim) {
    throw std::invalid_argument("optimize_acquisition: malformed bounds");
  }
  for (Eigen::Index a = 0; a < dim; ++a) {
    if (!(bounds.lower(a) < bounds.upper(a))) {
      throw std::invalid_argument("optimize_acquisition: requires lower < upper per axis");
    }
  }
  if (model.size() > 0 && model.dim() != dim) {
    throw std::invalid_argument("optimize_acquisition: bounds dimension mismatches model");
  }
  if (budget.grid_per_axis < 2 || budget.refine_top < 1 || !(budget.min_step > 0.0)) {
    throw std::invalid_argument("optimize_acquisition: malformed budget");
  }

  const Eigen::VectorXd width = bounds.upper - bounds.lower;
  const auto value = [&](const Eigen::VectorXd& x) {
    return acquisition_value(model, x, beta, sense);
  };
  // Comparisons are phrased as "smaller is better" for both senses.
  const auto score = [&](double v) { return sense == Sense::Minimize ? v : -v; };

  struct Candidate {
    double score;
    Eigen::VectorXd point;
  };
  const auto better = [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    return lex_less(a.point, b.point);
  };

  const int g = budget.grid_per_axis;
  std::vector<Candidate> top;
  top.reserve(static_cast<std::size_t>(budget.refine_top) + 1);

  // Full scan over grid cell centers, iterated in lexicographic coordinate
  // order so earlier candidates are lexicographically smaller.
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  Eigen::VectorXd point(dim);
  for (;;) {
    for (Eigen::Index a = 0; a < dim; ++a) {
      point(a) = bounds.lower(a) + (idx[static_cast<std::size_t>(a)] + 0.5) * width(a) / g;
    }
    Candidate cand{score(value(point)), point};
    const auto pos = std::lower_bound(top.begin(), top.end(), cand, better);
    if (pos != top.end() || top.size() < static_cast<std::size_t>(budget.refine_top)) {
      top.insert(pos, std::move(cand));
      if (top.size() > static_cast<std::size_t>(budget.refine_top)) top.pop_back();
    }
    Eigen::Index axis = dim - 1;
    for (;;) {
      if (++idx[static_cast<std::size_t>(axis)] < g) break;
      idx[static_cast<std::size_t>(axis)] = 0;
      if (axis == 0) break;
      --axis;
    }
    if (axis == 0 && idx[0] == 0) break;
  }

  // Compass-direction pattern search from each kept cell, halving the step
  // whenever no axis move strictly improves.
  Candidate best = top.front();
  for (const Candidate& start : top) {
    Candidate cur = start;
    double step = 1.0 / g;
    while (step >= budget.min_step) {
      bool improved = false;
      for (Eigen::Index a = 0; a < dim && !improved; ++a) {
        for (int dir : {+1, -1}) {
          Eigen::VectorXd next = cur.point;
          next(a) = std::clamp(next(a) + dir * step * width(a), bounds.lower(a),
                               bounds.upper(a));
          if (next(a) == cur.point(a)) continue;
          Candidate cand{score(value(next)), std::move(next)};
          if (cand.score < cur.score) {
            cur = std::move(cand);
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (better(cur, best)) best = cur;
  }

  // A center no candidate strictly beats is the canonical return, which also
  // covers the flat-posterior case.
  Eigen::VectorXd center = bounds.lower + 0.5 * width;
  if (score(value(center)) <= best.score) return center;
  return best.point;
}

}  // namespace edr::acq
