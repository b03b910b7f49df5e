#pragma once

#include <stdexcept>
#include <string>

namespace edr {

/// Linear-algebra or optimizer breakdown that escalation could not rescue.
struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Operation invoked before enough observations exist.
struct InsufficientData : std::invalid_argument {
  explicit InsufficientData(const std::string& what) : std::invalid_argument(what) {}
};

/// respond_step called after the action budget is exhausted.
struct EpisodeComplete : std::logic_error {
  explicit EpisodeComplete(const std::string& what) : std::logic_error(what) {}
};

/// step_world called on a world that already collided.
struct TerminalState : std::logic_error {
  explicit TerminalState(const std::string& what) : std::logic_error(what) {}
};

/// Samples carry no spread, so a parametric fit cannot proceed.
struct DegenerateData : std::invalid_argument {
  explicit DegenerateData(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace edr
