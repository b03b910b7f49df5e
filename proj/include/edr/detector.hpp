#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "edr/burr.hpp"

namespace edr::detect {

/// Windowed extrapolation trigger. Keeps the last `window` raw errors, fits
/// a least-squares polynomial of `degree` against positions 1..window, and
/// extrapolates `horizon` positions past the window. Fires when the trailing
/// run of extrapolated values above `threshold` has length >= min_run.
struct DetectorConfig {
  int window = 15;
  int horizon = 7;
  int min_run = 3;
  int degree = 2;
  double threshold = 0.0;
};

struct Detection {
  bool fired = false;
  /// Extrapolated values at positions window+1 .. window+horizon; empty
  /// until the buffer has filled.
  std::vector<double> extrapolated;
};

class Detector {
 public:
  explicit Detector(const DetectorConfig& config);

  /// Appends one raw error (evicting the oldest once full) and evaluates the
  /// trigger. Throws std::invalid_argument on non-finite input.
  Detection push_and_check(double error);

  bool full() const { return buffer_.size() == static_cast<std::size_t>(config_.window); }
  const std::deque<double>& buffer() const { return buffer_; }
  const DetectorConfig& config() const { return config_; }

 private:
  DetectorConfig config_;
  std::deque<double> buffer_;
  Eigen::MatrixXd extrapolator_;  // horizon x window; maps buffer to forecasts
};

/// Calibration summary rendered to/from "key = value" text
/// (keys: method, rho, c, d, loc, scale, ULe).
struct CalibrationReport {
  QuantileMethod method = QuantileMethod::Empirical;
  double rho = 0.0;
  std::optional<BurrParams> burr;
  double threshold = 0.0;
};

std::string to_kv_text(const CalibrationReport& report);
CalibrationReport calibration_report_from_kv(const std::string& text);

std::string to_string(QuantileMethod method);
QuantileMethod parse_quantile_method(const std::string& name);

}  // namespace edr::detect
