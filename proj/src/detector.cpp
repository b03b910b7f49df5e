#include "edr/detector.hpp"

#include <cmath>

#include "edr/textio.hpp"

namespace edr::detect {

Detector::Detector(const DetectorConfig& config) : config_(config) {
  if (config.degree < 1) {
    throw std::invalid_argument("detector: degree must be >= 1");
  }
  if (config.window <= config.degree + 1) {
    throw std::invalid_argument("detector: window must exceed degree + 1");
  }
  if (config.min_run < 1 || config.min_run > config.horizon) {
    throw std::invalid_argument("detector: requires 1 <= min_run <= horizon");
  }
  if (!std::isfinite(config.threshold)) {
    throw std::invalid_argument("detector: threshold must be finite");
  }

  // The abscissa is always 1..window, so the least-squares solve collapses
  // to one constant matrix: forecasts = extrapolator * buffer.
  const int m = config.window;
  const int terms = config.degree + 1;
  Eigen::MatrixXd vand(m, terms);
  for (int r = 0; r < m; ++r) {
    double p = 1.0;
    for (int c = 0; c < terms; ++c) {
      vand(r, c) = p;
      p *= static_cast<double>(r + 1);
    }
  }
  Eigen::MatrixXd future(config.horizon, terms);
  for (int r = 0; r < config.horizon; ++r) {
    double p = 1.0;
    for (int c = 0; c < terms; ++c) {
      future(r, c) = p;
      p *= static_cast<double>(m + r + 1);
    }
  }
  const Eigen::MatrixXd pseudo_inverse =
      vand.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(m, m));
  extrapolator_ = future * pseudo_inverse;
}

Detection Detector::push_and_check(double error) {
  if (!std::isfinite(error)) {
    throw std::invalid_argument("push_and_check: non-finite error");
  }
  buffer_.push_back(error);
  if (buffer_.size() > static_cast<std::size_t>(config_.window)) {
    buffer_.pop_front();
  }

  Detection result;
  if (!full()) return result;

  Eigen::VectorXd y(config_.window);
  for (int i = 0; i < config_.window; ++i) y(i) = buffer_[static_cast<std::size_t>(i)];
  const Eigen::VectorXd forecast = extrapolator_ * y;
  result.extrapolated.assign(forecast.data(), forecast.data() + forecast.size());

  int trailing = 0;
  for (auto it = result.extrapolated.rbegin(); it != result.extrapolated.rend(); ++it) {
    if (*it > config_.threshold) {
      ++trailing;
    } else {
      break;
    }
  }
  result.fired = trailing >= config_.min_run;
  return result;
}

std::string to_string(QuantileMethod method) {
  switch (method) {
    case QuantileMethod::Empirical:
      return "empirical";
    case QuantileMethod::BurrFit:
      return "burr";
  }
  throw std::invalid_argument("unknown quantile method");
}

QuantileMethod parse_quantile_method(const std::string& name) {
  if (name == "empirical") return QuantileMethod::Empirical;
  if (name == "burr") return QuantileMethod::BurrFit;
  throw std::invalid_argument("unknown quantile method: '" + name + "'");
}

std::string to_kv_text(const CalibrationReport& report) {
  std::string out;
  out += "method = " + to_string(report.method) + "\n";
  out += "rho = " + format_double_exact(report.rho) + "\n";
  if (report.burr) {
    out += "c = " + format_double_exact(report.burr->c) + "\n";
    out += "d = " + format_double_exact(report.burr->d) + "\n";
    out += "loc = " + format_double_exact(report.burr->loc) + "\n";
    out += "scale = " + format_double_exact(report.burr->scale) + "\n";
  }
  out += "ULe = " + format_double_exact(report.threshold) + "\n";
  return out;
}

CalibrationReport calibration_report_from_kv(const std::string& text) {
  const KvFile file = parse_kv_text(text, "<calibration report>");
  const KvSection& top = file.sections.front();
  CalibrationReport report;
  report.method = parse_quantile_method(top.get_string("method"));
  report.rho = top.get_double("rho");
  report.threshold = top.get_double("ULe");
  if (top.has("c")) {
    report.burr = BurrParams{top.get_double("c"), top.get_double("d"), top.get_double("loc"),
                             top.get_double("scale")};
  }
  return report;
}

}  // namespace edr::detect
