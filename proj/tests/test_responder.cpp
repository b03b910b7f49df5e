#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "edr/errors.hpp"
#include "edr/responder.hpp"
#include "edr/rng.hpp"
#include "edr/textio.hpp"

using namespace edr;
using resp::ResponderConfig;
using resp::ResponderState;

namespace {

ResponderConfig small_config(int num_steps = 3, int smooth_window = 2) {
  ResponderConfig config;
  config.num_steps = num_steps;
  config.smooth_window = smooth_window;
  return config;
}

std::uint64_t digest_of(const std::vector<double>& values) {
  std::string joined;
  for (double v : values) {
    joined += format_double_exact(v);
    joined += ',';
  }
  return fnv1a(joined);
}

}  // namespace

TEST_CASE("trailing average hand values") {
  CHECK(resp::smooth({1.0, 2.0, 3.0, 4.0}, 5) == std::vector<double>{1.0, 1.5, 2.0, 2.5});
  CHECK(resp::smooth({0.0, 10.0}, 2) == std::vector<double>{0.0, 5.0});
  CHECK(resp::smooth({5.0, 5.0, 5.0, 5.0}, 3) == std::vector<double>{5.0, 5.0, 5.0, 5.0});
  // Once the window is full only the trailing `window` values contribute.
  const std::vector<double> s = resp::smooth({100.0, 0.0, 0.0, 6.0, 9.0}, 3);
  CHECK(s[3] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s[4] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(resp::smooth({1.0}, 0), std::invalid_argument);
}

TEST_CASE("error rate is the last difference") {
  CHECK(resp::error_rate({10.0, 12.0}) == 2.0);
  CHECK(resp::error_rate({5.0, 9.0, 6.5}) == -2.5);
  CHECK_THROWS_AS(resp::error_rate({7.0}), InsufficientData);
  CHECK_THROWS_AS(resp::error_rate({}), InsufficientData);
}

TEST_CASE("reconstruction error hand values") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  CHECK(resp::reconstruction_error(a, a) == 0.0);
  CHECK(resp::reconstruction_error(std::vector<double>{0.0, 0.0},
                                   std::vector<double>{3.0, 4.0}) == 12.5);
  CHECK(resp::reconstruction_error(std::vector<double>{255.0},
                                   std::vector<double>{0.0}) == 65025.0);
  CHECK_THROWS_AS(resp::reconstruction_error(std::vector<double>{1.0},
                                             std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      resp::reconstruction_error(std::vector<double>{}, std::vector<double>{}),
      std::invalid_argument);
}

TEST_CASE("age penalties count steps since each observation") {
  const acq::PenaltyConfig penalty;  // gain 6.15, offset 0.1
  const std::vector<double> rates{2.0, -1.0, 0.5};
  const std::vector<double> got = resp::penalized_targets(rates, 3, penalty);
  REQUIRE(got.size() == 3);
  CHECK(got[0] == doctest::Approx(2.0 + 6.15 * std::log(3.0) + 0.1).epsilon(1e-12));
  CHECK(got[1] == doctest::Approx(-1.0 + 6.15 * std::log(2.0) + 0.1).epsilon(1e-12));
  CHECK(got[2] == doctest::Approx(0.5 + 0.1).epsilon(1e-12));
  CHECK(resp::penalized_targets({}, 0, penalty).empty());
}

TEST_CASE("begin_response validates its inputs") {
  ResponderConfig config = small_config();
  CHECK_THROWS_AS(resp::begin_response(config, {10.0}), InsufficientData);

  config.smooth_window = 1;
  CHECK_THROWS_AS(resp::begin_response(config, {10.0, 10.0}), std::invalid_argument);
  config.smooth_window = 2;

  config.num_steps = 0;
  CHECK_THROWS_AS(resp::begin_response(config, {10.0, 10.0}), std::invalid_argument);
  config.num_steps = 3;

  CHECK_THROWS_AS(
      resp::begin_response(config, {10.0, std::numeric_limits<double>::quiet_NaN()}),
      std::invalid_argument);

  const ResponderState state = resp::begin_response(config, {10.0, 11.0});
  CHECK(state.step == 0);
  CHECK(state.raw_errors == std::vector<double>{10.0, 11.0});
  CHECK(state.actions.empty());
  CHECK(state.rates.empty());
}

TEST_CASE("episode flow produces one action per step and then completes") {
  const ResponderConfig config = small_config(3, 2);
  ResponderState state = resp::begin_response(config, {10.0, 10.0});

  const Eigen::VectorXd a0 = resp::respond_step(state, 10.0);
  CHECK(state.step == 1);
  CHECK(state.actions.size() == 1);
  CHECK(state.rates.empty());  // the first action has no observed outcome yet

  resp::respond_step(state, 9.0);
  CHECK(state.step == 2);
  CHECK(state.rates.size() == 1);

  resp::respond_step(state, 8.0);
  CHECK(state.step == 3);
  CHECK(state.rates.size() == 2);
  CHECK(resp::is_complete(state));
  CHECK_THROWS_AS(resp::respond_step(state, 7.0), EpisodeComplete);

  for (const Eigen::VectorXd& a : state.actions) {
    REQUIRE(a.size() == 2);
    CHECK(a(0) >= 0.0);
    CHECK(a(0) <= 1.0);
    CHECK(a(1) >= 0.0);
    CHECK(a(1) <= 1.0);
  }
  CHECK_THROWS_AS(resp::respond_step(state, std::numeric_limits<double>::infinity()),
                  EpisodeComplete);  // completion is checked before input validity

  // With no observations the posterior is flat, so the first action is the
  // exact box center.
  CHECK(a0(0) == 0.5);
  CHECK(a0(1) == 0.5);
}

TEST_CASE("non-finite error is rejected mid-episode") {
  ResponderState state = resp::begin_response(small_config(), {10.0, 10.0});
  CHECK_THROWS_AS(resp::respond_step(state, std::numeric_limits<double>::quiet_NaN()),
                  std::invalid_argument);
}

TEST_CASE("trace is replayable from the raw errors") {
  ResponderConfig config = small_config(6, 3);
  ResponderState state = resp::begin_response(config, {12.0, 11.0, 13.0});
  const std::size_t seed_len = state.raw_errors.size();

  SplitMix64 rng(0xfeedull);
  while (!resp::is_complete(state)) {
    resp::respond_step(state, 8.0 + 4.0 * rng.next_unit());
  }
  REQUIRE(state.trace.size() == 6);
  REQUIRE(state.rates.size() == 5);

  const std::vector<double> smoothed = resp::smooth(state.raw_errors, config.smooth_window);
  for (std::size_t i = 0; i < state.trace.size(); ++i) {
    const resp::StepTrace& row = state.trace[i];
    CHECK(row.step == static_cast<int>(i));
    CHECK(row.raw_error == state.raw_errors[seed_len + i]);
    CHECK(row.smoothed_error == smoothed[seed_len + i]);
    CHECK(row.beta == acq::beta_at(config.schedule, static_cast<int>(i)));
    if (i == 0) {
      CHECK(std::isnan(row.rate));
    } else {
      // Crediting uses the trailing difference of the smoothed series.
      CHECK(row.rate == smoothed[seed_len + i] - smoothed[seed_len + i - 1]);
      CHECK(row.rate == state.rates[i - 1]);
    }
    const std::vector<double> prefix(state.rates.begin(),
                                     state.rates.begin() + static_cast<long>(i));
    CHECK(row.penalized_digest ==
          digest_of(resp::penalized_targets(prefix, static_cast<int>(i), config.penalty)));
  }
  CHECK(state.trace[0].penalized_digest == fnv1a(""));
}

TEST_CASE("identical inputs give identical episodes") {
  auto run = [] {
    ResponderState state = resp::begin_response(small_config(5, 2), {20.0, 19.0});
    std::vector<Eigen::VectorXd> actions;
    for (double e : {18.0, 14.0, 15.0, 11.0, 12.0}) {
      actions.push_back(resp::respond_step(state, e));
    }
    return actions;
  };
  const auto first = run();
  const auto second = run();
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK((first[i] - second[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("random first action is reproducible and in bounds") {
  ResponderConfig config = small_config(2, 2);
  config.random_first_action = true;
  config.first_action_seed = 7;

  ResponderState one = resp::begin_response(config, {10.0, 10.0});
  ResponderState two = resp::begin_response(config, {10.0, 10.0});
  const Eigen::VectorXd a1 = resp::respond_step(one, 10.0);
  const Eigen::VectorXd a2 = resp::respond_step(two, 10.0);
  CHECK((a1 - a2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a1(0) >= 0.0);
  CHECK(a1(0) <= 1.0);
  CHECK(a1(1) >= 0.0);
  CHECK(a1(1) <= 1.0);
  CHECK_FALSE((a1(0) == 0.5 && a1(1) == 0.5));  // ablation departs from the center

  // Only the first step draws randomly; a different seed moves the draw.
  config.first_action_seed = 8;
  ResponderState three = resp::begin_response(config, {10.0, 10.0});
  const Eigen::VectorXd b1 = resp::respond_step(three, 10.0);
  CHECK((a1 - b1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("trace CSV has the documented shape") {
  ResponderState state = resp::begin_response(small_config(3, 2), {10.0, 10.0});
  resp::respond_step(state, 10.0);
  resp::respond_step(state, 12.0);
  resp::respond_step(state, 11.0);

  std::ostringstream out;
  resp::write_trace_csv(state, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "step,raw_error,smoothed,rate,penalized_digest,beta,a1,a2");

  int rows = 0;
  while (std::getline(in, line)) {
    if (rows == 0) {
      // No rate exists at step 0; the field renders empty.
      const std::string prefix = "0,10,10,,";
      CHECK(line.substr(0, prefix.size()) == prefix);
      char digest[20];
      std::snprintf(digest, sizeof(digest), "%016llx",
                    static_cast<unsigned long long>(fnv1a("")));
      CHECK(line.find(digest) != std::string::npos);
    }
    std::size_t commas = 0;
    for (char c : line) commas += c == ',' ? 1 : 0;
    CHECK(commas == 7);
    ++rows;
  }
  CHECK(rows == 3);
}
