#include <limits>
#include <random>
#include <string>

#include "doctest.h"
#include "renkf/config.hpp"
#include "renkf/csv.hpp"
#include "renkf/error.hpp"
#include "renkf/experiment.hpp"

using namespace renkf;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error for: " << text);
  return ErrorKind::io;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

ExperimentConfig random_config(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ExperimentConfig c;
  c.label = "s" + std::to_string(gen() % 1000);
  c.model = gen() % 2 ? ModelKind::linear : ModelKind::lorenz96;
  c.d = 6 * (1 + gen() % 8);
  c.J = 1 + gen() % 300;
  c.alpha = std::pow(10.0, -8.0 * u(gen));
  c.beta = 0.1 + 2 * u(gen);
  if (gen() % 2) c.prior_variance = u(gen) + 1e-3;
  if (gen() % 3 == 0) {
    c.covariance_case = CovarianceCase::C;
    c.observation = ObservationMode::partial;
  } else {
    c.covariance_case = gen() % 2 ? CovarianceCase::A : CovarianceCase::B;
  }
  c.algorithms = {Algorithm::renkf};
  if (c.model == ModelKind::linear && gen() % 2) c.algorithms.push_back(Algorithm::kf);
  if (gen() % 2) c.algorithms.push_back(Algorithm::renkf_sqrt);
  c.N = 2 + gen() % 100;
  c.M = 1 + gen() % 100;
  c.seed = gen();
  switch (gen() % 3) {
    case 0: break;
    case 1:
      c.sweep = SweepAxis::alpha;
      c.grid = {u(gen), 1e-16, 0.1 + u(gen)};
      break;
    case 2:
      c.sweep = SweepAxis::N;
      c.grid = {10, 20, 40};
      break;
  }
  c.forcing = 8.0 + u(gen);
  c.dt_obs = 0.01 * (1 + u(gen));
  c.substeps = 1 + gen() % 4;
  c.audit_slope_min = -0.6 - 0.1 * u(gen);
  return c;
}

}  // namespace

TEST_CASE("parse_config defaults and sections") {
  const auto s = parse_config(
      "# shared\n"
      "d = 12\n"
      "alpha = 1e-3  # trailing comment\n"
      "[first]\n"
      "N = 40\n"
      "[second]\n"
      "d = 6\n"
      "algorithms = kf, renkf-sqrt\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].label == "first");
  CHECK(s[0].d == 12);
  CHECK(s[0].N == 40);
  CHECK(s[0].alpha == 1e-3);
  CHECK(s[1].d == 6);
  CHECK(s[1].N == 10);
  CHECK(s[1].algorithms == std::vector<Algorithm>{Algorithm::kf, Algorithm::renkf_sqrt});

  const auto plain = parse_config("J = 5\n");
  REQUIRE(plain.size() == 1);
  CHECK(plain[0].label == "run");
  CHECK(plain[0].J == 5);
}

TEST_CASE("parse_config rejects bad input") {
  CHECK(kind_of("alhpa = 1\n") == ErrorKind::config);
  CHECK(message_of("alhpa = 1\n").find("line 1") != std::string::npos);
  CHECK(kind_of("d = 4\nd = 5\n") == ErrorKind::config);
  CHECK(message_of("N = 4\nN = five\n").find("line 2") != std::string::npos);
  CHECK(kind_of("M = 0\n") == ErrorKind::config);
  CHECK(message_of("M = 0\n").find("'M'") != std::string::npos);
  CHECK(kind_of("N = 1\n") == ErrorKind::config);
  CHECK(kind_of("J = 0\n") == ErrorKind::config);
  CHECK(kind_of("algorithms = renkf, pf\n") == ErrorKind::config);
  CHECK(kind_of("observation = partial\nd = 7\n") == ErrorKind::config);
  CHECK(kind_of("model = lorenz96\nalgorithms = kf\n") == ErrorKind::config);
  CHECK(kind_of("sweep = alpha\n") == ErrorKind::config);
  CHECK(kind_of("[a\n") == ErrorKind::config);
  CHECK(kind_of("just words\n") == ErrorKind::config);
}

TEST_CASE("config round trip") {
  std::mt19937_64 gen(17);
  for (int k = 0; k < 100; ++k) {
    std::vector<ExperimentConfig> series;
    const int n = 1 + static_cast<int>(gen() % 3);
    for (int i = 0; i < n; ++i) {
      auto c = random_config(gen);
      c.label += "_" + std::to_string(i);
      series.push_back(c);
    }
    for (const auto& c : series) REQUIRE_NOTHROW(validate(c));
    const std::string text = format_config(series);
    CHECK(parse_config(text) == series);
    CHECK(format_config(parse_config(text)) == text);
  }
}

TEST_CASE("presets are valid and round-trip") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto series = preset(name);
    CHECK(!series.empty());
    for (const auto& c : series) CHECK_NOTHROW(validate(c));
    CHECK(parse_config(format_config(series)) == series);
  }
  CHECK_THROWS_AS(preset("table9"), Error);

  const auto fig2 = preset("fig2");
  const auto& alpha = fig2.front();
  REQUIRE(alpha.sweep == SweepAxis::alpha);
  REQUIRE(alpha.grid.size() == 15);
  CHECK(alpha.grid.front() == doctest::Approx(1e-16));
  CHECK(alpha.grid.back() == doctest::Approx(1.0));
  CHECK(alpha.M == 10);

  const auto t2 = preset("table2");
  for (const auto& c : t2) {
    CHECK(c.d == 20);
    CHECK(c.J == 200);
    CHECK(c.M == 100);
  }
}

TEST_CASE("point_config applies the sweep") {
  ExperimentConfig c;
  c.sweep = SweepAxis::d;
  c.grid = {3, 9};
  REQUIRE(point_count(c) == 2);
  const auto p = point_config(c, 1);
  CHECK(p.d == 9);
  CHECK(p.sweep == SweepAxis::none);
  CHECK(p.grid.empty());
  CHECK_THROWS_AS(point_config(c, 2), Error);
}

TEST_CASE("build_model") {
  ExperimentConfig c;
  c.model = ModelKind::lorenz96;
  c.d = 6;
  c.covariance_case = CovarianceCase::C;
  c.observation = ObservationMode::partial;
  c.algorithms = {Algorithm::renkf};
  const auto m = build_model(c);
  CHECK(m.obs_dim() == 4);
  CHECK(!m.is_linear());
  c.prior_variance = 0.5;
  CHECK(build_model(c).prior.cov == 0.5 * Matrix::Identity(6, 6));
}

TEST_CASE("csv number format") {
  for (double x : {0.1, 1e-16, 1.0 / 3.0, -2.5e300, 5e-324, 0.0, 123456789.0}) {
    CHECK(csv::parse_double(csv::format_double(x)) == x);
  }
  CHECK(csv::format_double(0.5) == "0.5");
  CHECK(std::isnan(csv::parse_double(csv::format_double(std::numeric_limits<double>::quiet_NaN()))));
  CHECK_THROWS_AS(csv::parse_double("1.0x"), Error);
  CHECK_THROWS_AS(csv::parse_uint("-1"), Error);
}

TEST_CASE("results round trip") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<ResultRow> rows;
    for (int i = 0; i < 5; ++i) {
      ResultRow r;
      r.series = "s" + std::to_string(k);
      r.point = gen() % 20;
      r.model = gen() % 2 ? ModelKind::linear : ModelKind::lorenz96;
      r.d = 1 + gen() % 300;
      r.J = 1 + gen() % 300;
      r.covariance_case = static_cast<CovarianceCase>(gen() % 3);
      r.alpha = std::abs(u(gen)) * 1e-3;
      r.beta = std::abs(u(gen));
      if (gen() % 2) r.prior_variance = std::abs(u(gen));
      r.observation = gen() % 2 ? ObservationMode::full : ObservationMode::partial;
      r.N = 2 + gen() % 100;
      r.M = 1 + gen() % 100;
      r.seed = gen();
      r.algorithm = static_cast<Algorithm>(gen() % 4);
      r.metric = static_cast<Metric>(gen() % 3);
      r.value = u(gen) * std::pow(10.0, static_cast<int>(gen() % 20) - 10);
      r.trials = gen() % 100;
      r.diverged = gen() % 3;
      rows.push_back(r);
    }
    const std::string text = format_results(rows);
    CHECK(parse_results(text) == rows);
    CHECK(format_results(parse_results(text)) == text);
  }
}

TEST_CASE("trajectory round trip") {
  ExperimentConfig c;
  c.model = ModelKind::lorenz96;
  c.d = 6;
  c.J = 20;
  c.alpha = 1e-2;
  c.covariance_case = CovarianceCase::C;
  c.observation = ObservationMode::partial;
  c.algorithms = {Algorithm::renkf};
  const Trajectory t = simulate(c);
  const std::string text = format_trajectory(t);
  CHECK(text.substr(0, text.find('\n')) == "j,u_1,u_2,u_3,u_4,u_5,u_6,y_1,y_2,y_3,y_4");
  const Trajectory back = parse_trajectory(text);
  REQUIRE(back.states.size() == t.states.size());
  for (std::size_t j = 0; j < t.states.size(); ++j) CHECK(back.states[j] == t.states[j]);
  for (std::size_t j = 0; j < t.horizon(); ++j) CHECK(back.observations[j] == t.observations[j]);
  CHECK(format_trajectory(back) == text);
}

TEST_CASE("zero-noise linear simulation gives constant rows") {
  ExperimentConfig c;
  c.d = 3;
  c.J = 4;
  c.alpha = 1e-300;
  c.prior_variance = 1e-300;
  const Trajectory t = simulate(c);
  for (const auto& s : t.states) CHECK(s.cwiseAbs().maxCoeff() < 1e-140);
}

TEST_CASE("run_experiment is deterministic and thread independent") {
  auto series = parse_config(
      "d = 4\nJ = 12\nalpha = 1e-2\nM = 4\nseed = 5\nalgorithms = kf, enkf, renkf, renkf-sqrt\n"
      "[a]\n"
      "sweep = N\ngrid = 5, 10\n"
      "[b]\n"
      "model = lorenz96\nd = 6\nalgorithms = renkf\n");
  const auto one = run_experiment(series, 1);
  const auto many = run_experiment(series, 4);
  CHECK(one == many);
  CHECK(format_results(one) == format_results(many));
  CHECK(one.size() == 2 * 4 * 3 + 3);
  for (const auto& r : one) {
    if (r.algorithm == Algorithm::kf && r.metric == Metric::mean_error) CHECK(r.value == 0.0);
  }
}

TEST_CASE("filter report") {
  ExperimentConfig c;
  c.d = 3;
  c.J = 7;
  c.algorithms = {Algorithm::kf, Algorithm::renkf};
  const Trajectory t = simulate(c);
  const std::string report = filter_report(c, t);
  const auto rows = csv::lines(report);
  CHECK(rows[0] == "algorithm,j,mean_1,mean_2,mean_3,var_1,var_2,var_3,error_truth,error_kf");
  std::size_t count = 0;
  for (const auto& r : rows) count += !r.empty();
  CHECK(count == 1 + 2 * 7);
  CHECK(rows[1].substr(0, 5) == "kf,1,");
  CHECK(rows[1].substr(rows[1].rfind(',')) == ",0");
}

TEST_CASE("rate audit rejects nonlinear models") {
  ExperimentConfig c;
  c.model = ModelKind::lorenz96;
  c.algorithms = {Algorithm::renkf};
  try {
    run_rate_audit(c);
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported);
  }
}
