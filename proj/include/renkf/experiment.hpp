#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "renkf/config.hpp"
#include "renkf/metrics.hpp"
#include "renkf/models.hpp"

namespace renkf {

enum class Metric { mean_error, ci_width, ci_coverage };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// One (series, grid point, algorithm, metric) value.
struct ResultRow {
  std::string series;
  std::size_t point = 0;
  ModelKind model = ModelKind::linear;
  Eigen::Index d = 0;
  std::size_t J = 0;
  CovarianceCase covariance_case = CovarianceCase::A;
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> prior_variance;
  ObservationMode observation = ObservationMode::full;
  Eigen::Index N = 0;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::renkf;
  Metric metric = Metric::mean_error;
  double value = 0.0;
  std::size_t trials = 0;
  std::size_t diverged = 0;

  bool operator==(const ResultRow&) const = default;
};

// Stream layout for grid point p of a series with seed s:
//   RngStream(s).split(p).split(0)  truth and observations
//   RngStream(s).split(p).split(1)  key of the Monte Carlo trial streams
RngStream truth_stream(std::uint64_t seed, std::size_t point);
std::uint64_t trial_seed(std::uint64_t seed, std::size_t point);

/// For every series and grid point: one twin data set, then monte_carlo for
/// each configured algorithm. Rows are ordered by series, point, algorithm
/// and metric; the output does not depend on `threads`.
std::vector<ResultRow> run_experiment(const std::vector<ExperimentConfig>& series, unsigned threads = 1);

std::string format_results(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results(std::string_view text);

/// Columns j, u_1..u_d, y_1..y_k; the y fields of row j = 0 are empty.
std::string format_trajectory(const Trajectory& traj);
Trajectory parse_trajectory(std::string_view text);

/// Truth for a single-point configuration (grid point 0 streams).
Trajectory simulate(const ExperimentConfig& config);

/// Per-step records of every configured algorithm on one trajectory, as
/// CSV: algorithm, j, mean_1..mean_d, var_1..var_d, error_truth, error_kf.
/// Ensemble algorithms use trial 0 of grid point 0. error_kf is empty for
/// nonlinear models.
std::string filter_report(const ExperimentConfig& config, const Trajectory& truth);

struct AuditRow {
  std::string kind;  // point, fit or check
  Algorithm algorithm = Algorithm::renkf;
  std::string quantity;
  std::optional<double> x;
  double value = 0.0;
};

struct AuditReport {
  std::vector<AuditRow> rows;
  bool passed = false;
};

/// Empirical check of the N^{-1/2} error rate and of growth with the
/// effective dimension, against the Kalman filter at step audit_step.
AuditReport run_rate_audit(const ExperimentConfig& config, unsigned threads = 1);

std::string format_audit(const AuditReport& report);

}  // namespace renkf
