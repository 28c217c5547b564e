#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "renkf/enkf.hpp"
#include "renkf/models.hpp"
#include "renkf/psd_stats.hpp"

namespace renkf {

// Two-sided 95% normal quantile used for every confidence interval.
inline constexpr double kCiZ = 1.96;

/// (1/J) sum_j |est_j - ref_j|_2. Used against Kalman means (linear models)
/// or against the true states (Lorenz 96).
double mean_error(const std::vector<Vector>& est, const std::vector<Vector>& ref);

inline double mean_error_linear(const std::vector<Vector>& est, const std::vector<Vector>& kf) {
  return mean_error(est, kf);
}
inline double mean_error_l96(const std::vector<Vector>& est, const std::vector<Vector>& truth) {
  return mean_error(est, truth);
}

/// (1/J) sum_j (1/d) sum_i 2 * 1.96 * sqrt(Sigma_j(i,i)).
double ci_width(const std::vector<Matrix>& covs);

/// Fraction of (j, i) with |u_j(i) - mu_j(i)| <= 1.96 sqrt(Sigma_j(i,i)).
/// Interval endpoints count as covered.
double ci_coverage(const std::vector<Vector>& means, const std::vector<Matrix>& covs,
                   const std::vector<Vector>& truth);

enum class Algorithm { kf, enkf, renkf, renkf_sqrt };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);

/// Filter configuration for an ensemble algorithm (throws for kf).
FilterConfig filter_config_for(Algorithm a, Eigen::Index ensemble_size, std::uint64_t seed);

struct TrialMetrics {
  double mean_error = 0.0;
  double ci_width = 0.0;
  double ci_coverage = 0.0;
};

struct MetricsReport {
  double mean_error = 0.0;
  double ci_width = 0.0;
  double ci_coverage = 0.0;
  std::size_t trials = 0;    // M
  std::size_t diverged = 0;  // trials excluded from the averages
  std::vector<TrialMetrics> per_trial;
};

/// Quantities held fixed across all Monte Carlo trials.
struct TwinData {
  Trajectory truth;
  // Kalman analysis means mu_1..mu_J for linear models; empty otherwise.
  std::vector<Vector> kf_means;
};

TwinData make_twin_data(const StateSpaceModel& model, std::size_t horizon, const RngStream& rng);

/// Metrics of one run. The mean error is taken against `data.kf_means`
/// when present and against the truth otherwise.
TrialMetrics trial_metrics(const std::vector<Vector>& means, const std::vector<Matrix>& covs,
                           const TwinData& data);

/// Runs `algorithm` M times on the same truth and observations; trial t uses
/// RngStream(seed).split(t). Trials that diverge are counted and excluded.
/// The Kalman filter is deterministic and is reported as a single trial.
MetricsReport monte_carlo(const StateSpaceModel& model, const TwinData& data, Algorithm algorithm,
                          Eigen::Index ensemble_size, std::size_t trials, std::uint64_t seed,
                          unsigned threads = 1);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<std::pair<double, double>> points;  // fitted (x, y), logged in log-log mode
};

/// Ordinary least squares of y on x, or of log y on log x.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points, bool log_log = true);

}  // namespace renkf
