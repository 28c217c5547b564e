#include "renkf/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "renkf/error.hpp"
#include "renkf/kalman.hpp"
#include "renkf/parallel.hpp"

namespace renkf {

namespace {

// Diagonal entries above -kVarianceTolerance * (largest diagonal) are
// treated as rounding noise and clipped to zero.
constexpr double kVarianceTolerance = 1e-10;

Vector clipped_variances(const Matrix& cov) {
  const Vector diag = cov.diagonal();
  if (diag.size() == 0) throw_invalid("metrics: empty covariance");
  const double scale = diag.cwiseAbs().maxCoeff();
  if (diag.minCoeff() < -kVarianceTolerance * scale) throw_invalid("metrics: negative variance");
  return diag.cwiseMax(0.0);
}

}  // namespace

double mean_error(const std::vector<Vector>& est, const std::vector<Vector>& ref) {
  if (est.size() != ref.size()) throw_invalid("mean_error: sequence lengths differ");
  if (est.empty()) throw_invalid("mean_error: empty sequences");
  double total = 0.0;
  for (std::size_t j = 0; j < est.size(); ++j) {
    if (est[j].size() != ref[j].size()) throw_invalid("mean_error: vector dimensions differ");
    total += (est[j] - ref[j]).norm();
  }
  return total / static_cast<double>(est.size());
}

double ci_width(const std::vector<Matrix>& covs) {
  if (covs.empty()) throw_invalid("ci_width: empty sequence");
  double total = 0.0;
  for (const Matrix& c : covs) {
    const Vector var = clipped_variances(c);
    total += 2.0 * kCiZ * var.cwiseSqrt().sum() / static_cast<double>(var.size());
  }
  return total / static_cast<double>(covs.size());
}

double ci_coverage(const std::vector<Vector>& means, const std::vector<Matrix>& covs,
                   const std::vector<Vector>& truth) {
  if (means.size() != covs.size() || means.size() != truth.size()) {
    throw_invalid("ci_coverage: sequence lengths differ");
  }
  if (means.empty()) throw_invalid("ci_coverage: empty sequences");
  std::size_t covered = 0;
  std::size_t total = 0;
  for (std::size_t j = 0; j < means.size(); ++j) {
    const Eigen::Index d = means[j].size();
    if (truth[j].size() != d || covs[j].rows() != d || covs[j].cols() != d) {
      throw_invalid("ci_coverage: shape mismatch");
    }
    const Vector var = clipped_variances(covs[j]);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(truth[j](i) - means[j](i)) <= kCiZ * std::sqrt(var(i))) ++covered;
    }
    total += static_cast<std::size_t>(d);
  }
  return static_cast<double>(covered) / static_cast<double>(total);
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kf: return "kf";
    case Algorithm::enkf: return "enkf";
    case Algorithm::renkf: return "renkf";
    case Algorithm::renkf_sqrt: return "renkf-sqrt";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view s) {
  if (s == "kf") return Algorithm::kf;
  if (s == "enkf") return Algorithm::enkf;
  if (s == "renkf") return Algorithm::renkf;
  if (s == "renkf-sqrt") return Algorithm::renkf_sqrt;
  throw_invalid("unknown algorithm '" + std::string(s) + "'");
}

FilterConfig filter_config_for(Algorithm a, Eigen::Index ensemble_size, std::uint64_t seed) {
  FilterConfig cfg;
  cfg.ensemble_size = ensemble_size;
  cfg.seed = seed;
  switch (a) {
    case Algorithm::kf: throw_invalid("filter_config_for: the Kalman filter has no ensemble");
    case Algorithm::enkf: cfg.resample = false; break;
    case Algorithm::renkf: cfg.resample = true; break;
    case Algorithm::renkf_sqrt:
      cfg.resample = true;
      cfg.variant = AnalysisVariant::square_root;
      break;
  }
  return cfg;
}

TwinData make_twin_data(const StateSpaceModel& model, std::size_t horizon, const RngStream& rng) {
  TwinData data;
  data.truth = simulate_truth(model, horizon, rng);
  if (model.is_linear()) {
    const KalmanTrajectory kf = kf_run(model, data.truth.observations);
    data.kf_means.reserve(horizon);
    for (const auto& a : kf.analyses) data.kf_means.push_back(a.mean);
  }
  return data;
}

TrialMetrics trial_metrics(const std::vector<Vector>& means, const std::vector<Matrix>& covs,
                           const TwinData& data) {
  const std::vector<Vector> truth(data.truth.states.begin() + 1, data.truth.states.end());
  TrialMetrics m;
  m.mean_error = data.kf_means.empty() ? mean_error_l96(means, truth) : mean_error_linear(means, data.kf_means);
  m.ci_width = ci_width(covs);
  m.ci_coverage = ci_coverage(means, covs, truth);
  return m;
}

MetricsReport monte_carlo(const StateSpaceModel& model, const TwinData& data, Algorithm algorithm,
                          Eigen::Index ensemble_size, std::size_t trials, std::uint64_t seed, unsigned threads) {
  if (trials < 1) throw_invalid("monte_carlo: need at least one trial");
  const auto& obs = data.truth.observations;

  auto collect = [](auto const& seq, auto mean_of, auto cov_of) {
    std::pair<std::vector<Vector>, std::vector<Matrix>> out;
    for (const auto& s : seq) {
      out.first.push_back(mean_of(s));
      out.second.push_back(cov_of(s));
    }
    return out;
  };

  MetricsReport report;
  if (algorithm == Algorithm::kf) {
    const KalmanTrajectory kf = kf_run(model, obs);
    const auto [means, covs] = collect(kf.analyses, [](const GaussianBelief& b) { return b.mean; },
                                       [](const GaussianBelief& b) { return b.cov; });
    report.per_trial.push_back(trial_metrics(means, covs, data));
    report.trials = 1;
  } else {
    const RngStream root(seed);
    std::vector<TrialMetrics> results(trials);
    std::vector<char> diverged(trials, 0);
    parallel_for(trials, threads, [&](std::size_t t) {
      try {
        const auto records = run_filter(model, obs, filter_config_for(algorithm, ensemble_size, seed), root.split(t));
        const auto [means, covs] = collect(records, [](const FilterStepRecord& r) { return r.analysis_mean; },
                                           [](const FilterStepRecord& r) { return r.analysis_cov; });
        results[t] = trial_metrics(means, covs, data);
      } catch (const DivergenceError&) {
        diverged[t] = 1;
      }
    });
    for (std::size_t t = 0; t < trials; ++t) {
      if (diverged[t]) {
        ++report.diverged;
      } else {
        report.per_trial.push_back(results[t]);
      }
    }
    report.trials = trials;
  }

  if (report.per_trial.empty()) {
    report.mean_error = report.ci_width = report.ci_coverage = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  for (const auto& t : report.per_trial) {
    report.mean_error += t.mean_error;
    report.ci_width += t.ci_width;
    report.ci_coverage += t.ci_coverage;
  }
  const auto count = static_cast<double>(report.per_trial.size());
  report.mean_error /= count;
  report.ci_width /= count;
  report.ci_coverage /= count;
  return report;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points, bool log_log) {
  if (points.size() < 3) throw_invalid("fit_rate: need at least 3 points");
  RateFit fit;
  for (const auto& [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw_invalid("fit_rate: non-finite point");
    if (log_log) {
      if (x <= 0.0 || y <= 0.0) throw_invalid("fit_rate: log-log fit needs positive values");
      fit.points.emplace_back(std::log(x), std::log(y));
    } else {
      fit.points.emplace_back(x, y);
    }
  }
  const double n = static_cast<double>(fit.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : fit.points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw_invalid("fit_rate: all x values are equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace renkf
