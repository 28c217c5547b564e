#include "renkf/experiment.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "renkf/csv.hpp"
#include "renkf/error.hpp"
#include "renkf/kalman.hpp"
#include "renkf/parallel.hpp"

namespace renkf {

namespace {

constexpr const char* kResultHeader =
    "series,point,model,d,J,case,alpha,beta,prior_variance,observation,N,M,seed,algorithm,metric,value,trials,"
    "diverged";

ModelKind model_from(std::string_view s) {
  if (s == "linear") return ModelKind::linear;
  if (s == "lorenz96") return ModelKind::lorenz96;
  throw_invalid("unknown model '" + std::string(s) + "'");
}

ObservationMode observation_from(std::string_view s) {
  if (s == "full") return ObservationMode::full;
  if (s == "partial") return ObservationMode::partial;
  throw_invalid("unknown observation mode '" + std::string(s) + "'");
}

std::vector<Vector> slice(const std::vector<Vector>& v, std::size_t count) {
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count)};
}

}  // namespace

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::mean_error: return "mean_error";
    case Metric::ci_width: return "ci_width";
    case Metric::ci_coverage: return "ci_coverage";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "mean_error") return Metric::mean_error;
  if (s == "ci_width") return Metric::ci_width;
  if (s == "ci_coverage") return Metric::ci_coverage;
  throw_invalid("unknown metric '" + std::string(s) + "'");
}

RngStream truth_stream(std::uint64_t seed, std::size_t point) { return RngStream(seed).split(point).split(0); }

std::uint64_t trial_seed(std::uint64_t seed, std::size_t point) {
  return RngStream(seed).split(point).split(1).key();
}

std::vector<ResultRow> run_experiment(const std::vector<ExperimentConfig>& series, unsigned threads) {
  std::vector<ResultRow> rows;
  for (const ExperimentConfig& cfg : series) {
    validate(cfg);
    for (std::size_t p = 0; p < point_count(cfg); ++p) {
      const ExperimentConfig point = point_config(cfg, p);
      const StateSpaceModel model = build_model(point);
      const TwinData data = make_twin_data(model, point.J, truth_stream(point.seed, p));
      for (Algorithm alg : point.algorithms) {
        const MetricsReport rep = monte_carlo(model, data, alg, point.N, point.M, trial_seed(point.seed, p), threads);
        for (Metric metric : {Metric::mean_error, Metric::ci_width, Metric::ci_coverage}) {
          ResultRow row;
          row.series = point.label;
          row.point = p;
          row.model = point.model;
          row.d = point.d;
          row.J = point.J;
          row.covariance_case = point.covariance_case;
          row.alpha = point.alpha;
          row.beta = point.beta;
          row.prior_variance = point.prior_variance;
          row.observation = point.observation;
          row.N = point.N;
          row.M = point.M;
          row.seed = point.seed;
          row.algorithm = alg;
          row.metric = metric;
          row.value = metric == Metric::mean_error ? rep.mean_error
                      : metric == Metric::ci_width ? rep.ci_width
                                                   : rep.ci_coverage;
          row.trials = rep.trials;
          row.diverged = rep.diverged;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::string format_results(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultHeader) + "\n";
  for (const ResultRow& r : rows) {
    out += r.series + "," + std::to_string(r.point) + "," + std::string(to_string(r.model)) + "," +
           std::to_string(r.d) + "," + std::to_string(r.J) + "," + std::string(to_string(r.covariance_case)) + "," +
           csv::format_double(r.alpha) + "," + csv::format_double(r.beta) + "," +
           (r.prior_variance ? csv::format_double(*r.prior_variance) : std::string()) + "," +
           std::string(to_string(r.observation)) + "," + std::to_string(r.N) + "," + std::to_string(r.M) + "," +
           std::to_string(r.seed) + "," + std::string(to_string(r.algorithm)) + "," +
           std::string(to_string(r.metric)) + "," + csv::format_double(r.value) + "," + std::to_string(r.trials) +
           "," + std::to_string(r.diverged) + "\n";
  }
  return out;
}

std::vector<ResultRow> parse_results(std::string_view text) {
  const auto lines = csv::lines(text);
  if (lines.empty() || lines.front() != kResultHeader) throw_invalid("results: missing or unexpected header");
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 18) throw_invalid("results line " + std::to_string(i + 1) + ": expected 18 fields");
    ResultRow r;
    r.series = std::string(f[0]);
    r.point = csv::parse_uint(f[1]);
    r.model = model_from(f[2]);
    r.d = csv::parse_int(f[3]);
    r.J = csv::parse_uint(f[4]);
    r.covariance_case = parse_covariance_case(f[5]);
    r.alpha = csv::parse_double(f[6]);
    r.beta = csv::parse_double(f[7]);
    if (!f[8].empty()) r.prior_variance = csv::parse_double(f[8]);
    r.observation = observation_from(f[9]);
    r.N = csv::parse_int(f[10]);
    r.M = csv::parse_uint(f[11]);
    r.seed = csv::parse_uint(f[12]);
    r.algorithm = parse_algorithm(f[13]);
    r.metric = parse_metric(f[14]);
    r.value = csv::parse_double(f[15]);
    r.trials = csv::parse_uint(f[16]);
    r.diverged = csv::parse_uint(f[17]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_trajectory(const Trajectory& traj) {
  if (traj.states.size() != traj.observations.size() + 1) throw_invalid("trajectory: inconsistent lengths");
  const Eigen::Index d = traj.states.front().size();
  const Eigen::Index k = traj.observations.empty() ? 0 : traj.observations.front().size();
  std::string out = "j";
  for (Eigen::Index i = 1; i <= d; ++i) out += ",u_" + std::to_string(i);
  for (Eigen::Index i = 1; i <= k; ++i) out += ",y_" + std::to_string(i);
  out += '\n';
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    out += std::to_string(j);
    for (Eigen::Index i = 0; i < d; ++i) out += "," + csv::format_double(traj.states[j](i));
    for (Eigen::Index i = 0; i < k; ++i) {
      out += ',';
      if (j > 0) out += csv::format_double(traj.observations[j - 1](i));
    }
    out += '\n';
  }
  return out;
}

Trajectory parse_trajectory(std::string_view text) {
  const auto lines = csv::lines(text);
  if (lines.empty()) throw_invalid("trajectory: empty file");
  const auto header = csv::split(lines.front());
  if (header.empty() || header[0] != "j") throw_invalid("trajectory: header must start with j");
  Eigen::Index d = 0, k = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string expect_u = "u_" + std::to_string(d + 1);
    const std::string expect_y = "y_" + std::to_string(k + 1);
    if (k == 0 && header[c] == expect_u) {
      ++d;
    } else if (header[c] == expect_y) {
      ++k;
    } else {
      throw_invalid("trajectory: unexpected column '" + std::string(header[c]) + "'");
    }
  }
  if (d < 1 || k < 1) throw_invalid("trajectory: need u and y columns");

  Trajectory traj;
  std::size_t expected_j = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    const std::string where = "trajectory line " + std::to_string(i + 1) + ": ";
    if (static_cast<Eigen::Index>(f.size()) != 1 + d + k) throw_invalid(where + "wrong number of fields");
    if (csv::parse_uint(f[0]) != expected_j) throw_invalid(where + "time index out of sequence");
    Vector u(d);
    for (Eigen::Index c = 0; c < d; ++c) u(c) = csv::parse_double(f[1 + c]);
    if (!u.allFinite()) throw_invalid(where + "non-finite state");
    traj.states.push_back(std::move(u));
    if (expected_j > 0) {
      Vector y(k);
      for (Eigen::Index c = 0; c < k; ++c) y(c) = csv::parse_double(f[1 + d + c]);
      if (!y.allFinite()) throw_invalid(where + "non-finite observation");
      traj.observations.push_back(std::move(y));
    }
    ++expected_j;
  }
  if (traj.observations.empty()) throw_invalid("trajectory: no observation rows");
  return traj;
}

Trajectory simulate(const ExperimentConfig& config) {
  validate(config);
  const ExperimentConfig point = point_config(config, 0);
  if (config.sweep != SweepAxis::none) throw Error(ErrorKind::config, "simulate: configuration must not sweep");
  return simulate_truth(build_model(point), point.J, truth_stream(point.seed, 0));
}

std::string filter_report(const ExperimentConfig& config, const Trajectory& truth) {
  validate(config);
  if (config.sweep != SweepAxis::none) throw Error(ErrorKind::config, "filter: configuration must not sweep");
  const StateSpaceModel model = build_model(config);
  const Eigen::Index d = model.state_dim();
  if (truth.states.front().size() != d || truth.observations.front().size() != model.obs_dim()) {
    throw_invalid("filter: trajectory dimensions do not match the configuration");
  }
  const std::size_t J = truth.horizon();
  std::vector<Vector> kf_means;
  if (model.is_linear()) {
    for (const auto& a : kf_run(model, truth.observations).analyses) kf_means.push_back(a.mean);
  }

  std::string out = "algorithm,j";
  for (Eigen::Index i = 1; i <= d; ++i) out += ",mean_" + std::to_string(i);
  for (Eigen::Index i = 1; i <= d; ++i) out += ",var_" + std::to_string(i);
  out += ",error_truth,error_kf\n";

  auto emit = [&](Algorithm alg, std::size_t j, const Vector& mean, const Matrix& cov) {
    out += std::string(to_string(alg)) + "," + std::to_string(j);
    for (Eigen::Index i = 0; i < d; ++i) out += "," + csv::format_double(mean(i));
    for (Eigen::Index i = 0; i < d; ++i) out += "," + csv::format_double(cov(i, i));
    out += "," + csv::format_double((mean - truth.states[j]).norm()) + ",";
    if (!kf_means.empty()) out += csv::format_double((mean - kf_means[j - 1]).norm());
    out += '\n';
  };

  for (Algorithm alg : config.algorithms) {
    if (alg == Algorithm::kf) {
      const KalmanTrajectory kf = kf_run(model, truth.observations);
      for (std::size_t j = 1; j <= J; ++j) emit(alg, j, kf.analyses[j - 1].mean, kf.analyses[j - 1].cov);
      continue;
    }
    const auto records = run_filter(model, truth.observations, filter_config_for(alg, config.N, config.seed),
                                    RngStream(trial_seed(config.seed, 0)).split(0));
    for (std::size_t j = 1; j <= J; ++j) emit(alg, j, records[j - 1].analysis_mean, records[j - 1].analysis_cov);
  }
  return out;
}

AuditReport run_rate_audit(const ExperimentConfig& config, unsigned threads) {
  validate(config);
  if (config.model != ModelKind::linear) {
    throw Error(ErrorKind::unsupported, "audit-rates needs a linear model (the Kalman filter is the reference)");
  }
  if (config.sweep != SweepAxis::none) throw Error(ErrorKind::config, "audit-rates: configuration must not sweep");
  const std::size_t step = config.audit_step;
  AuditReport report;
  report.passed = true;

  struct StepErrors {
    double mean = 0.0;
    double cov = 0.0;
  };
  // Average |mu_hat - mu| and |Sigma_hat - Sigma| at `step` over M trials.
  auto average_errors = [&](const StateSpaceModel& model, const Trajectory& truth, Algorithm alg, Eigen::Index n,
                            const RngStream& trials_rng) {
    const auto obs = slice(truth.observations, step);
    const GaussianBelief kf = kf_run(model, obs).analyses.back();
    std::vector<StepErrors> errs(config.M);
    std::vector<char> ok(config.M, 0);
    parallel_for(config.M, threads, [&](std::size_t t) {
      try {
        const auto rec = run_filter(model, obs, filter_config_for(alg, n, config.seed), trials_rng.split(t)).back();
        errs[t] = {(rec.analysis_mean - kf.mean).norm(), operator_norm(rec.analysis_cov - kf.cov)};
        ok[t] = 1;
      } catch (const DivergenceError&) {
      }
    });
    StepErrors avg;
    std::size_t count = 0;
    for (std::size_t t = 0; t < config.M; ++t) {
      if (!ok[t]) continue;
      avg.mean += errs[t].mean;
      avg.cov += errs[t].cov;
      ++count;
    }
    if (count == 0) throw DivergenceError(step, "audit-rates: every trial diverged");
    avg.mean /= static_cast<double>(count);
    avg.cov /= static_cast<double>(count);
    return avg;
  };

  const RngStream root(config.seed);
  for (Algorithm alg : config.audit_algorithms) {
    // Ensemble-size sweep.
    const StateSpaceModel model = build_model(config);
    const Trajectory truth = simulate_truth(model, step, root.split(0));
    std::vector<std::pair<double, double>> mean_pts, cov_pts;
    for (double n : config.audit_N) {
      const StepErrors e = average_errors(model, truth, alg, static_cast<Eigen::Index>(n), root.split(1));
      mean_pts.emplace_back(n, e.mean);
      cov_pts.emplace_back(n, e.cov);
      report.rows.push_back({"point", alg, "mean_error_vs_N", n, e.mean});
      report.rows.push_back({"point", alg, "cov_error_vs_N", n, e.cov});
    }
    for (const auto& [name, pts] : {std::pair{"mean_error_vs_N", &mean_pts}, std::pair{"cov_error_vs_N", &cov_pts}}) {
      const RateFit fit = fit_rate(*pts, true);
      const bool in_window = fit.slope >= config.audit_slope_min && fit.slope <= config.audit_slope_max;
      report.rows.push_back({"fit", alg, std::string(name) + "_slope", std::nullopt, fit.slope});
      report.rows.push_back({"check", alg, std::string(name) + "_slope_in_window", std::nullopt, in_window ? 1.0 : 0.0});
      report.passed = report.passed && in_window;
    }

    // Effective-dimension sweep at fixed N over case B spectra.
    std::vector<std::pair<double, double>> r2_pts;
    for (double beta : config.audit_beta) {
      ExperimentConfig b = config;
      b.covariance_case = CovarianceCase::B;
      b.observation = ObservationMode::full;
      b.beta = beta;
      const StateSpaceModel mb = build_model(b);
      const Trajectory tb = simulate_truth(mb, step, root.split(2));
      const double r2 = effective_dimension(mb.prior.cov);
      const StepErrors e = average_errors(mb, tb, alg, config.N, root.split(3));
      r2_pts.emplace_back(r2, e.mean);
    }
    std::sort(r2_pts.begin(), r2_pts.end());
    bool monotone = true;
    for (std::size_t i = 0; i < r2_pts.size(); ++i) {
      report.rows.push_back({"point", alg, "mean_error_vs_r2", r2_pts[i].first, r2_pts[i].second});
      if (i > 0 && r2_pts[i].second < r2_pts[i - 1].second) monotone = false;
    }
    report.rows.push_back({"check", alg, "mean_error_nondecreasing_in_r2", std::nullopt, monotone ? 1.0 : 0.0});
    report.passed = report.passed && monotone;
  }
  return report;
}

std::string format_audit(const AuditReport& report) {
  std::string out = "kind,algorithm,quantity,x,value\n";
  for (const AuditRow& r : report.rows) {
    out += r.kind + "," + std::string(to_string(r.algorithm)) + "," + r.quantity + "," +
           (r.x ? csv::format_double(*r.x) : std::string()) + "," + csv::format_double(r.value) + "\n";
  }
  return out;
}

}  // namespace renkf
