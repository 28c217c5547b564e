#include "renkf/enkf.hpp"

#include <cmath>
#include <utility>

#include "renkf/error.hpp"
#include "renkf/kalman.hpp"

namespace renkf {

void validate_config(const FilterConfig& config) {
  if (config.ensemble_size < 2) throw_invalid("filter config: ensemble size must be >= 2");
  if (config.variant == AnalysisVariant::square_root && !config.resample) {
    throw Error(ErrorKind::unsupported, "filter config: the square-root variant requires resampling");
  }
}

ForecastResult enkf_forecast(const Ensemble& analysis, const StateSpaceModel& model, RngStream& xi_rng,
                             std::size_t step) {
  if (analysis.size() < 2) throw_invalid("enkf_forecast: need at least 2 particles");
  if (analysis.dim() != model.state_dim()) throw_invalid("enkf_forecast: ensemble has wrong dimension");
  ForecastResult out;
  const Matrix z = xi_rng.standard_normal(model.state_dim(), analysis.size());
  out.noise = Ensemble(psd_sqrt(model.Xi) * z);
  out.ensemble = Ensemble(propagate(model, analysis.particles(), step) + out.noise.particles());
  out.mean = sample_mean(out.ensemble);
  out.cov = sample_cov(out.ensemble);
  return out;
}

Matrix analysis_offset(const Matrix& C_hat, const Matrix& Gamma_hat, const Matrix& C_ueta, const Matrix& H,
                       const Matrix& Gamma) {
  const Eigen::Index d = C_hat.rows();
  if (C_ueta.rows() != d || C_ueta.cols() != H.rows() || Gamma_hat.rows() != Gamma.rows() ||
      Gamma_hat.cols() != Gamma.cols()) {
    throw_invalid("analysis_offset: inconsistent dimensions");
  }
  const Matrix K = kalman_gain(C_hat, H, Gamma);
  const Matrix cross = (Matrix::Identity(d, d) - K * H) * C_ueta * K.transpose();
  return symmetrize(K * (Gamma_hat - Gamma) * K.transpose()) + cross + cross.transpose();
}

AnalysisResult enkf_analysis(const ForecastResult& forecast, const Vector& y, const StateSpaceModel& model,
                             RngStream& eta_rng, AnalysisVariant variant, bool diagnostics, std::size_t step) {
  if (y.size() != model.obs_dim()) throw_invalid("enkf_analysis: observation has wrong dimension");
  const Matrix& H = model.H;
  const Matrix& Gamma = model.Gamma;

  AnalysisResult out;
  FilterStepRecord& rec = out.record;
  rec.forecast_mean = forecast.mean;
  rec.forecast_cov = forecast.cov;
  rec.collapsed = forecast.cov.isZero(0.0);

  if (variant == AnalysisVariant::square_root) {
    Matrix K = kalman_gain(forecast.cov, H, Gamma);
    rec.analysis_mean = gain_mean_update(K, forecast.mean, y, H);
    rec.analysis_cov = gain_cov_update(K, forecast.cov, H);
    if (diagnostics) rec.gain = std::move(K);
  } else {
    const Matrix K = kalman_gain(forecast.cov, H, Gamma);
    const Eigen::Index n = forecast.ensemble.size();
    const Matrix z = eta_rng.standard_normal(model.obs_dim(), n);
    out.obs_noise = Ensemble(psd_sqrt(Gamma) * z);
    // u_n = u_hat_n + K (y + eta_n - H u_hat_n)
    Matrix innovations = (-H * forecast.ensemble.particles()) + out.obs_noise.particles();
    innovations.colwise() += y;
    Ensemble updated(forecast.ensemble.particles() + K * innovations);
    rec.analysis_mean = sample_mean(updated);
    out.anomalies = (updated.particles().colwise() - rec.analysis_mean) / std::sqrt(static_cast<double>(n - 1));
    rec.analysis_cov = symmetrize(out.anomalies * out.anomalies.transpose());
    if (diagnostics) {
      rec.gain = K;
      rec.offset = analysis_offset(forecast.cov, sample_cov(out.obs_noise),
                                   cross_cov(forecast.ensemble, out.obs_noise), H, Gamma);
    }
    out.ensemble = std::move(updated);
  }
  if (!rec.analysis_mean.allFinite() || !rec.analysis_cov.allFinite()) {
    throw DivergenceError(step, "analysis moments became non-finite");
  }
  return out;
}

RenkfStep renkf_step(const GaussianBelief& belief, const StateSpaceModel& model, const Vector& y,
                     const FilterConfig& config, const RngStream& step_rng, std::size_t step,
                     const Matrix* cov_factor) {
  if (!config.resample) throw_invalid("renkf_step: config.resample must be true");
  validate_config(config);
  RngStream resample_rng = step_rng.split(kResampleStream);
  RngStream xi_rng = step_rng.split(kDynamicsNoiseStream);
  RngStream eta_rng = step_rng.split(kObservationNoiseStream);

  const Ensemble drawn = cov_factor ? sample_gaussian_factored(belief.mean, *cov_factor, config.ensemble_size,
                                                               resample_rng)
                                    : sample_gaussian(belief, config.ensemble_size, resample_rng);
  const ForecastResult fc = enkf_forecast(drawn, model, xi_rng, step);
  AnalysisResult an = enkf_analysis(fc, y, model, eta_rng, config.variant, config.store_diagnostics, step);

  RenkfStep out;
  out.belief = GaussianBelief{an.record.analysis_mean, an.record.analysis_cov};
  if (an.anomalies.size() > 0) out.cov_factor = std::move(an.anomalies);
  out.record = std::move(an.record);
  if (config.store_ensembles && an.ensemble) out.record.analysis_ensemble = std::move(an.ensemble);
  return out;
}

EnkfStep enkf_step(const Ensemble& ensemble, const StateSpaceModel& model, const Vector& y,
                   const FilterConfig& config, const RngStream& step_rng, std::size_t step) {
  if (config.resample || config.variant != AnalysisVariant::stochastic) {
    throw_invalid("enkf_step: needs resample = false and the stochastic variant");
  }
  validate_config(config);
  RngStream xi_rng = step_rng.split(kDynamicsNoiseStream);
  RngStream eta_rng = step_rng.split(kObservationNoiseStream);

  const ForecastResult fc = enkf_forecast(ensemble, model, xi_rng, step);
  AnalysisResult an = enkf_analysis(fc, y, model, eta_rng, AnalysisVariant::stochastic,
                                    config.store_diagnostics, step);
  EnkfStep out{std::move(*an.ensemble), std::move(an.record)};
  if (config.store_ensembles) out.record.analysis_ensemble = out.ensemble;
  return out;
}

std::vector<FilterStepRecord> run_filter(const StateSpaceModel& model, const std::vector<Vector>& observations,
                                         const FilterConfig& config, const RngStream& stream) {
  validate_config(config);
  validate_model(model, true);
  if (observations.empty()) throw_invalid("run_filter: no observations");

  std::vector<FilterStepRecord> records;
  records.reserve(observations.size());
  if (config.resample) {
    GaussianBelief belief = model.prior;
    std::optional<Matrix> factor;
    for (std::size_t j = 1; j <= observations.size(); ++j) {
      RenkfStep s = renkf_step(belief, model, observations[j - 1], config, stream.split(j), j,
                               factor ? &*factor : nullptr);
      belief = std::move(s.belief);
      factor = std::move(s.cov_factor);
      records.push_back(std::move(s.record));
    }
  } else {
    RngStream init_rng = stream.split(1).split(kResampleStream);
    Ensemble ensemble = sample_gaussian(model.prior, config.ensemble_size, init_rng);
    for (std::size_t j = 1; j <= observations.size(); ++j) {
      EnkfStep s = enkf_step(ensemble, model, observations[j - 1], config, stream.split(j), j);
      ensemble = std::move(s.ensemble);
      records.push_back(std::move(s.record));
    }
  }
  return records;
}

std::vector<FilterStepRecord> run_filter(const StateSpaceModel& model, const std::vector<Vector>& observations,
                                         const FilterConfig& config) {
  return run_filter(model, observations, config, RngStream(config.seed));
}

}  // namespace renkf
