#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "renkf/models.hpp"
#include "renkf/psd_stats.hpp"
#include "renkf/rng.hpp"

namespace renkf {

/// Analysis update flavour. Stochastic assimilates perturbed observations
/// particle by particle; square_root applies the Kalman moment update to the
/// forecast moments directly and draws no observation noise.
enum class AnalysisVariant { stochastic, square_root };

struct FilterConfig {
  Eigen::Index ensemble_size = 10;
  AnalysisVariant variant = AnalysisVariant::stochastic;
  bool resample = true;
  std::uint64_t seed = 0;
  bool store_ensembles = false;
  // Record the gain and the offset term at every step.
  bool store_diagnostics = false;
};

void validate_config(const FilterConfig& config);

struct FilterStepRecord {
  Vector forecast_mean;
  Matrix forecast_cov;
  Vector analysis_mean;
  Matrix analysis_cov;
  std::optional<Matrix> offset;
  std::optional<Matrix> gain;
  std::optional<Ensemble> analysis_ensemble;
  // Forecast covariance was exactly zero, so the gain vanished.
  bool collapsed = false;
};

struct ForecastResult {
  Ensemble ensemble;  // Psi(u_n) + xi_n
  Vector mean;
  Matrix cov;
  Ensemble noise;  // the xi batch
};

/// Propagates every particle and adds i.i.d. N(0, Xi) draws taken from
/// `xi_rng` (d*N normals, particle by particle).
ForecastResult enkf_forecast(const Ensemble& analysis, const StateSpaceModel& model, RngStream& xi_rng,
                             std::size_t step = 0);

struct AnalysisResult {
  std::optional<Ensemble> ensemble;  // empty for the square-root variant
  Ensemble obs_noise;                // the eta batch; empty for the square-root variant
  Matrix anomalies;                  // (u_n - mu_hat) / sqrt(N-1); empty for the square-root variant
  FilterStepRecord record;
};

/// Analysis step. Stochastic: u_n = (I - K H) u_hat_n + K (y + eta_n) with
/// K = K(C_hat), then empirical moments (divisor N-1). Square-root:
/// mu = M(m_hat, C_hat; y), Sigma = C(C_hat).
AnalysisResult enkf_analysis(const ForecastResult& forecast, const Vector& y, const StateSpaceModel& model,
                             RngStream& eta_rng, AnalysisVariant variant, bool diagnostics = false,
                             std::size_t step = 0);

/// O = K (Gamma_hat - Gamma) K^T + (I - K H) C_ueta K^T + K C_ueta^T (I - H^T K^T),
/// K = K(C_hat), C_ueta the forecast/observation-noise cross-covariance.
Matrix analysis_offset(const Matrix& C_hat, const Matrix& Gamma_hat, const Matrix& C_ueta, const Matrix& H,
                       const Matrix& Gamma);

// Per-step substreams: resampling draws, dynamics noise, observation noise.
inline constexpr std::uint64_t kResampleStream = 0;
inline constexpr std::uint64_t kDynamicsNoiseStream = 1;
inline constexpr std::uint64_t kObservationNoiseStream = 2;

struct RenkfStep {
  GaussianBelief belief;
  FilterStepRecord record;
  // Scaled anomalies F with belief.cov = F F^T (stochastic variant only).
  std::optional<Matrix> cov_factor;
};

/// One REnKF cycle: resample N(belief), forecast, analysis. `step_rng` is the
/// stream for this cycle; its substreams are used in the order above. When
/// `cov_factor` is given, belief.cov must equal F F^T and the resampling
/// square root is taken from F.
RenkfStep renkf_step(const GaussianBelief& belief, const StateSpaceModel& model, const Vector& y,
                     const FilterConfig& config, const RngStream& step_rng, std::size_t step = 0,
                     const Matrix* cov_factor = nullptr);

struct EnkfStep {
  Ensemble ensemble;
  FilterStepRecord record;
};

/// One cycle of the perturbed-observation EnKF on a persistent ensemble.
EnkfStep enkf_step(const Ensemble& ensemble, const StateSpaceModel& model, const Vector& y,
                   const FilterConfig& config, const RngStream& step_rng, std::size_t step = 0);

/// Runs the filter over y_1..y_J. Cycle j uses stream.split(j). The EnKF
/// draws its initial ensemble from stream.split(1).split(kResampleStream),
/// exactly as REnKF does for its first resampling.
std::vector<FilterStepRecord> run_filter(const StateSpaceModel& model, const std::vector<Vector>& observations,
                                         const FilterConfig& config, const RngStream& stream);

/// As above with stream RngStream(config.seed).
std::vector<FilterStepRecord> run_filter(const StateSpaceModel& model, const std::vector<Vector>& observations,
                                         const FilterConfig& config);

}  // namespace renkf
