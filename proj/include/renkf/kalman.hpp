#pragma once

#include <vector>

#include "renkf/models.hpp"
#include "renkf/psd_stats.hpp"

namespace renkf {

/// K(C) = C H^T (H C H^T + Gamma)^{-1}, via a Cholesky solve.
Matrix kalman_gain(const Matrix& C, const Matrix& H, const Matrix& Gamma);

/// M(m, C; y) = m + K(C) (y - H m).
Vector mean_update(const Vector& m, const Matrix& C, const Vector& y, const Matrix& H, const Matrix& Gamma);

/// C(C) = (I - K(C) H) C, symmetrized and projected onto the PSD cone.
Matrix cov_update(const Matrix& C, const Matrix& H, const Matrix& Gamma);

/// The two updates for a gain K that is already known; mean_update and
/// cov_update are these with K = K(C).
Vector gain_mean_update(const Matrix& K, const Vector& m, const Vector& y, const Matrix& H);
Matrix gain_cov_update(const Matrix& K, const Matrix& C, const Matrix& H);

struct KalmanStep {
  GaussianBelief forecast;  // (m_j, C_j)
  GaussianBelief analysis;  // (mu_j, Sigma_j)
};

KalmanStep kf_step(const GaussianBelief& prior, const StateSpaceModel& model, const Vector& y);

struct KalmanTrajectory {
  std::vector<GaussianBelief> forecasts;
  std::vector<GaussianBelief> analyses;
};

KalmanTrajectory kf_run(const StateSpaceModel& model, const std::vector<Vector>& observations);

}  // namespace renkf
