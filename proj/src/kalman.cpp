#include "renkf/kalman.hpp"

#include <Eigen/Cholesky>

#include "renkf/error.hpp"

namespace renkf {

namespace {

// LDL^T rather than LL^T: no square roots, so small cases come out exact.
Eigen::LDLT<Matrix> factor_innovation(const Matrix& S) {
  Eigen::LDLT<Matrix> ldlt(symmetrize(S));
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw_invalid("kalman: innovation covariance is not positive definite");
  }
  return ldlt;
}

}  // namespace

Matrix kalman_gain(const Matrix& C, const Matrix& H, const Matrix& Gamma) {
  if (C.rows() != C.cols() || H.cols() != C.rows() || Gamma.rows() != H.rows() || Gamma.cols() != H.rows()) {
    throw_invalid("kalman: inconsistent dimensions");
  }
  // P = C H^T; solve (H P + Gamma) K^T = P^T, using the symmetry of C.
  const Matrix P = C * H.transpose();
  return factor_innovation(H * P + Gamma).solve(P.transpose()).transpose();
}

Vector mean_update(const Vector& m, const Matrix& C, const Vector& y, const Matrix& H, const Matrix& Gamma) {
  if (m.size() != C.rows() || y.size() != H.rows()) throw_invalid("mean_update: inconsistent dimensions");
  return gain_mean_update(kalman_gain(C, H, Gamma), m, y, H);
}

Matrix cov_update(const Matrix& C, const Matrix& H, const Matrix& Gamma) {
  return gain_cov_update(kalman_gain(C, H, Gamma), C, H);
}

Vector gain_mean_update(const Matrix& K, const Vector& m, const Vector& y, const Matrix& H) {
  const Vector innovation = y - H * m;
  return m + K * innovation;
}

Matrix gain_cov_update(const Matrix& K, const Matrix& C, const Matrix& H) {
  const Matrix updated = C - K * (H * C);
  return psd_project(symmetrize(updated));
}

KalmanStep kf_step(const GaussianBelief& prior, const StateSpaceModel& model, const Vector& y) {
  const Matrix& A = model.A();
  KalmanStep step;
  step.forecast.mean = A * prior.mean;
  step.forecast.cov = symmetrize(A * prior.cov * A.transpose() + model.Xi);
  if (y.size() != model.obs_dim()) throw_invalid("kf_step: observation has wrong dimension");
  const Matrix K = kalman_gain(step.forecast.cov, model.H, model.Gamma);
  step.analysis.mean = gain_mean_update(K, step.forecast.mean, y, model.H);
  step.analysis.cov = gain_cov_update(K, step.forecast.cov, model.H);
  return step;
}

KalmanTrajectory kf_run(const StateSpaceModel& model, const std::vector<Vector>& observations) {
  if (observations.empty()) throw_invalid("kf_run: no observations");
  validate_model(model, true);
  model.A();
  KalmanTrajectory traj;
  traj.forecasts.reserve(observations.size());
  traj.analyses.reserve(observations.size());
  GaussianBelief belief = model.prior;
  for (const Vector& y : observations) {
    if (y.size() != model.obs_dim()) throw_invalid("kf_run: observation has wrong dimension");
    KalmanStep step = kf_step(belief, model, y);
    belief = step.analysis;
    traj.forecasts.push_back(std::move(step.forecast));
    traj.analyses.push_back(std::move(step.analysis));
  }
  return traj;
}

}  // namespace renkf
