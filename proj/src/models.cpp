#include "renkf/models.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

#include "renkf/error.hpp"

namespace renkf {

const Matrix& StateSpaceModel::A() const {
  if (const auto* lin = std::get_if<LinearDynamics>(&dynamics)) return lin->A;
  throw Error(ErrorKind::unsupported, "model dynamics are not linear");
}

void validate_model(const StateSpaceModel& model, bool require_pd_gamma) {
  const Eigen::Index d = model.state_dim();
  if (d < 1) throw_invalid("model: state dimension must be positive");
  check_belief(model.prior);
  if (model.H.cols() != d) throw_invalid("model: H has wrong number of columns");
  if (model.H.rows() < 1) throw_invalid("model: H has no rows");
  if (!model.H.allFinite()) throw_invalid("model: H has non-finite entries");
  if (model.Xi.rows() != d) throw_invalid("model: Xi has wrong dimension");
  if (model.Gamma.rows() != model.H.rows()) throw_invalid("model: Gamma has wrong dimension");
  check_covariance(model.Xi, "Xi");
  check_covariance(model.Gamma, "Gamma");
  if (require_pd_gamma) {
    const Eigen::LLT<Matrix> llt(model.Gamma);
    if (llt.info() != Eigen::Success) throw_invalid("model: Gamma is not positive definite");
  }
  if (const auto* lin = std::get_if<LinearDynamics>(&model.dynamics)) {
    if (lin->A.rows() != d || lin->A.cols() != d) throw_invalid("model: A has wrong dimension");
    if (!lin->A.allFinite()) throw_invalid("model: A has non-finite entries");
  } else {
    const auto& l96 = std::get<Lorenz96Dynamics>(model.dynamics);
    if (d < 4) throw_invalid("model: Lorenz 96 needs d >= 4");
    if (l96.n_substeps < 1) throw_invalid("model: n_substeps must be >= 1");
    if (!(l96.dt_obs >= 0.0) || !std::isfinite(l96.dt_obs)) throw_invalid("model: dt_obs must be >= 0");
    if (!std::isfinite(l96.forcing)) throw_invalid("model: forcing must be finite");
  }
}

StateSpaceModel make_linear_model(Matrix A, Matrix H, Matrix Xi, Matrix Gamma, GaussianBelief prior) {
  StateSpaceModel m{LinearDynamics{std::move(A)}, std::move(H), std::move(Xi), std::move(Gamma),
                    std::move(prior)};
  validate_model(m, true);
  return m;
}

StateSpaceModel make_lorenz96_model(Lorenz96Dynamics dynamics, Matrix H, Matrix Xi, Matrix Gamma,
                                    GaussianBelief prior) {
  StateSpaceModel m{dynamics, std::move(H), std::move(Xi), std::move(Gamma), std::move(prior)};
  validate_model(m, true);
  return m;
}

Vector l96_rhs(const Vector& u, double forcing) {
  const Eigen::Index d = u.size();
  if (d < 4) throw_invalid("l96_rhs: need d >= 4");
  Vector du(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double next = u((i + 1) % d);
    const double prev = u((i + d - 1) % d);
    const double prev2 = u((i + d - 2) % d);
    du(i) = (next - prev2) * prev - u(i) + forcing;
  }
  return du;
}

Vector rk4_flow(const Lorenz96Dynamics& dyn, const Vector& u, std::size_t step) {
  if (dyn.n_substeps < 1) throw_invalid("rk4_flow: n_substeps must be >= 1");
  const double h = dyn.dt_obs / dyn.n_substeps;
  Vector x = u;
  for (int s = 0; s < dyn.n_substeps; ++s) {
    const Vector k1 = l96_rhs(x, dyn.forcing);
    const Vector k2 = l96_rhs(x + 0.5 * h * k1, dyn.forcing);
    const Vector k3 = l96_rhs(x + 0.5 * h * k2, dyn.forcing);
    const Vector k4 = l96_rhs(x + h * k3, dyn.forcing);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!x.allFinite()) throw DivergenceError(step, "Lorenz 96 state became non-finite");
  return x;
}

Vector propagate(const StateSpaceModel& model, const Vector& u, std::size_t step) {
  if (const auto* lin = std::get_if<LinearDynamics>(&model.dynamics)) {
    Vector x = lin->A * u;
    if (!x.allFinite()) throw DivergenceError(step, "linear state became non-finite");
    return x;
  }
  return rk4_flow(std::get<Lorenz96Dynamics>(model.dynamics), u, step);
}

Matrix propagate(const StateSpaceModel& model, const Matrix& particles, std::size_t step) {
  if (const auto* lin = std::get_if<LinearDynamics>(&model.dynamics)) {
    Matrix x = lin->A * particles;
    if (!x.allFinite()) throw DivergenceError(step, "linear state became non-finite");
    return x;
  }
  const auto& l96 = std::get<Lorenz96Dynamics>(model.dynamics);
  Matrix out(particles.rows(), particles.cols());
  for (Eigen::Index n = 0; n < particles.cols(); ++n) out.col(n) = rk4_flow(l96, particles.col(n), step);
  return out;
}

Trajectory simulate_truth(const StateSpaceModel& model, std::size_t horizon, const RngStream& rng) {
  if (horizon < 1) throw_invalid("simulate_truth: horizon must be >= 1");
  validate_model(model, false);
  RngStream init_rng = rng.split(0);
  RngStream xi_rng = rng.split(1);
  RngStream eta_rng = rng.split(2);
  const Eigen::Index d = model.state_dim();
  const Eigen::Index k = model.obs_dim();
  const Matrix xi_sqrt = psd_sqrt(model.Xi);
  const Matrix eta_sqrt = psd_sqrt(model.Gamma);

  Trajectory traj;
  traj.states.reserve(horizon + 1);
  traj.observations.reserve(horizon);
  traj.states.push_back(sample_gaussian(model.prior, 1, init_rng).particle(0));
  for (std::size_t j = 1; j <= horizon; ++j) {
    Vector u = propagate(model, traj.states.back(), j) + xi_sqrt * xi_rng.standard_normal(d, 1);
    traj.observations.push_back(model.H * u + eta_sqrt * eta_rng.standard_normal(k, 1));
    traj.states.push_back(std::move(u));
  }
  return traj;
}

Matrix build_partial_H(Eigen::Index d) {
  if (d < 3 || d % 3 != 0) throw_invalid("build_partial_H: d must be a positive multiple of 3");
  Matrix h = Matrix::Zero(2 * d / 3, d);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (i % 3 == 2) continue;
    h(row++, i) = 1.0;
  }
  return h;
}

std::string_view to_string(CovarianceCase c) {
  switch (c) {
    case CovarianceCase::A: return "A";
    case CovarianceCase::B: return "B";
    case CovarianceCase::C: return "C";
  }
  return "?";
}

CovarianceCase parse_covariance_case(std::string_view s) {
  if (s == "A") return CovarianceCase::A;
  if (s == "B") return CovarianceCase::B;
  if (s == "C") return CovarianceCase::C;
  throw_invalid("unknown covariance case '" + std::string(s) + "'");
}

NoiseCovariances build_case_covariances(const CovariancePreset& preset) {
  const Eigen::Index d = preset.d;
  if (d < 1) throw_invalid("covariance preset: d must be positive");
  if (!(preset.alpha > 0.0) || !std::isfinite(preset.alpha)) throw_invalid("covariance preset: alpha must be > 0");
  NoiseCovariances out;
  switch (preset.kind) {
    case CovarianceCase::A:
      out.Xi = preset.alpha * Matrix::Identity(d, d);
      out.Gamma = out.Xi;
      break;
    case CovarianceCase::B: {
      if (!(preset.beta > 0.0) || !std::isfinite(preset.beta)) throw_invalid("covariance preset: beta must be > 0");
      Vector diag(d);
      for (Eigen::Index i = 0; i < d; ++i) diag(i) = preset.alpha * std::pow(static_cast<double>(i + 1), -preset.beta);
      out.Xi = diag.asDiagonal();
      out.Gamma = out.Xi;
      break;
    }
    case CovarianceCase::C:
      if (d % 3 != 0) throw_invalid("covariance preset: case C needs d divisible by 3");
      out.Xi = preset.alpha * Matrix::Identity(d, d);
      out.Gamma = preset.alpha * Matrix::Identity(2 * d / 3, 2 * d / 3);
      break;
  }
  out.Sigma0 = 1.1 * out.Xi;
  return out;
}

}  // namespace renkf
