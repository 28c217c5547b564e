#pragma once

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

#include "renkf/psd_stats.hpp"
#include "renkf/rng.hpp"

namespace renkf {

struct LinearDynamics {
  Matrix A;
};

struct Lorenz96Dynamics {
  double forcing = 8.0;
  double dt_obs = 0.01;
  int n_substeps = 1;
};

using Dynamics = std::variant<LinearDynamics, Lorenz96Dynamics>;

/// Hidden Markov model u_j = Psi(u_{j-1}) + xi_j, y_j = H u_j + eta_j with
/// u_0 ~ prior, xi ~ N(0, Xi), eta ~ N(0, Gamma).
struct StateSpaceModel {
  Dynamics dynamics;
  Matrix H;
  Matrix Xi;
  Matrix Gamma;
  GaussianBelief prior;

  Eigen::Index state_dim() const noexcept { return prior.mean.size(); }
  Eigen::Index obs_dim() const noexcept { return H.rows(); }
  bool is_linear() const noexcept { return std::holds_alternative<LinearDynamics>(dynamics); }

  /// Dynamics matrix; throws unsupported for nonlinear dynamics.
  const Matrix& A() const;
};

/// Dimension and covariance checks. Filters additionally need Gamma
/// strictly positive definite; simulation does not.
void validate_model(const StateSpaceModel& model, bool require_pd_gamma);

StateSpaceModel make_linear_model(Matrix A, Matrix H, Matrix Xi, Matrix Gamma, GaussianBelief prior);

StateSpaceModel make_lorenz96_model(Lorenz96Dynamics dynamics, Matrix H, Matrix Xi, Matrix Gamma,
                                    GaussianBelief prior);

/// du(i)/dt = (u(i+1) - u(i-2)) u(i-1) - u(i) + F with cyclic indexing.
Vector l96_rhs(const Vector& u, double forcing);

/// Classical RK4, n_substeps steps of size dt_obs / n_substeps. `step` is
/// only used to label a DivergenceError.
Vector rk4_flow(const Lorenz96Dynamics& dyn, const Vector& u, std::size_t step = 0);

/// Psi applied to a single state.
Vector propagate(const StateSpaceModel& model, const Vector& u, std::size_t step = 0);

/// Psi applied to every column.
Matrix propagate(const StateSpaceModel& model, const Matrix& particles, std::size_t step);

struct Trajectory {
  std::vector<Vector> states;        // u_0 .. u_J
  std::vector<Vector> observations;  // y_1 .. y_J; observations[j-1] = y_j

  std::size_t horizon() const noexcept { return observations.size(); }
};

/// Twin-experiment truth. Draws u_0 from rng.split(0), the xi sequence from
/// rng.split(1) and the eta sequence from rng.split(2).
Trajectory simulate_truth(const StateSpaceModel& model, std::size_t horizon, const RngStream& rng);

/// Identity with rows 3, 6, 9, ... (1-indexed) removed: a (2d/3) x d matrix.
Matrix build_partial_H(Eigen::Index d);

enum class CovarianceCase { A, B, C };

std::string_view to_string(CovarianceCase c);
CovarianceCase parse_covariance_case(std::string_view s);

struct CovariancePreset {
  CovarianceCase kind = CovarianceCase::A;
  double alpha = 1e-4;
  double beta = 1.0;
  Eigen::Index d = 20;
};

struct NoiseCovariances {
  Matrix Xi;
  Matrix Gamma;
  Matrix Sigma0;
};

/// Case A: Xi = Gamma = alpha I_d. Case B: diagonal alpha i^-beta for both.
/// Case C: Xi = alpha I_d, Gamma = alpha I_{2d/3}. Sigma0 = 1.1 Xi in all cases.
NoiseCovariances build_case_covariances(const CovariancePreset& preset);

}  // namespace renkf
