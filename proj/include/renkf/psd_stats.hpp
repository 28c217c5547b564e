#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "renkf/rng.hpp"

namespace renkf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// N particles in R^d, stored column-wise (d x N).
class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(Matrix particles);

  const Matrix& particles() const noexcept { return particles_; }
  Matrix& particles() noexcept { return particles_; }

  Eigen::Index size() const noexcept { return particles_.cols(); }
  Eigen::Index dim() const noexcept { return particles_.rows(); }

  auto particle(Eigen::Index n) const { return particles_.col(n); }

 private:
  Matrix particles_;
};

struct GaussianBelief {
  Vector mean;
  Matrix cov;
};

// Symmetry tolerance, relative to the largest absolute entry.
inline constexpr double kSymmetryTolerance = 1e-12;
// Eigenvalues above -kPsdTolerance * lambda_max count as nonnegative.
inline constexpr double kPsdTolerance = 1e-10;

bool is_symmetric(const Matrix& q, double rel_tol = kSymmetryTolerance);

// True when every eigenvalue is >= -rel_tol * (largest eigenvalue).
bool is_psd(const Matrix& q, double rel_tol = kPsdTolerance);

/// Throws invalid_input unless q is square, finite, symmetric and PSD up to
/// numerical noise. `what` names the matrix in the error message.
void check_covariance(const Matrix& q, const char* what);

void check_belief(const GaussianBelief& b);

Matrix symmetrize(const Matrix& q);

/// Largest eigenvalue of a symmetric matrix (the operator norm for PSD input).
double operator_norm(const Matrix& q);

/// Tr(Q) / |Q|, the effective dimension r2(Q).
double effective_dimension(const Matrix& q);

/// Clip negative eigenvalues of a symmetric matrix to zero. A matrix with no
/// negative eigenvalues is returned unchanged.
Matrix psd_project(const Matrix& q);

Vector sample_mean(const Ensemble& e);

/// Empirical covariance with divisor N-1.
Matrix sample_cov(const Ensemble& e);

/// Empirical cross-covariance (1/(N-1)) sum (u_n - u_bar)(v_n - v_bar)^T.
Matrix cross_cov(const Ensemble& e1, const Ensemble& e2);

/// Symmetric square root V diag(sqrt(max(lambda, 0))) V^T.
Matrix psd_sqrt(const Matrix& q);

/// psd_sqrt(f f^T), computed from a thin SVD of f. Cheap when f has few
/// columns, as for an ensemble's scaled anomalies.
Matrix psd_sqrt_factor(const Matrix& f);

/// N i.i.d. draws from N(b.mean, b.cov).
///
/// Consumes exactly N*d standard normals from `rng`, particle by particle,
/// coordinate by coordinate, and maps them through psd_sqrt(b.cov).
Ensemble sample_gaussian(const GaussianBelief& b, Eigen::Index n, RngStream& rng);

/// As sample_gaussian with cov = factor * factor^T. Consumes the same normals
/// and applies the same symmetric square root.
Ensemble sample_gaussian_factored(const Vector& mean, const Matrix& factor, Eigen::Index n, RngStream& rng);

}  // namespace renkf
