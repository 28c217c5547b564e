#include "renkf/psd_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "renkf/error.hpp"

namespace renkf {

namespace {

bool is_diagonal(const Matrix& q) {
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      if (r != c && q(r, c) != 0.0) return false;
    }
  }
  return true;
}

void require_square_finite(const Matrix& q, const char* what) {
  if (q.rows() != q.cols()) {
    throw_invalid(std::string(what) + ": matrix is not square");
  }
  if (!q.allFinite()) {
    throw_invalid(std::string(what) + ": matrix has non-finite entries");
  }
}

}  // namespace

Ensemble::Ensemble(Matrix particles) : particles_(std::move(particles)) {}

bool is_symmetric(const Matrix& q, double rel_tol) {
  if (q.rows() != q.cols()) return false;
  const double scale = q.cwiseAbs().maxCoeff();
  if (q.size() == 0 || scale == 0.0) return true;
  return (q - q.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_psd(const Matrix& q, double rel_tol) {
  if (q.size() == 0) return true;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(q), Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -rel_tol * scale;
}

void check_covariance(const Matrix& q, const char* what) {
  require_square_finite(q, what);
  if (!is_symmetric(q)) throw_invalid(std::string(what) + ": matrix is not symmetric");
  if (!is_psd(q)) throw_invalid(std::string(what) + ": matrix is not positive semidefinite");
}

void check_belief(const GaussianBelief& b) {
  if (b.mean.size() != b.cov.rows()) throw_invalid("belief: mean and covariance dimensions differ");
  if (!b.mean.allFinite()) throw_invalid("belief: mean has non-finite entries");
  check_covariance(b.cov, "belief covariance");
}

Matrix symmetrize(const Matrix& q) { return 0.5 * (q + q.transpose()); }

double operator_norm(const Matrix& q) {
  require_square_finite(q, "operator_norm");
  if (q.size() == 0) return 0.0;
  if (is_diagonal(q)) return q.diagonal().cwiseAbs().maxCoeff();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(q), Eigen::EigenvaluesOnly);
  // Spectral radius; equals the largest eigenvalue when q is PSD.
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double effective_dimension(const Matrix& q) {
  const double norm = operator_norm(q);
  if (norm == 0.0) {
    throw Error(ErrorKind::undefined_ratio, "effective_dimension: zero matrix");
  }
  return q.trace() / norm;
}

Matrix psd_project(const Matrix& q) {
  if (q.size() == 0) return q;
  // A successful Cholesky factorization means q is positive definite.
  if (Eigen::LLT<Matrix>(q).info() == Eigen::Success) return q;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(q));
  const Vector& ev = eig.eigenvalues();
  if (ev.minCoeff() >= 0.0) return q;
  const Matrix& v = eig.eigenvectors();
  return symmetrize(v * ev.cwiseMax(0.0).asDiagonal() * v.transpose());
}

Vector sample_mean(const Ensemble& e) {
  if (e.size() < 1) throw_invalid("sample_mean: empty ensemble");
  // Shift by the first particle so identical particles give their exact value.
  const Vector pivot = e.particle(0);
  return pivot + (e.particles().colwise() - pivot).rowwise().mean();
}

Matrix sample_cov(const Ensemble& e) {
  if (e.size() < 2) throw_invalid("sample_cov: need at least 2 particles");
  const Matrix centered = e.particles().colwise() - sample_mean(e);
  return symmetrize(centered * centered.transpose() / static_cast<double>(e.size() - 1));
}

Matrix cross_cov(const Ensemble& e1, const Ensemble& e2) {
  if (e1.size() != e2.size()) throw_invalid("cross_cov: ensembles have different sizes");
  if (e1.size() < 2) throw_invalid("cross_cov: need at least 2 particles");
  const Matrix c1 = e1.particles().colwise() - sample_mean(e1);
  const Matrix c2 = e2.particles().colwise() - sample_mean(e2);
  return c1 * c2.transpose() / static_cast<double>(e1.size() - 1);
}

Matrix psd_sqrt(const Matrix& q) {
  if (q.size() == 0) return q;
  if (is_diagonal(q)) return Matrix(q.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(q));
  const Matrix& v = eig.eigenvectors();
  return v * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * v.transpose();
}

Matrix psd_sqrt_factor(const Matrix& f) {
  if (f.size() == 0) return Matrix::Zero(f.rows(), f.rows());
  // f = U S W^T, so f f^T = U S^2 U^T and its square root is U S U^T.
  const Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeThinU);
  const Matrix& u = svd.matrixU();
  return symmetrize(u * svd.singularValues().asDiagonal() * u.transpose());
}

Ensemble sample_gaussian(const GaussianBelief& b, Eigen::Index n, RngStream& rng) {
  if (n < 1) throw_invalid("sample_gaussian: ensemble size must be positive");
  if (b.mean.size() != b.cov.rows()) throw_invalid("sample_gaussian: mean and covariance dimensions differ");
  require_square_finite(b.cov, "sample_gaussian");
  if (!b.mean.allFinite()) throw_invalid("sample_gaussian: mean has non-finite entries");
  if (!is_symmetric(b.cov)) throw_invalid("sample_gaussian: covariance is not symmetric");
  const Matrix z = rng.standard_normal(b.mean.size(), n);
  Matrix draws = psd_sqrt(b.cov) * z;
  draws.colwise() += b.mean;
  return Ensemble(std::move(draws));
}

Ensemble sample_gaussian_factored(const Vector& mean, const Matrix& factor, Eigen::Index n, RngStream& rng) {
  if (n < 1) throw_invalid("sample_gaussian: ensemble size must be positive");
  if (mean.size() != factor.rows()) throw_invalid("sample_gaussian: mean and factor dimensions differ");
  if (!mean.allFinite() || !factor.allFinite()) throw_invalid("sample_gaussian: non-finite input");
  const Matrix z = rng.standard_normal(mean.size(), n);
  Matrix draws = psd_sqrt_factor(factor) * z;
  draws.colwise() += mean;
  return Ensemble(std::move(draws));
}

}  // namespace renkf
