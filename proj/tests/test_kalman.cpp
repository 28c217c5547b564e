#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "doctest.h"
#include "renkf/error.hpp"
#include "renkf/kalman.hpp"
#include "renkf/models.hpp"
#include "test_util.hpp"

using namespace renkf;
using renkf::testing::max_abs;
using renkf::testing::random_matrix;
using renkf::testing::random_psd;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
Vector scalar_vec(double v) { return Vector::Constant(1, v); }

struct ScalarKf {
  std::vector<double> mean, var;
};

// Plain scalar recursion, no Eigen.
ScalarKf scalar_oracle(double a, double h, double xi, double gamma, double m0, double s0,
                       const std::vector<double>& ys) {
  ScalarKf out;
  double mu = m0, sigma = s0;
  for (double y : ys) {
    const double m = a * mu;
    const double c = a * sigma * a + xi;
    const double k = c * h / (h * c * h + gamma);
    mu = m + k * (y - h * m);
    sigma = (1.0 - k * h) * c;
    out.mean.push_back(mu);
    out.var.push_back(sigma);
  }
  return out;
}

std::vector<double> random_observations(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> ys(n);
  double walk = 0.0;
  for (auto& y : ys) {
    walk += 0.1 * nd(gen);
    y = walk + 0.2 * nd(gen);
  }
  return ys;
}

}  // namespace

TEST_CASE("kalman_gain") {
  CHECK(kalman_gain(Matrix::Zero(3, 3), Matrix::Identity(2, 3), Matrix::Identity(2, 2)).isZero(0.0));
  CHECK(kalman_gain(scalar(1), scalar(1), scalar(1))(0, 0) == 0.5);
  CHECK(kalman_gain(scalar(3), scalar(1), scalar(1))(0, 0) == 0.75);
  CHECK_THROWS_AS(kalman_gain(scalar(1), scalar(1), scalar(-2)), Error);
}

TEST_CASE("mean_update") {
  Vector m(2);
  m << 1, 2;
  const Matrix h = Matrix::Identity(2, 2);
  CHECK(mean_update(m, random_psd(2, 1), h * m, h, Matrix::Identity(2, 2)) == m);
  CHECK(mean_update(scalar_vec(0), scalar(1), scalar_vec(2), scalar(1), scalar(1))(0) == 1.0);
  CHECK(mean_update(m, Matrix::Zero(2, 2), Vector::Constant(2, 50.0), h, Matrix::Identity(2, 2)) == m);
}

TEST_CASE("cov_update") {
  CHECK(cov_update(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)).isZero(0.0));
  CHECK(cov_update(scalar(1), scalar(1), scalar(1))(0, 0) == 0.5);
  const Matrix c = random_psd(4, 3, 0.2);
  const Matrix h = random_matrix(3, 4, 8);
  const Matrix updated = cov_update(c, h, 1e12 * Matrix::Identity(3, 3));
  CHECK(operator_norm(symmetrize(updated - c)) <= 1e-10 * operator_norm(c));
}

TEST_CASE("kf_step scalar examples") {
  auto model = make_linear_model(scalar(1), scalar(1), scalar(0), scalar(1), {scalar_vec(0), scalar(1)});
  const KalmanStep s = kf_step(model.prior, model, scalar_vec(2));
  CHECK(s.forecast.mean(0) == 0.0);
  CHECK(s.forecast.cov(0, 0) == 1.0);
  CHECK(s.analysis.mean(0) == 1.0);
  CHECK(s.analysis.cov(0, 0) == 0.5);
  const KalmanStep t = kf_step(s.analysis, model, scalar_vec(2));
  CHECK(t.analysis.mean(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(t.analysis.cov(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("kf_run zero innovation keeps the mean and shrinks the covariance") {
  const Eigen::Index d = 4;
  Vector mu0 = Vector::LinSpaced(d, -1, 1);
  const Matrix h = random_matrix(2, d, 4);
  auto model = make_linear_model(Matrix::Identity(d, d), h, Matrix::Zero(d, d), Matrix::Identity(2, 2),
                                 {mu0, random_psd(d, 5, 0.1)});
  const std::vector<Vector> ys(8, h * mu0);
  const KalmanTrajectory kt = kf_run(model, ys);
  Matrix prev = model.prior.cov;
  for (const auto& a : kt.analyses) {
    CHECK((a.mean - mu0).norm() <= 1e-14);
    CHECK(is_psd(symmetrize(prev - a.cov), 1e-9));
    prev = a.cov;
  }
}

TEST_CASE("kf_run with one observation equals kf_step") {
  const auto cov = build_case_covariances({CovarianceCase::A, 0.5, 1.0, 3});
  auto model = make_linear_model(random_matrix(3, 3, 2, 0.5), Matrix::Identity(3, 3), cov.Xi, cov.Gamma,
                                 {Vector::Ones(3), cov.Sigma0});
  const Vector y = Vector::LinSpaced(3, 0, 2);
  const KalmanStep s = kf_step(model.prior, model, y);
  const KalmanTrajectory t = kf_run(model, {y});
  REQUIRE(t.analyses.size() == 1);
  CHECK(t.analyses[0].mean == s.analysis.mean);
  CHECK(t.analyses[0].cov == s.analysis.cov);
  CHECK(t.forecasts[0].cov == s.forecast.cov);
}

TEST_CASE("kf_run matches an independent scalar recursion") {
  const auto ys = random_observations(200, 1);
  const double a = 0.97, h = 1.3, xi = 0.01, gamma = 0.04, m0 = 0.3, s0 = 2.0;
  auto model = make_linear_model(scalar(a), scalar(h), scalar(xi), scalar(gamma), {scalar_vec(m0), scalar(s0)});
  std::vector<Vector> obs;
  for (double y : ys) obs.push_back(scalar_vec(y));
  const KalmanTrajectory kt = kf_run(model, obs);
  const ScalarKf ref = scalar_oracle(a, h, xi, gamma, m0, s0, ys);
  double worst = 0.0;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    worst = std::max(worst, std::abs(kt.analyses[j].mean(0) - ref.mean[j]));
    worst = std::max(worst, std::abs(kt.analyses[j].cov(0, 0) - ref.var[j]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("kf_run decouples for diagonal models") {
  const int d = 5;
  const std::size_t horizon = 200;
  std::vector<double> a(d), h(d), xi(d), gamma(d), m0(d), s0(d);
  for (int i = 0; i < d; ++i) {
    a[i] = 0.9 + 0.02 * i;
    h[i] = 1.0 + 0.1 * i;
    xi[i] = 0.01 * (i + 1);
    gamma[i] = 0.05 / (i + 1);
    m0[i] = 0.1 * i;
    s0[i] = 1.0 + i;
  }
  std::vector<std::vector<double>> ys(d);
  for (int i = 0; i < d; ++i) ys[i] = random_observations(horizon, 10 + i);
  auto diag = [&](const std::vector<double>& v) {
    return Matrix(Eigen::Map<const Vector>(v.data(), d).asDiagonal());
  };
  auto model = make_linear_model(diag(a), diag(h), diag(xi), diag(gamma),
                                 {Eigen::Map<const Vector>(m0.data(), d), diag(s0)});
  std::vector<Vector> obs(horizon, Vector(d));
  for (std::size_t j = 0; j < horizon; ++j) {
    for (int i = 0; i < d; ++i) obs[j](i) = ys[i][j];
  }
  const KalmanTrajectory kt = kf_run(model, obs);
  double worst = 0.0;
  for (int i = 0; i < d; ++i) {
    const ScalarKf ref = scalar_oracle(a[i], h[i], xi[i], gamma[i], m0[i], s0[i], ys[i]);
    for (std::size_t j = 0; j < horizon; ++j) {
      worst = std::max(worst, std::abs(kt.analyses[j].mean(i) - ref.mean[j]));
      worst = std::max(worst, std::abs(kt.analyses[j].cov(i, i) - ref.var[j]));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("gain norm bound on random instances") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Eigen::Index d = 2 + s % 7, k = 1 + s % 5;
    const Matrix c = random_psd(d, s, 0.0, 1 + s % d);
    const Matrix h = random_matrix(k, d, 1000 + s);
    const Matrix gamma = random_psd(k, 2000 + s, 0.05);
    const double h_norm = h.jacobiSvd().singularValues()(0);
    const double gamma_inv = 1.0 / gamma.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
    const double k_norm = kalman_gain(c, h, gamma).jacobiSvd().singularValues()(0);
    CHECK(k_norm <= operator_norm(c) * h_norm * gamma_inv * (1 + 1e-12));
  }
}

TEST_CASE("covariance update lies between zero and its input") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Eigen::Index d = 2 + s % 6, k = 1 + s % 4;
    const Matrix c = random_psd(d, 300 + s, s % 2 ? 0.0 : 0.1);
    const Matrix h = random_matrix(k, d, 400 + s);
    const Matrix gamma = random_psd(k, 500 + s, 0.1);
    const Matrix cu = cov_update(c, h, gamma);
    const double scale = 1e-10 * (1.0 + max_abs(c));
    CHECK(max_abs(psd_project(cu) - cu) <= scale);
    const Matrix gap = symmetrize(c - cu);
    CHECK(max_abs(psd_project(gap) - gap) <= scale);
  }
}

TEST_CASE("analysis trace never exceeds forecast trace") {
  const Eigen::Index d = 6;
  auto model = make_linear_model(random_matrix(d, d, 1, 0.4), random_matrix(3, d, 2), random_psd(d, 3, 0.01),
                                 random_psd(3, 4, 0.1), {Vector::Zero(d), random_psd(d, 5, 0.1)});
  std::vector<Vector> obs;
  for (int j = 0; j < 50; ++j) obs.push_back(random_matrix(3, 1, 100 + j));
  const KalmanTrajectory kt = kf_run(model, obs);
  for (std::size_t j = 0; j < obs.size(); ++j) {
    CHECK(kt.analyses[j].cov.trace() <= kt.forecasts[j].cov.trace() + 1e-14);
  }
}

TEST_CASE("kf_run is permutation equivariant") {
  const Eigen::Index d = 5, k = 5;
  const Matrix a = random_matrix(d, d, 21, 0.4), h = random_matrix(k, d, 22);
  const Matrix xi = random_psd(d, 23, 0.01), gamma = random_psd(k, 24, 0.1), s0 = random_psd(d, 25, 0.1);
  const Vector m0 = random_matrix(d, 1, 26);
  std::vector<Vector> obs;
  for (int j = 0; j < 30; ++j) obs.push_back(random_matrix(k, 1, 200 + j));

  Eigen::VectorXi idx(d);
  idx << 3, 0, 4, 1, 2;
  Eigen::PermutationMatrix<Eigen::Dynamic> p(idx);
  const Matrix pm = p;
  auto base = make_linear_model(a, h, xi, gamma, {m0, s0});
  auto perm = make_linear_model(pm * a * pm.transpose(), pm * h * pm.transpose(), pm * xi * pm.transpose(),
                                pm * gamma * pm.transpose(), {pm * m0, pm * s0 * pm.transpose()});
  std::vector<Vector> pobs;
  for (const auto& y : obs) pobs.push_back(pm * y);
  const KalmanTrajectory x = kf_run(base, obs), y = kf_run(perm, pobs);
  for (std::size_t j = 0; j < obs.size(); ++j) {
    CHECK(max_abs(pm * x.analyses[j].mean - y.analyses[j].mean) <= 1e-12);
    CHECK(max_abs(pm * x.analyses[j].cov * pm.transpose() - y.analyses[j].cov) <= 1e-12);
  }
}
