#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "renkf/renkf.h"

namespace {

std::string take(renkf_buffer* b) {
  std::string s(renkf_buffer_data(b), renkf_buffer_size(b));
  renkf_buffer_free(b);
  return s;
}

}  // namespace

TEST_CASE("c api: status names and errors") {
  CHECK(std::string(renkf_version()).size() > 0);
  CHECK(std::string(renkf_status_name(RENKF_OK)) == "ok");
  renkf_config* cfg = nullptr;
  CHECK(renkf_config_parse("bogus = 1\n", &cfg) == RENKF_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(renkf_last_error()).find("bogus") != std::string::npos);
  CHECK(renkf_config_parse(nullptr, &cfg) == RENKF_ERR_INVALID_INPUT);
  CHECK(renkf_config_preset("nope", &cfg) == RENKF_ERR_CONFIG);
  CHECK(renkf_config_load("/nonexistent/file.cfg", &cfg) == RENKF_ERR_IO);
}

TEST_CASE("c api: config, simulate and experiment") {
  renkf_config* cfg = nullptr;
  REQUIRE(renkf_config_parse("d = 3\nJ = 6\nM = 3\nalgorithms = kf, renkf\n", &cfg) == RENKF_OK);
  size_t n = 0;
  CHECK(renkf_config_series_count(cfg, &n) == RENKF_OK);
  CHECK(n == 1);
  CHECK(renkf_config_set_seed(cfg, 99) == RENKF_OK);

  renkf_buffer* buf = nullptr;
  REQUIRE(renkf_config_format(cfg, &buf) == RENKF_OK);
  const std::string text = take(buf);
  CHECK(text.find("seed = 99") != std::string::npos);

  REQUIRE(renkf_simulate(cfg, &buf) == RENKF_OK);
  const std::string traj = take(buf);
  CHECK(traj.rfind("j,u_1,u_2,u_3,y_1,y_2,y_3\n", 0) == 0);

  REQUIRE(renkf_filter(cfg, traj.c_str(), &buf) == RENKF_OK);
  const std::string with_truth = take(buf);
  REQUIRE(renkf_filter(cfg, nullptr, &buf) == RENKF_OK);
  CHECK(take(buf) == with_truth);

  REQUIRE(renkf_experiment(cfg, 2, &buf) == RENKF_OK);
  const std::string a = take(buf);
  REQUIRE(renkf_experiment(cfg, 1, &buf) == RENKF_OK);
  CHECK(take(buf) == a);
  CHECK(a.rfind("series,point,model,", 0) == 0);

  int passed = -1;
  CHECK(renkf_audit_rates(cfg, 1, &buf, nullptr) == RENKF_ERR_INVALID_INPUT);
  renkf_config_free(cfg);

  REQUIRE(renkf_config_parse("model = lorenz96\nd = 6\nalgorithms = renkf\n", &cfg) == RENKF_OK);
  CHECK(renkf_audit_rates(cfg, 1, &buf, &passed) == RENKF_ERR_UNSUPPORTED);
  renkf_config_free(cfg);
}

TEST_CASE("c api: model, trajectory and filter run") {
  const double eye[4] = {1, 0, 0, 1};
  const double xi[4] = {0.01, 0, 0, 0.01};
  const double mean[2] = {0, 0};
  renkf_model* model = nullptr;
  REQUIRE(renkf_model_create_linear(2, 2, eye, eye, xi, xi, mean, eye, &model) == RENKF_OK);
  size_t d = 0, k = 0;
  CHECK(renkf_model_dims(model, &d, &k) == RENKF_OK);
  CHECK(d == 2);
  CHECK(k == 2);

  renkf_trajectory* traj = nullptr;
  REQUIRE(renkf_model_simulate(model, 5, 7, &traj) == RENKF_OK);
  size_t horizon = 0;
  CHECK(renkf_trajectory_horizon(traj, &horizon) == RENKF_OK);
  CHECK(horizon == 5);
  std::vector<double> obs(horizon * k);
  for (size_t j = 1; j <= horizon; ++j) REQUIRE(renkf_trajectory_observation(traj, j, &obs[(j - 1) * k]) == RENKF_OK);
  double state[2];
  CHECK(renkf_trajectory_observation(traj, 0, state) == RENKF_ERR_INVALID_INPUT);
  CHECK(renkf_trajectory_state(traj, 0, state) == RENKF_OK);

  std::vector<double> kf(horizon * d), covs(horizon * d * d), en(horizon * d);
  CHECK(renkf_run(model, obs.data(), horizon, "kf", 0, 0, kf.data(), covs.data()) == RENKF_OK);
  CHECK(covs[0] > 0.0);
  CHECK(renkf_run(model, obs.data(), horizon, "renkf", 200, 3, en.data(), nullptr) == RENKF_OK);
  for (size_t i = 0; i < kf.size(); ++i) CHECK(std::abs(en[i] - kf[i]) < 0.1);
  CHECK(renkf_run(model, obs.data(), horizon, "particle", 10, 3, en.data(), nullptr) == RENKF_ERR_INVALID_INPUT);

  renkf_trajectory_free(traj);
  renkf_model_free(model);

  const double bad_gamma[4] = {-1, 0, 0, 1};
  CHECK(renkf_model_create_linear(2, 2, eye, eye, xi, bad_gamma, mean, eye, &model) == RENKF_ERR_INVALID_INPUT);

  std::vector<double> h6(36, 0.0);
  for (int i = 0; i < 6; ++i) h6[i * 6 + i] = 1.0;
  std::vector<double> xi6(36, 0.0), m6(6, 8.0);
  for (int i = 0; i < 6; ++i) xi6[i * 6 + i] = 1e-4;
  REQUIRE(renkf_model_create_lorenz96(6, 8.0, 0.01, 1, 6, h6.data(), xi6.data(), xi6.data(), m6.data(), xi6.data(),
                                      &model) == RENKF_OK);
  std::vector<double> y6(6, 8.0), out6(6);
  CHECK(renkf_run(model, y6.data(), 1, "kf", 0, 0, out6.data(), nullptr) == RENKF_ERR_UNSUPPORTED);
  CHECK(renkf_run(model, y6.data(), 1, "enkf", 10, 0, out6.data(), nullptr) == RENKF_OK);
  renkf_model_free(model);
}

TEST_CASE("c api: matrix utilities") {
  const double q[4] = {1, 0, 0, 0.5};
  double r = 0.0;
  CHECK(renkf_effective_dimension(q, 2, &r) == RENKF_OK);
  CHECK(r == doctest::Approx(1.5));
  const double zero[4] = {0, 0, 0, 0};
  CHECK(renkf_effective_dimension(zero, 2, &r) == RENKF_ERR_UNDEFINED_RATIO);
  const double s[4] = {2, 1, 1, 2};
  CHECK(renkf_operator_norm(s, 2, &r) == RENKF_OK);
  CHECK(r == doctest::Approx(3.0));
  const double c = 3, h = 1, g = 1;
  double kgain = 0;
  CHECK(renkf_kalman_gain(&c, &h, &g, 1, 1, &kgain) == RENKF_OK);
  CHECK(kgain == 0.75);
}
