#include "renkf/renkf.h"

#include <exception>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "renkf/config.hpp"
#include "renkf/error.hpp"
#include "renkf/experiment.hpp"
#include "renkf/kalman.hpp"
#include "renkf/metrics.hpp"
#include "renkf/models.hpp"

struct renkf_config {
  std::vector<renkf::ExperimentConfig> series;
};

struct renkf_model {
  renkf::StateSpaceModel model;
};

struct renkf_trajectory {
  renkf::Trajectory traj;
};

struct renkf_buffer {
  std::string text;
};

namespace {

thread_local std::string last_error;

renkf_status status_of(renkf::ErrorKind kind) {
  switch (kind) {
    case renkf::ErrorKind::invalid_input: return RENKF_ERR_INVALID_INPUT;
    case renkf::ErrorKind::undefined_ratio: return RENKF_ERR_UNDEFINED_RATIO;
    case renkf::ErrorKind::divergence: return RENKF_ERR_DIVERGENCE;
    case renkf::ErrorKind::unsupported: return RENKF_ERR_UNSUPPORTED;
    case renkf::ErrorKind::config: return RENKF_ERR_CONFIG;
    case renkf::ErrorKind::io: return RENKF_ERR_IO;
  }
  return RENKF_ERR_INTERNAL;
}

template <typename Fn>
renkf_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return RENKF_OK;
  } catch (const renkf::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RENKF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RENKF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return RENKF_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) renkf::throw_invalid(std::string(what) + " is NULL");
}

renkf::Matrix read_matrix(const double* data, size_t rows, size_t cols, const char* what) {
  require(data, what);
  renkf::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * cols + c];
  }
  return m;
}

renkf::Vector read_vector(const double* data, size_t n, const char* what) {
  require(data, what);
  return Eigen::Map<const renkf::Vector>(data, static_cast<Eigen::Index>(n));
}

void write_matrix(const renkf::Matrix& m, double* out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r * m.cols() + c] = m(r, c);
  }
}

renkf_buffer* make_buffer(std::string text) { return new renkf_buffer{std::move(text)}; }

const renkf::ExperimentConfig& single_series(const renkf_config* config) {
  require(config, "config");
  if (config->series.size() != 1) {
    throw renkf::Error(renkf::ErrorKind::config, "this command needs a configuration with exactly one series");
  }
  return config->series.front();
}

}  // namespace

extern "C" {

const char* renkf_version(void) { return "0.1.0"; }

const char* renkf_status_name(renkf_status status) {
  switch (status) {
    case RENKF_OK: return "ok";
    case RENKF_ERR_INVALID_INPUT: return "invalid input";
    case RENKF_ERR_UNDEFINED_RATIO: return "undefined ratio";
    case RENKF_ERR_DIVERGENCE: return "divergence";
    case RENKF_ERR_UNSUPPORTED: return "unsupported";
    case RENKF_ERR_CONFIG: return "config error";
    case RENKF_ERR_IO: return "I/O error";
    case RENKF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* renkf_last_error(void) { return last_error.c_str(); }

const char* renkf_buffer_data(const renkf_buffer* buffer) { return buffer ? buffer->text.c_str() : ""; }
size_t renkf_buffer_size(const renkf_buffer* buffer) { return buffer ? buffer->text.size() : 0; }
void renkf_buffer_free(renkf_buffer* buffer) { delete buffer; }

renkf_status renkf_config_parse(const char* text, renkf_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new renkf_config{renkf::parse_config(text)};
  });
}

renkf_status renkf_config_load(const char* path, renkf_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new renkf_config{renkf::load_config(path)};
  });
}

renkf_status renkf_config_preset(const char* name, renkf_config** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new renkf_config{renkf::preset(name)};
  });
}

void renkf_config_free(renkf_config* config) { delete config; }

renkf_status renkf_config_series_count(const renkf_config* config, size_t* out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = config->series.size();
  });
}

renkf_status renkf_config_set_seed(renkf_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    for (auto& s : config->series) s.seed = seed;
  });
}

renkf_status renkf_config_format(const renkf_config* config, renkf_buffer** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_buffer(renkf::format_config(config->series));
  });
}

renkf_status renkf_simulate(const renkf_config* config, renkf_buffer** out) {
  return guarded([&] {
    require(out, "out");
    *out = make_buffer(renkf::format_trajectory(renkf::simulate(single_series(config))));
  });
}

renkf_status renkf_filter(const renkf_config* config, const char* truth_csv, renkf_buffer** out) {
  return guarded([&] {
    require(out, "out");
    const auto& cfg = single_series(config);
    const renkf::Trajectory truth = truth_csv ? renkf::parse_trajectory(truth_csv) : renkf::simulate(cfg);
    *out = make_buffer(renkf::filter_report(cfg, truth));
  });
}

renkf_status renkf_experiment(const renkf_config* config, unsigned threads, renkf_buffer** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_buffer(renkf::format_results(renkf::run_experiment(config->series, threads)));
  });
}

renkf_status renkf_audit_rates(const renkf_config* config, unsigned threads, renkf_buffer** out, int* passed) {
  return guarded([&] {
    require(out, "out");
    require(passed, "passed");
    const auto report = renkf::run_rate_audit(single_series(config), threads);
    *out = make_buffer(renkf::format_audit(report));
    *passed = report.passed ? 1 : 0;
  });
}

renkf_status renkf_model_create_linear(size_t d, size_t k, const double* A, const double* H, const double* Xi,
                                       const double* Gamma, const double* prior_mean, const double* prior_cov,
                                       renkf_model** out) {
  return guarded([&] {
    require(out, "out");
    auto model = renkf::make_linear_model(read_matrix(A, d, d, "A"), read_matrix(H, k, d, "H"),
                                          read_matrix(Xi, d, d, "Xi"), read_matrix(Gamma, k, k, "Gamma"),
                                          {read_vector(prior_mean, d, "prior_mean"),
                                           read_matrix(prior_cov, d, d, "prior_cov")});
    *out = new renkf_model{std::move(model)};
  });
}

renkf_status renkf_model_create_lorenz96(size_t d, double forcing, double dt_obs, int substeps, size_t k,
                                         const double* H, const double* Xi, const double* Gamma,
                                         const double* prior_mean, const double* prior_cov, renkf_model** out) {
  return guarded([&] {
    require(out, "out");
    auto model = renkf::make_lorenz96_model({forcing, dt_obs, substeps}, read_matrix(H, k, d, "H"),
                                            read_matrix(Xi, d, d, "Xi"), read_matrix(Gamma, k, k, "Gamma"),
                                            {read_vector(prior_mean, d, "prior_mean"),
                                             read_matrix(prior_cov, d, d, "prior_cov")});
    *out = new renkf_model{std::move(model)};
  });
}

void renkf_model_free(renkf_model* model) { delete model; }

renkf_status renkf_model_dims(const renkf_model* model, size_t* d, size_t* k) {
  return guarded([&] {
    require(model, "model");
    if (d) *d = static_cast<size_t>(model->model.state_dim());
    if (k) *k = static_cast<size_t>(model->model.obs_dim());
  });
}

renkf_status renkf_model_simulate(const renkf_model* model, size_t horizon, uint64_t seed, renkf_trajectory** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = new renkf_trajectory{renkf::simulate_truth(model->model, horizon, renkf::RngStream(seed))};
  });
}

void renkf_trajectory_free(renkf_trajectory* traj) { delete traj; }

renkf_status renkf_trajectory_horizon(const renkf_trajectory* traj, size_t* out) {
  return guarded([&] {
    require(traj, "trajectory");
    require(out, "out");
    *out = traj->traj.horizon();
  });
}

renkf_status renkf_trajectory_state(const renkf_trajectory* traj, size_t j, double* out) {
  return guarded([&] {
    require(traj, "trajectory");
    require(out, "out");
    if (j >= traj->traj.states.size()) renkf::throw_invalid("state index out of range");
    const auto& u = traj->traj.states[j];
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = u(i);
  });
}

renkf_status renkf_trajectory_observation(const renkf_trajectory* traj, size_t j, double* out) {
  return guarded([&] {
    require(traj, "trajectory");
    require(out, "out");
    if (j < 1 || j > traj->traj.horizon()) renkf::throw_invalid("observation index out of range");
    const auto& y = traj->traj.observations[j - 1];
    for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = y(i);
  });
}

renkf_status renkf_run(const renkf_model* model, const double* observations, size_t horizon, const char* algorithm,
                       size_t ensemble_size, uint64_t seed, double* means_out, double* covs_out) {
  return guarded([&] {
    require(model, "model");
    require(observations, "observations");
    require(algorithm, "algorithm");
    require(means_out, "means_out");
    const auto& m = model->model;
    const size_t d = static_cast<size_t>(m.state_dim());
    const size_t k = static_cast<size_t>(m.obs_dim());
    std::vector<renkf::Vector> obs;
    for (size_t j = 0; j < horizon; ++j) obs.push_back(read_vector(observations + j * k, k, "observations"));

    std::vector<renkf::Vector> means;
    std::vector<renkf::Matrix> covs;
    const renkf::Algorithm alg = renkf::parse_algorithm(algorithm);
    if (alg == renkf::Algorithm::kf) {
      for (auto& a : renkf::kf_run(m, obs).analyses) {
        means.push_back(std::move(a.mean));
        covs.push_back(std::move(a.cov));
      }
    } else {
      const auto cfg = renkf::filter_config_for(alg, static_cast<Eigen::Index>(ensemble_size), seed);
      for (auto& r : renkf::run_filter(m, obs, cfg)) {
        means.push_back(std::move(r.analysis_mean));
        covs.push_back(std::move(r.analysis_cov));
      }
    }
    for (size_t j = 0; j < horizon; ++j) {
      for (size_t i = 0; i < d; ++i) means_out[j * d + i] = means[j](static_cast<Eigen::Index>(i));
      if (covs_out) write_matrix(covs[j], covs_out + j * d * d);
    }
  });
}

renkf_status renkf_effective_dimension(const double* q, size_t d, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = renkf::effective_dimension(read_matrix(q, d, d, "q"));
  });
}

renkf_status renkf_operator_norm(const double* q, size_t d, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = renkf::operator_norm(read_matrix(q, d, d, "q"));
  });
}

renkf_status renkf_kalman_gain(const double* C, const double* H, const double* Gamma, size_t d, size_t k,
                               double* K_out) {
  return guarded([&] {
    require(K_out, "K_out");
    write_matrix(renkf::kalman_gain(read_matrix(C, d, d, "C"), read_matrix(H, k, d, "H"),
                                    read_matrix(Gamma, k, k, "Gamma")),
                 K_out);
  });
}

}  // extern "C"
