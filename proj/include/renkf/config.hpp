#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "renkf/metrics.hpp"
#include "renkf/models.hpp"

namespace renkf {

enum class ModelKind { linear, lorenz96 };
enum class ObservationMode { full, partial };
enum class SweepAxis { none, alpha, N, d, beta };

std::string_view to_string(ModelKind k);
std::string_view to_string(ObservationMode m);
std::string_view to_string(SweepAxis a);

/// One experiment series: a base configuration plus an optional sweep.
struct ExperimentConfig {
  std::string label = "run";
  ModelKind model = ModelKind::linear;
  Eigen::Index d = 20;
  std::size_t J = 200;
  CovarianceCase covariance_case = CovarianceCase::A;
  double alpha = 1e-4;
  double beta = 1.0;
  // When set, Sigma0 = prior_variance * I instead of the case default 1.1 Xi.
  std::optional<double> prior_variance;
  ObservationMode observation = ObservationMode::full;
  std::vector<Algorithm> algorithms = {Algorithm::enkf, Algorithm::renkf};
  Eigen::Index N = 10;
  std::size_t M = 100;
  std::uint64_t seed = 0;
  SweepAxis sweep = SweepAxis::none;
  std::vector<double> grid;

  // Lorenz 96.
  double forcing = 8.0;
  double dt_obs = 0.01;
  int substeps = 1;

  // Rate audit.
  std::size_t audit_step = 5;
  std::vector<double> audit_N = {100, 400, 1600, 6400};
  std::vector<double> audit_beta = {2.0, 1.0, 0.5, 0.1};
  std::vector<Algorithm> audit_algorithms = {Algorithm::renkf};
  double audit_slope_min = -0.65;
  double audit_slope_max = -0.35;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws Error(config) naming the offending field.
void validate(const ExperimentConfig& config);

/// Number of grid points (1 when there is no sweep).
std::size_t point_count(const ExperimentConfig& config);

/// The configuration at grid point `index`, with the sweep applied and removed.
ExperimentConfig point_config(const ExperimentConfig& config, std::size_t index);

/// Model for a configuration without a sweep.
StateSpaceModel build_model(const ExperimentConfig& point);

/// Parses the key = value config format. Lines before the first [label]
/// header are defaults shared by every series; each [label] section starts
/// a series. Unknown keys, duplicate keys and malformed values are errors
/// reported with their line number.
std::vector<ExperimentConfig> parse_config(std::string_view text);

std::vector<ExperimentConfig> load_config(const std::string& path);

/// Writes every series as a fully specified section; parse_config inverts it.
std::string format_config(const std::vector<ExperimentConfig>& series);

/// Named presets: table2, table5, fig2, fig3, fig4, audit.
std::vector<ExperimentConfig> preset(std::string_view name);

std::vector<std::string> preset_names();

}  // namespace renkf
