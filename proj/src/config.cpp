#include "renkf/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <utility>

#include "renkf/csv.hpp"
#include "renkf/error.hpp"

namespace renkf {

namespace {

struct Problem {
  std::string field;
  std::string message;
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::config, what); }

bool is_integral(double x) { return std::isfinite(x) && std::floor(x) == x; }

bool valid_label(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::optional<Problem> check_point(const ExperimentConfig& c) {
  auto bad = [](std::string field, std::string message) { return Problem{std::move(field), std::move(message)}; };
  if (!valid_label(c.label)) return bad("label", "must be non-empty and use only [A-Za-z0-9._-]");
  if (c.J < 1) return bad("J", "must be >= 1");
  if (c.N < 2) return bad("N", "must be >= 2");
  if (c.M < 1) return bad("M", "must be >= 1");
  if (c.d < 1) return bad("d", "must be >= 1");
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) return bad("alpha", "must be a finite value > 0");
  if (c.covariance_case == CovarianceCase::B && (!(c.beta > 0.0) || !std::isfinite(c.beta))) {
    return bad("beta", "must be a finite value > 0 for case B");
  }
  if (c.prior_variance && (!(*c.prior_variance >= 0.0) || !std::isfinite(*c.prior_variance))) {
    return bad("prior_variance", "must be a finite value >= 0");
  }
  if (c.model == ModelKind::lorenz96) {
    if (c.d < 4) return bad("d", "Lorenz 96 needs d >= 4");
    if (!std::isfinite(c.forcing)) return bad("forcing", "must be finite");
    if (!(c.dt_obs >= 0.0) || !std::isfinite(c.dt_obs)) return bad("dt_obs", "must be a finite value >= 0");
    if (c.substeps < 1) return bad("substeps", "must be >= 1");
  }
  const bool partial = c.observation == ObservationMode::partial;
  if (partial != (c.covariance_case == CovarianceCase::C)) {
    return bad("observation", "partial observation goes with covariance case C and only with it");
  }
  if (partial && c.d % 3 != 0) return bad("d", "partial observation needs d divisible by 3");
  if (c.algorithms.empty()) return bad("algorithms", "must list at least one algorithm");
  for (Algorithm a : c.algorithms) {
    if (a == Algorithm::kf && c.model != ModelKind::linear) return bad("algorithms", "kf needs a linear model");
  }
  if (c.audit_step < 1) return bad("audit_step", "must be >= 1");
  if (c.audit_N.size() < 3) return bad("audit_N", "needs at least 3 ensemble sizes");
  for (double n : c.audit_N) {
    if (!is_integral(n) || n < 2) return bad("audit_N", "ensemble sizes must be integers >= 2");
  }
  if (c.audit_beta.size() < 2) return bad("audit_beta", "needs at least 2 values");
  for (double b : c.audit_beta) {
    if (!(b > 0.0) || !std::isfinite(b)) return bad("audit_beta", "values must be > 0");
  }
  for (Algorithm a : c.audit_algorithms) {
    if (a == Algorithm::kf) return bad("audit_algorithms", "kf is the reference, not an auditable algorithm");
  }
  if (c.audit_algorithms.empty()) return bad("audit_algorithms", "must list at least one algorithm");
  if (!(c.audit_slope_min < c.audit_slope_max)) return bad("audit_slope_min", "must be below audit_slope_max");
  return std::nullopt;
}

std::optional<Problem> find_problem(const ExperimentConfig& c) {
  if (c.sweep == SweepAxis::none) {
    if (!c.grid.empty()) return Problem{"grid", "must be empty when sweep = none"};
    return check_point(c);
  }
  if (c.grid.empty()) return Problem{"grid", "must list the sweep values"};
  for (double v : c.grid) {
    if ((c.sweep == SweepAxis::N || c.sweep == SweepAxis::d) && !is_integral(v)) {
      return Problem{"grid", "values must be integers for this sweep axis"};
    }
    if (c.sweep == SweepAxis::beta && c.covariance_case != CovarianceCase::B) {
      return Problem{"sweep", "a beta sweep needs covariance case B"};
    }
  }
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    ExperimentConfig p = c;
    p.sweep = SweepAxis::none;
    p.grid.clear();
    switch (c.sweep) {
      case SweepAxis::alpha: p.alpha = c.grid[i]; break;
      case SweepAxis::N: p.N = static_cast<Eigen::Index>(c.grid[i]); break;
      case SweepAxis::d: p.d = static_cast<Eigen::Index>(c.grid[i]); break;
      case SweepAxis::beta: p.beta = c.grid[i]; break;
      case SweepAxis::none: break;
    }
    if (auto prob = check_point(p)) {
      if (prob->field == to_string(c.sweep)) prob->field = "grid";
      return prob;
    }
  }
  return check_point(c);
}

// ---- text form -------------------------------------------------------------

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += csv::format_double(v[i]);
  }
  return out;
}

std::string join_algorithms(const std::vector<Algorithm>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += to_string(v[i]);
  }
  return out;
}

std::vector<double> parse_doubles(std::string_view s) {
  std::vector<double> out;
  if (csv::trim(s).empty()) return out;
  for (auto item : csv::split(s)) out.push_back(csv::parse_double(item));
  return out;
}

std::vector<Algorithm> parse_algorithms(std::string_view s) {
  std::vector<Algorithm> out;
  for (auto item : csv::split(s)) out.push_back(parse_algorithm(csv::trim(item)));
  return out;
}

ModelKind parse_model(std::string_view s) {
  if (s == "linear") return ModelKind::linear;
  if (s == "lorenz96") return ModelKind::lorenz96;
  throw_invalid("expected linear or lorenz96");
}

ObservationMode parse_observation(std::string_view s) {
  if (s == "full") return ObservationMode::full;
  if (s == "partial") return ObservationMode::partial;
  throw_invalid("expected full or partial");
}

SweepAxis parse_sweep(std::string_view s) {
  if (s == "none") return SweepAxis::none;
  if (s == "alpha") return SweepAxis::alpha;
  if (s == "N") return SweepAxis::N;
  if (s == "d") return SweepAxis::d;
  if (s == "beta") return SweepAxis::beta;
  throw_invalid("expected none, alpha, N, d or beta");
}

template <typename T>
T checked_int(std::string_view s, long long lo) {
  const long long v = csv::parse_int(s);
  if (v < lo) throw_invalid("must be >= " + std::to_string(lo));
  return static_cast<T>(v);
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  using SV = std::string_view;
  auto num = [](double x) { return csv::format_double(x); };
  static const std::vector<Field> table = {
      {"model", [](C& c, SV v) { c.model = parse_model(v); }, [](const C& c) { return std::string(to_string(c.model)); }},
      {"d", [](C& c, SV v) { c.d = checked_int<Eigen::Index>(v, 0); }, [](const C& c) { return std::to_string(c.d); }},
      {"J", [](C& c, SV v) { c.J = checked_int<std::size_t>(v, 0); }, [](const C& c) { return std::to_string(c.J); }},
      {"case", [](C& c, SV v) { c.covariance_case = parse_covariance_case(v); },
       [](const C& c) { return std::string(to_string(c.covariance_case)); }},
      {"alpha", [](C& c, SV v) { c.alpha = csv::parse_double(v); }, [num](const C& c) { return num(c.alpha); }},
      {"beta", [](C& c, SV v) { c.beta = csv::parse_double(v); }, [num](const C& c) { return num(c.beta); }},
      {"prior_variance",
       [](C& c, SV v) {
         if (v == "none") {
           c.prior_variance.reset();
         } else {
           c.prior_variance = csv::parse_double(v);
         }
       },
       [num](const C& c) { return c.prior_variance ? num(*c.prior_variance) : std::string("none"); }},
      {"observation", [](C& c, SV v) { c.observation = parse_observation(v); },
       [](const C& c) { return std::string(to_string(c.observation)); }},
      {"algorithms", [](C& c, SV v) { c.algorithms = parse_algorithms(v); },
       [](const C& c) { return join_algorithms(c.algorithms); }},
      {"N", [](C& c, SV v) { c.N = checked_int<Eigen::Index>(v, 0); }, [](const C& c) { return std::to_string(c.N); }},
      {"M", [](C& c, SV v) { c.M = checked_int<std::size_t>(v, 0); }, [](const C& c) { return std::to_string(c.M); }},
      {"seed", [](C& c, SV v) { c.seed = csv::parse_uint(v); }, [](const C& c) { return std::to_string(c.seed); }},
      {"sweep", [](C& c, SV v) { c.sweep = parse_sweep(v); }, [](const C& c) { return std::string(to_string(c.sweep)); }},
      {"grid", [](C& c, SV v) { c.grid = parse_doubles(v); }, [](const C& c) { return join_doubles(c.grid); }},
      {"forcing", [](C& c, SV v) { c.forcing = csv::parse_double(v); }, [num](const C& c) { return num(c.forcing); }},
      {"dt_obs", [](C& c, SV v) { c.dt_obs = csv::parse_double(v); }, [num](const C& c) { return num(c.dt_obs); }},
      {"substeps", [](C& c, SV v) { c.substeps = checked_int<int>(v, 0); },
       [](const C& c) { return std::to_string(c.substeps); }},
      {"audit_step", [](C& c, SV v) { c.audit_step = checked_int<std::size_t>(v, 0); },
       [](const C& c) { return std::to_string(c.audit_step); }},
      {"audit_N", [](C& c, SV v) { c.audit_N = parse_doubles(v); }, [](const C& c) { return join_doubles(c.audit_N); }},
      {"audit_beta", [](C& c, SV v) { c.audit_beta = parse_doubles(v); },
       [](const C& c) { return join_doubles(c.audit_beta); }},
      {"audit_algorithms", [](C& c, SV v) { c.audit_algorithms = parse_algorithms(v); },
       [](const C& c) { return join_algorithms(c.audit_algorithms); }},
      {"audit_slope_min", [](C& c, SV v) { c.audit_slope_min = csv::parse_double(v); },
       [num](const C& c) { return num(c.audit_slope_min); }},
      {"audit_slope_max", [](C& c, SV v) { c.audit_slope_max = csv::parse_double(v); },
       [num](const C& c) { return num(c.audit_slope_max); }},
  };
  return table;
}

const Field* find_field(std::string_view key) {
  for (const Field& f : fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

std::vector<double> log_grid(double lo_exp, double hi_exp, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double e = lo_exp + (hi_exp - lo_exp) * i / (count - 1);
    out.push_back(std::pow(10.0, e));
  }
  return out;
}

std::vector<double> range_grid(double first, double last, double step) {
  std::vector<double> out;
  for (double v = first; v <= last; v += step) out.push_back(v);
  return out;
}

}  // namespace

std::string_view to_string(ModelKind k) { return k == ModelKind::linear ? "linear" : "lorenz96"; }
std::string_view to_string(ObservationMode m) { return m == ObservationMode::full ? "full" : "partial"; }
std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::N: return "N";
    case SweepAxis::d: return "d";
    case SweepAxis::beta: return "beta";
  }
  return "?";
}

void validate(const ExperimentConfig& config) {
  if (auto p = find_problem(config)) {
    config_error("series '" + config.label + "': field '" + p->field + "': " + p->message);
  }
}

std::size_t point_count(const ExperimentConfig& config) {
  return config.sweep == SweepAxis::none ? 1 : config.grid.size();
}

ExperimentConfig point_config(const ExperimentConfig& config, std::size_t index) {
  if (index >= point_count(config)) throw_invalid("point_config: grid index out of range");
  ExperimentConfig p = config;
  p.sweep = SweepAxis::none;
  p.grid.clear();
  if (config.sweep == SweepAxis::none) return p;
  const double v = config.grid[index];
  switch (config.sweep) {
    case SweepAxis::alpha: p.alpha = v; break;
    case SweepAxis::N: p.N = static_cast<Eigen::Index>(v); break;
    case SweepAxis::d: p.d = static_cast<Eigen::Index>(v); break;
    case SweepAxis::beta: p.beta = v; break;
    case SweepAxis::none: break;
  }
  return p;
}

StateSpaceModel build_model(const ExperimentConfig& point) {
  if (point.sweep != SweepAxis::none) throw_invalid("build_model: configuration still has a sweep");
  validate(point);
  const Eigen::Index d = point.d;
  NoiseCovariances cov = build_case_covariances({point.covariance_case, point.alpha, point.beta, d});
  if (point.prior_variance) cov.Sigma0 = *point.prior_variance * Matrix::Identity(d, d);
  Matrix H = point.observation == ObservationMode::partial ? build_partial_H(d) : Matrix::Identity(d, d);
  GaussianBelief prior{Vector::Zero(d), std::move(cov.Sigma0)};
  if (point.model == ModelKind::linear) {
    return make_linear_model(Matrix::Identity(d, d), std::move(H), std::move(cov.Xi), std::move(cov.Gamma),
                             std::move(prior));
  }
  return make_lorenz96_model(Lorenz96Dynamics{point.forcing, point.dt_obs, point.substeps}, std::move(H),
                             std::move(cov.Xi), std::move(cov.Gamma), std::move(prior));
}

std::vector<ExperimentConfig> parse_config(std::string_view text) {
  struct Section {
    ExperimentConfig config;
    std::map<std::string, int> lines;
  };
  Section defaults;
  std::vector<Section> sections;
  Section* current = &defaults;

  const auto all = csv::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const int lineno = static_cast<int>(i + 1);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    std::string_view line = all[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') config_error(where + "malformed section header");
      const std::string label(csv::trim(line.substr(1, line.size() - 2)));
      if (!valid_label(label)) config_error(where + "invalid series label '" + label + "'");
      for (const auto& s : sections) {
        if (s.config.label == label) config_error(where + "duplicate series label '" + label + "'");
      }
      sections.push_back(defaults);
      sections.back().config.label = label;
      for (auto& [key, at] : sections.back().lines) at = -std::abs(at);
      current = &sections.back();
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(where + "expected key = value");
    const std::string key(csv::trim(line.substr(0, eq)));
    const std::string_view value = csv::trim(line.substr(eq + 1));
    const Field* field = find_field(key);
    if (!field) config_error(where + "unknown key '" + key + "'");
    // Keys inherited from the defaults carry a negative line number.
    if (auto it = current->lines.find(key); it != current->lines.end() && it->second > 0) {
      config_error(where + "duplicate key '" + key + "'");
    }
    try {
      field->set(current->config, value);
    } catch (const Error& e) {
      config_error(where + "field '" + key + "': " + e.what());
    }
    current->lines[key] = lineno;
  }

  if (sections.empty()) sections.push_back(std::move(defaults));
  std::vector<ExperimentConfig> out;
  for (auto& s : sections) {
    if (auto p = find_problem(s.config)) {
      std::string where;
      if (auto it = s.lines.find(p->field); it != s.lines.end()) {
        where = "line " + std::to_string(std::abs(it->second)) + ": ";
      }
      config_error(where + "series '" + s.config.label + "': field '" + p->field + "': " + p->message);
    }
    out.push_back(std::move(s.config));
  }
  return out;
}

std::vector<ExperimentConfig> load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const std::vector<ExperimentConfig>& series) {
  std::string out;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (i) out += '\n';
    out += "[" + series[i].label + "]\n";
    for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(series[i]) + "\n";
  }
  return out;
}

std::vector<std::string> preset_names() { return {"table2", "table5", "fig2", "fig3", "fig4", "audit"}; }

std::vector<ExperimentConfig> preset(std::string_view name) {
  std::vector<ExperimentConfig> out;
  if (name == "table2") {
    for (Eigen::Index n : {10, 40}) {
      ExperimentConfig c;
      c.label = "table2-N" + std::to_string(n);
      c.d = 20;
      c.N = n;
      c.M = 100;
      c.sweep = SweepAxis::alpha;
      c.grid = {1e-4, 1e-2, 1e-1};
      out.push_back(c);
    }
  } else if (name == "table5") {
    for (ObservationMode obs : {ObservationMode::full, ObservationMode::partial}) {
      for (Eigen::Index n : {21, 84}) {
        ExperimentConfig c;
        c.label = "table5-" + std::string(to_string(obs)) + "-N" + std::to_string(n);
        c.model = ModelKind::lorenz96;
        c.d = 42;
        c.observation = obs;
        c.covariance_case = obs == ObservationMode::full ? CovarianceCase::A : CovarianceCase::C;
        c.N = n;
        c.M = 100;
        c.sweep = SweepAxis::alpha;
        c.grid = {1e-4, 1e-2, 1e-1};
        out.push_back(c);
      }
    }
  } else if (name == "fig2") {
    ExperimentConfig noise;
    noise.label = "fig2-alpha";
    noise.d = 20;
    noise.N = 20;
    noise.M = 10;
    noise.prior_variance = 1e-8;
    noise.sweep = SweepAxis::alpha;
    noise.grid = log_grid(-16.0, 0.0, 15);
    out.push_back(noise);
    ExperimentConfig size;
    size.label = "fig2-N";
    size.d = 20;
    size.alpha = 1e-1;
    size.M = 10;
    size.sweep = SweepAxis::N;
    size.grid = range_grid(10, 100, 10);
    out.push_back(size);
  } else if (name == "fig3") {
    ExperimentConfig a;
    a.label = "fig3-caseA";
    a.N = 10;
    a.M = 10;
    a.alpha = 1e-4;
    a.sweep = SweepAxis::d;
    a.grid = {2, 4, 8, 16, 32, 64, 128, 256};
    out.push_back(a);
    for (double beta : {0.1, 1.0, 1.5}) {
      ExperimentConfig b = a;
      b.label = "fig3-caseB-beta" + csv::format_double(beta);
      b.covariance_case = CovarianceCase::B;
      b.beta = beta;
      out.push_back(b);
    }
  } else if (name == "fig4") {
    for (ObservationMode obs : {ObservationMode::full, ObservationMode::partial}) {
      ExperimentConfig base;
      base.model = ModelKind::lorenz96;
      base.observation = obs;
      base.covariance_case = obs == ObservationMode::full ? CovarianceCase::A : CovarianceCase::C;
      base.d = 42;
      base.N = 20;
      base.M = 10;
      base.alpha = 1e-4;
      const std::string tag = "fig4-" + std::string(to_string(obs));

      ExperimentConfig noise = base;
      noise.label = tag + "-alpha";
      noise.prior_variance = 1e-8;
      noise.sweep = SweepAxis::alpha;
      noise.grid = log_grid(-16.0, 0.0, 15);
      out.push_back(noise);

      ExperimentConfig size = base;
      size.label = tag + "-N";
      size.sweep = SweepAxis::N;
      size.grid = range_grid(10, 100, 10);
      out.push_back(size);

      ExperimentConfig dim = base;
      dim.label = tag + "-d";
      dim.sweep = SweepAxis::d;
      dim.grid = {6, 18, 30, 42, 54, 66, 78, 90, 102};
      out.push_back(dim);
    }
  } else if (name == "audit") {
    ExperimentConfig c;
    c.label = "audit";
    c.d = 10;
    c.alpha = 1e-2;
    c.N = 10;
    c.M = 50;
    c.algorithms = {Algorithm::renkf};
    out.push_back(c);
  } else {
    config_error("unknown preset '" + std::string(name) + "'");
  }
  for (const auto& c : out) validate(c);
  return out;
}

}  // namespace renkf
