// Command-line front end. Uses only the C API in renkf/renkf.h.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "renkf/renkf.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitAuditFailed = 3;

struct Options {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string truth_file;
  unsigned threads = 0;
};

struct ConfigDeleter {
  void operator()(renkf_config* c) const { renkf_config_free(c); }
};
struct BufferDeleter {
  void operator()(renkf_buffer* b) const { renkf_buffer_free(b); }
};
using ConfigPtr = std::unique_ptr<renkf_config, ConfigDeleter>;
using BufferPtr = std::unique_ptr<renkf_buffer, BufferDeleter>;

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(renkf_status status) {
  if (status != RENKF_OK) {
    throw CommandError(std::string(renkf_status_name(status)) + ": " + renkf_last_error());
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RENKF_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw CommandError("RENKF_THREADS must be a positive integer");
  }
  return 1;
}

ConfigPtr load(const Options& opt) {
  if (opt.config_path.empty() == opt.preset.empty()) {
    throw CommandError("give exactly one of --config and --preset");
  }
  renkf_config* raw = nullptr;
  if (!opt.config_path.empty()) {
    check(renkf_config_load(opt.config_path.c_str(), &raw));
  } else {
    check(renkf_config_preset(opt.preset.c_str(), &raw));
  }
  ConfigPtr cfg(raw);
  if (opt.seed) check(renkf_config_set_seed(cfg.get(), *opt.seed));
  return cfg;
}

void emit(const Options& opt, renkf_buffer* raw) {
  BufferPtr buf(raw);
  if (opt.out.empty() || opt.out == "-") {
    std::cout.write(renkf_buffer_data(buf.get()), static_cast<std::streamsize>(renkf_buffer_size(buf.get())));
    std::cout.flush();
    return;
  }
  std::ofstream f(opt.out, std::ios::binary);
  if (!f) throw CommandError("cannot open output file '" + opt.out + "'");
  f.write(renkf_buffer_data(buf.get()), static_cast<std::streamsize>(renkf_buffer_size(buf.get())));
  if (!f) throw CommandError("failed writing '" + opt.out + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CommandError("cannot open truth file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void add_common(CLI::App* cmd, Options& opt, bool threads) {
  cmd->add_option("--config", opt.config_path, "Experiment config file");
  cmd->add_option("--preset", opt.preset, "Named preset (table2, table5, fig2, fig3, fig4, audit)");
  cmd->add_option("--seed", opt.seed, "Override the seed of every series");
  cmd->add_option("--out", opt.out, "Output CSV path (default: stdout)");
  if (threads) cmd->add_option("--threads", opt.threads, "Worker threads (default: $RENKF_THREADS or 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Kalman filters with resampling: simulation, filtering and Monte Carlo experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", renkf_version());

  Options opt;
  auto* simulate = app.add_subcommand("simulate", "Simulate a truth trajectory and observations");
  add_common(simulate, opt, false);
  auto* filter = app.add_subcommand("filter", "Run the configured algorithms on one trajectory");
  add_common(filter, opt, false);
  filter->add_option("--truth-file", opt.truth_file, "CSV written by simulate (default: simulate from config)");
  auto* experiment = app.add_subcommand("experiment", "Monte Carlo metrics over the configured grid");
  add_common(experiment, opt, true);
  auto* audit = app.add_subcommand("audit-rates", "Empirical error-rate audit against the Kalman filter");
  add_common(audit, opt, true);

  CLI11_PARSE(app, argc, argv);

  try {
    ConfigPtr cfg = load(opt);
    renkf_buffer* out = nullptr;
    if (simulate->parsed()) {
      check(renkf_simulate(cfg.get(), &out));
      emit(opt, out);
    } else if (filter->parsed()) {
      const std::string truth = opt.truth_file.empty() ? std::string() : read_file(opt.truth_file);
      check(renkf_filter(cfg.get(), opt.truth_file.empty() ? nullptr : truth.c_str(), &out));
      emit(opt, out);
    } else if (experiment->parsed()) {
      check(renkf_experiment(cfg.get(), resolve_threads(opt.threads), &out));
      emit(opt, out);
    } else if (audit->parsed()) {
      int passed = 0;
      check(renkf_audit_rates(cfg.get(), resolve_threads(opt.threads), &out, &passed));
      emit(opt, out);
      if (!passed) {
        std::cerr << "audit-rates: at least one check failed\n";
        return kExitAuditFailed;
      }
    }
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
