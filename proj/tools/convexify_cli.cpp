#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "convexify/config.hpp"
#include "convexify/errors.hpp"
#include "convexify/pipeline.hpp"

namespace cx = convexify;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kSuiteFailed = 1, kConfig = 2, kRuntime = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("convexify");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("CONVEXIFY_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("CONVEXIFY_LOG='{}' is not a log level; keeping info", env);
    else
      spdlog::set_level(level);
  }
}

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<int> threads;
  std::optional<long long> seed;
  std::optional<double> lambda, mu, R;
};

cx::RunConfig load(const Options& o) {
  cx::RunConfig cfg = o.config.empty() ? cx::parse_config("") : cx::load_config(o.config);
  if (o.out) cfg.out_dir = *o.out;
  if (o.seed) {
    if (*o.seed < 0) throw cx::ConfigError("--seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(*o.seed);
  }
  // Explicit mu or lambda turns the schedule off.
  if (o.lambda) {
    cfg.solver.lambda = *o.lambda;
    cfg.solver.schedule_mode = false;
  }
  if (o.mu) {
    cfg.solver.mu = *o.mu;
    cfg.solver.schedule_mode = false;
  }
  if (o.R) cfg.solver.R = *o.R;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Options& o, bool solver_flags) {
  cmd->add_option("--config", o.config, "Run configuration (INI)")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (overrides [output] dir)");
  cmd->add_option("--threads", o.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Noise and probe seed override");
  if (solver_flags) {
    cmd->add_option("--lambda", o.lambda, "Carleman parameter of the main functional");
    cmd->add_option("--mu", o.mu, "Carleman parameter of the tail functional");
    cmd->add_option("--R", o.R, "Radius of the admissible ball");
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Semidiscrete convexification for the 3D Helmholtz coefficient inverse problem"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Synthesize backscatter data and oracle files");
  add_common(synth, o, false);
  auto* invert = app.add_subcommand("invert", "Reconstruct the coefficient from a dataset");
  add_common(invert, o, true);
  invert->add_option("--dataset", o.dataset, "Dataset file (default <out>/dataset.txt)");
  auto* verify = app.add_subcommand("verify", "Run the verification suites");
  add_common(verify, o, true);
  auto* report = app.add_subcommand("report", "Summarize an inversion output directory");
  add_common(report, o, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (o.threads) omp_set_num_threads(*o.threads);
    if (report->parsed()) {
      fs::path dir = o.out ? fs::path(*o.out) : load(o).out_dir;
      std::cout << cx::cmd_report(dir);
      return kOk;
    }
    const cx::RunConfig cfg = load(o);
    if (synth->parsed()) {
      cx::cmd_synth(cfg, cfg.out_dir);
      spdlog::info("synth: wrote {}", cfg.out_dir.string());
    } else if (invert->parsed()) {
      const fs::path ds = o.dataset ? fs::path(*o.dataset) : cfg.out_dir / cx::files::kDataset;
      const auto out = cx::cmd_invert(cfg, ds, cfg.out_dir);
      std::cout << "c_comp " << out.result.c_comp << " at (" << out.result.location[0] << ", "
                << out.result.location[1] << ", " << out.result.location[2] << ")\n";
    } else if (verify->parsed()) {
      const auto results = cx::cmd_verify(cfg, cfg.out_dir);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << r.name << ' ' << (r.passed ? "PASS" : "FAIL") << '\n';
        for (const auto& d : r.details) std::cout << "  " << d << '\n';
        ok = ok && r.passed;
      }
      return ok ? kOk : kSuiteFailed;
    }
  } catch (const cx::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const cx::StageError& e) {
    spdlog::error("stage {} failed: {}", e.stage(), e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  }
  return kOk;
}
