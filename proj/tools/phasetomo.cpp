#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phasetomo/config.hpp"
#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"
#include "phasetomo/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Options& opt, bool run_flags) {
  cmd->add_option("--config", opt.config, "INI experiment configuration")->required()->check(CLI::ExistingFile);
  if (!run_flags) return;
  cmd->add_option("--out", opt.out, "output directory (overrides [experiment] output_dir)");
  cmd->add_option("--seed", opt.seed, "ensemble seed (overrides [ensemble] seed)");
  cmd->add_option("--threads", opt.threads, "worker threads; falls back to PHASETOMO_THREADS, then all cores")
      ->check(CLI::NonNegativeNumber);
}

phasetomo::ExperimentConfig load(const Options& opt) {
  auto cfg = phasetomo::load_config(opt.config);
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.seed) cfg.ensemble.seed = *opt.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase-space tomography of trapped cold atoms"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(phasetomo::kVersion));

  Options opt;
  const char* kinds[] = {"classical_oscillation", "harmonic_control", "quantum_wigner",
                         "squeezing",             "corrugation_scan", "period_analysis"};
  for (const char* k : kinds) add_common(app.add_subcommand(k, std::string("run the ") + k + " experiment"), opt, true);
  add_common(app.add_subcommand("validate", "check a configuration without running it"), opt, false);

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    auto cfg = load(opt);
    if (sub == "validate") {
      std::cout << "config ok: experiment=" << phasetomo::to_string(cfg.kind) << " hash=" << cfg.hash() << "\n";
      return 0;
    }
    if (phasetomo::parse_experiment_kind(sub) != cfg.kind) {
      std::cerr << "error: subcommand " << sub << " does not match config kind " << phasetomo::to_string(cfg.kind)
                << "\n";
      return 2;
    }
    phasetomo::set_thread_count(phasetomo::resolve_thread_count(opt.threads));
    const auto result = phasetomo::run(cfg);
    std::cout << result.report.text();
    std::cout << "artifacts=" << result.artifacts.size() << " dir=" << cfg.output_dir.string() << "\n";
    return 0;
  } catch (const phasetomo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
