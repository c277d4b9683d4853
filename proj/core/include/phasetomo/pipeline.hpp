#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "phasetomo/config.hpp"
#include "phasetomo/potential.hpp"

namespace phasetomo {

inline constexpr const char* kVersion = "1.0.0";

/// `name=version` pairs for every library module, in a fixed order.
std::vector<std::pair<std::string, std::string>> module_versions();

/// Ordered key=value metrics. Numbers are written in shortest round-trip form.
class RunReport {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::size_t value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::string text() const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct RunResult {
  RunReport report;
  std::vector<std::filesystem::path> artifacts;  // report.txt last
};

/// Builds the trap described by `spec` (harmonic plus optional corrugation and quartic).
/// target_shift_span is not applied here; see calibrate_corrugation.
Potential1D build_potential(const ExperimentConfig& cfg);

/// Runs the configured experiment, writing artifacts to cfg.output_dir.
/// On any error every artifact written so far is removed and the error rethrown.
RunResult run(const ExperimentConfig& cfg);

}  // namespace phasetomo
