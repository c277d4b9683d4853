#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "phasetomo/physics.hpp"
#include "phasetomo/wire.hpp"

namespace phasetomo {

enum class ExperimentKind {
  classical_oscillation,
  harmonic_control,
  quantum_wigner,
  squeezing,
  corrugation_scan,
  period_analysis,
};

std::string to_string(ExperimentKind kind);
/// Throws InputError for unknown names.
ExperimentKind parse_experiment_kind(const std::string& name);

enum class CorrugationSource { none, synth, file };

struct PotentialSpec {
  CorrugationSource corrugation = CorrugationSource::none;
  double corrugation_scale = 1.0;
  // When > 0, the synthetic corrugation is rescaled so that max δω/ω0 − min δω/ω0
  // over the ensemble energy window equals this value.
  double target_shift_span = 0.0;
  std::filesystem::path corrugation_file;
  double quartic_w = 0.0;  // m, 0 disables
};

struct EnsembleSpec {
  std::size_t n = 3000;
  double x_shift = 85e-6;
  std::uint64_t seed = 1;
};

struct EvolutionSpec {
  double t1 = 0.5;
  double dt = 10e-6;
  bool use_angle_evolution = false;
  bool collisions = false;
  double cell_size = 5e-6;
  double collision_dt = 1e-3;
};

enum class AngleSpacing { uniform, time };

struct ProjectionSpec {
  std::size_t count = 13;
  AngleSpacing spacing = AngleSpacing::uniform;
  double time_step = 1e-3;  // used when spacing == time: θ_j = ω0·j·time_step
};

struct ImagingSpec {
  bool enabled = true;
  double pixel = 2e-6;
  double psf_sigma = 3e-6;
  double noise_fraction = 0.01;  // of peak optical density
  double half_width = 150e-6;
};

struct ReconstructionSpec {
  double k_c = 0.43e6;  // 1/m
  std::size_t mlem_iterations = 50;
  std::size_t grid_n = 128;
  double grid_half = 150e-6;
  double support_threshold = 0.1;  // fraction of peak; metrics ignore cells below it
};

struct QuantumSpec {
  double sigma = 0.0;  // m, 0 → oscillator length √(ħ/mω0)
  double k = 3.14159265358979e6;
  double x0 = 0.0;
  std::size_t grid_n = 4096;
  double x_min = -128e-6;
  double x_max = 128e-6;
  double dt = 10e-6;
  double t_end = 0.3;
  std::size_t stride = 100;
  std::size_t n_angles = 90;
  double t_f = 30e-3;
  double k_c = 10e6;
  double wigner_half = 16e-6;  // reconstruction grid half-width in q̄ and p̄
  std::size_t wigner_n = 128;
  std::size_t projection_n = 544;
  double projection_half = 17e-6;
};

struct PeriodSpec {
  double e_min_factor = 0.3;  // × E_shift
  double e_max_factor = 2.0;
  std::size_t n_energies = 64;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::harmonic_control;
  PhysicalParams params;
  PotentialSpec potential;
  EnsembleSpec ensemble;
  EvolutionSpec evolution;
  ProjectionSpec projections;
  ImagingSpec imaging;
  ReconstructionSpec reconstruction;
  QuantumSpec quantum;
  PeriodSpec period;
  WireGeometry wire;
  std::filesystem::path output_dir = "phasetomo_out";

  /// Throws InputError on any invariant violation (missing files, negative times, ...).
  void validate() const;
  /// Canonical `section.key=value` listing, one per line, sorted.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Parses INI text. Unknown sections or keys are rejected. Relative file
/// paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace phasetomo
