#pragma once

#include <filesystem>
#include <string>

#include "phasetomo/ensemble.hpp"
#include "phasetomo/imaging.hpp"
#include "phasetomo/phase_space_grid.hpp"
#include "phasetomo/potential.hpp"
#include "phasetomo/quantum.hpp"
#include "phasetomo/tomography.hpp"

namespace phasetomo::io {

/// Writes `content` to a temporary file next to `path`, then renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& token, const std::string& context);

// `x_meters<TAB>deltaU_joules` per line, '#' comments.
std::string format_corrugation(const CorrugationGrid& grid);
CorrugationGrid parse_corrugation(const std::string& text);
void save_corrugation(const std::filesystem::path& path, const CorrugationGrid& grid);
CorrugationGrid load_corrugation(const std::filesystem::path& path);

// `# N=<n> t=<s> seed=<u64>` then `x<TAB>p<TAB>e_perp` per particle.
std::string format_ensemble(const Ensemble& ens);
Ensemble parse_ensemble(const std::string& text, const PhysicalParams& params);
void save_ensemble(const std::filesystem::path& path, const Ensemble& ens);
Ensemble load_ensemble(const std::filesystem::path& path, const PhysicalParams& params);

// `PSSINO1 <n_angles> <n_x> <x_min> <x_max>`, then `theta=<rad>` and n_x values per angle.
std::string format_sinogram(const Sinogram& sino);
Sinogram parse_sinogram(const std::string& text);
void save_sinogram(const std::filesystem::path& path, const Sinogram& sino);
Sinogram load_sinogram(const std::filesystem::path& path);

// `PSGRID1 <nq> <np> <qmin> <qmax> <pmin> <pmax>` line, then nq·np little-endian float64.
std::string format_grid(const PhaseSpaceGrid& grid);
PhaseSpaceGrid parse_grid(const std::string& bytes);
void save_grid(const std::filesystem::path& path, const PhaseSpaceGrid& grid);
PhaseSpaceGrid load_grid(const std::filesystem::path& path);

// `PSWF1 <n> <xmin> <xmax> <t>` then `re<TAB>im` per point.
std::string format_wavefunction(const WaveFunction1D& psi);
WaveFunction1D parse_wavefunction(const std::string& text, const PhysicalParams& params);
void save_wavefunction(const std::filesystem::path& path, const WaveFunction1D& psi);
WaveFunction1D load_wavefunction(const std::filesystem::path& path, const PhysicalParams& params);

// `x_meters<TAB>density` per line.
std::string format_profile(const UniformAxis& x, const std::vector<double>& values);
void save_profile(const std::filesystem::path& path, const UniformAxis& x, const std::vector<double>& values);

/// Binary PGM (P5, maxval 255). Images map [0, max] linearly; signed grids
/// map [−max|W|, +max|W|] so zero is mid-gray. Rows are written top to bottom
/// (highest p̄ / y first).
std::string format_pgm(const DensityImage& img);
std::string format_pgm(const PhaseSpaceGrid& grid);
void save_pgm(const std::filesystem::path& path, const DensityImage& img);
void save_pgm(const std::filesystem::path& path, const PhaseSpaceGrid& grid);

}  // namespace phasetomo::io
