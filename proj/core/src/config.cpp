#include "phasetomo/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "phasetomo/error.hpp"
#include "phasetomo/io.hpp"

namespace phasetomo {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names{
      {"classical_oscillation", ExperimentKind::classical_oscillation},
      {"harmonic_control", ExperimentKind::harmonic_control},
      {"quantum_wigner", ExperimentKind::quantum_wigner},
      {"squeezing", ExperimentKind::squeezing},
      {"corrugation_scan", ExperimentKind::corrugation_scan},
      {"period_analysis", ExperimentKind::period_analysis},
  };
  return names;
}

// Every accepted key, so typos fail loudly instead of silently using defaults.
const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"kind", "output_dir"}},
      {"physics", {"mass", "trap_hz", "transverse_hz", "temperature", "sigma_el"}},
      {"potential", {"corrugation", "corrugation_scale", "target_shift_span", "corrugation_file", "quartic_w"}},
      {"ensemble", {"n", "x_shift", "seed"}},
      {"evolution", {"t1", "dt", "method", "collisions", "cell_size", "collision_dt"}},
      {"projections", {"count", "spacing", "time_step"}},
      {"imaging", {"enabled", "pixel", "psf_sigma", "noise_fraction", "half_width"}},
      {"reconstruction", {"k_c", "mlem_iterations", "grid_n", "grid_half", "support_threshold"}},
      {"quantum",
       {"sigma", "k", "x0", "grid_n", "x_min", "x_max", "dt", "t_end", "stride", "n_angles", "t_f", "k_c",
        "wigner_half", "wigner_n", "projection_n", "projection_half"}},
      {"period", {"e_min_factor", "e_max_factor", "n_energies"}},
      {"wire",
       {"width", "thickness", "current", "distance", "defect_wavelength", "defect_transverse", "defect_stretch",
        "defect_phase"}},
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  void number(const std::string& section, const std::string& key, double& out) const {
    auto v = raw(section, key);
    if (!v) return;
    try {
      out = io::parse_double(trim(*v), section + "." + key);
    } catch (const IoError& e) {
      throw InputError(std::string("config: ") + e.what());
    }
  }

  template <class U>
  void count(const std::string& section, const std::string& key, U& out) const {
    if (auto v = raw(section, key)) {
      const std::string s = trim(*v);
      unsigned long long parsed = 0;
      std::size_t used = 0;
      try {
        parsed = std::stoull(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || s.empty() || s[0] == '-') {
        throw InputError(section + "." + key + ": expected a non-negative integer, got '" + s + "'");
      }
      out = static_cast<U>(parsed);
    }
  }

  void flag(const std::string& section, const std::string& key, bool& out) const {
    if (auto v = raw(section, key)) {
      const std::string s = trim(*v);
      if (s == "true" || s == "1" || s == "yes" || s == "on") {
        out = true;
      } else if (s == "false" || s == "0" || s == "no" || s == "off") {
        out = false;
      } else {
        throw InputError(section + "." + key + ": expected true/false, got '" + s + "'");
      }
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

 private:
  const pt::ptree& tree_;
};

std::string fmt(double v) { return io::format_double(v); }

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) h = (h ^ c) * 1099511628211ULL;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [name, k] : kind_names()) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  const auto it = kind_names().find(name);
  if (it == kind_names().end()) throw InputError("unknown experiment kind '" + name + "'");
  return it->second;
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  for (const auto& [section, child] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (child.empty()) throw InputError("config: key '" + section + "' outside any section");
      throw InputError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : child) {
      if (!it->second.count(key)) throw InputError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  Reader r(tree);
  ExperimentConfig cfg;
  const auto kind = r.raw("experiment", "kind");
  if (!kind) throw InputError("config: [experiment] kind is required");
  cfg.kind = parse_experiment_kind(Reader::trim(*kind));

  if (cfg.kind == ExperimentKind::squeezing) {
    cfg.quantum.k = 0.0;
    cfg.quantum.x0 = 15e-6;
    cfg.quantum.grid_n = 2048;
    cfg.quantum.x_min = -120e-6;
    cfg.quantum.x_max = 120e-6;
    cfg.quantum.dt = 2e-6;
    cfg.potential.quartic_w = 100e-6;
  }
  if (cfg.kind == ExperimentKind::classical_oscillation) cfg.potential.corrugation = CorrugationSource::synth;

  if (auto v = r.raw("experiment", "output_dir")) cfg.output_dir = Reader::trim(*v);

  double trap_hz = cfg.params.omega0 / (2.0 * constants::pi);
  double transverse_hz = cfg.params.omega_perp / (2.0 * constants::pi);
  r.number("physics", "mass", cfg.params.mass);
  r.number("physics", "trap_hz", trap_hz);
  r.number("physics", "transverse_hz", transverse_hz);
  r.number("physics", "temperature", cfg.params.temperature);
  r.number("physics", "sigma_el", cfg.params.sigma_el);
  cfg.params.omega0 = 2.0 * constants::pi * trap_hz;
  cfg.params.omega_perp = 2.0 * constants::pi * transverse_hz;

  if (auto v = r.raw("potential", "corrugation")) {
    const auto s = Reader::trim(*v);
    if (s == "none") {
      cfg.potential.corrugation = CorrugationSource::none;
    } else if (s == "synth") {
      cfg.potential.corrugation = CorrugationSource::synth;
    } else if (s == "file") {
      cfg.potential.corrugation = CorrugationSource::file;
    } else {
      throw InputError("potential.corrugation: expected none, synth or file, got '" + s + "'");
    }
  }
  r.number("potential", "corrugation_scale", cfg.potential.corrugation_scale);
  r.number("potential", "target_shift_span", cfg.potential.target_shift_span);
  if (auto v = r.raw("potential", "corrugation_file")) {
    fs::path p = Reader::trim(*v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.potential.corrugation_file = p;
  }
  r.number("potential", "quartic_w", cfg.potential.quartic_w);

  r.count("ensemble", "n", cfg.ensemble.n);
  r.number("ensemble", "x_shift", cfg.ensemble.x_shift);
  r.count("ensemble", "seed", cfg.ensemble.seed);

  r.number("evolution", "t1", cfg.evolution.t1);
  r.number("evolution", "dt", cfg.evolution.dt);
  if (auto v = r.raw("evolution", "method")) {
    const auto s = Reader::trim(*v);
    if (s == "verlet") {
      cfg.evolution.use_angle_evolution = false;
    } else if (s == "angle") {
      cfg.evolution.use_angle_evolution = true;
    } else {
      throw InputError("evolution.method: expected verlet or angle, got '" + s + "'");
    }
  }
  r.flag("evolution", "collisions", cfg.evolution.collisions);
  r.number("evolution", "cell_size", cfg.evolution.cell_size);
  r.number("evolution", "collision_dt", cfg.evolution.collision_dt);

  r.count("projections", "count", cfg.projections.count);
  if (auto v = r.raw("projections", "spacing")) {
    const auto s = Reader::trim(*v);
    if (s == "uniform") {
      cfg.projections.spacing = AngleSpacing::uniform;
    } else if (s == "time") {
      cfg.projections.spacing = AngleSpacing::time;
    } else {
      throw InputError("projections.spacing: expected uniform or time, got '" + s + "'");
    }
  }
  r.number("projections", "time_step", cfg.projections.time_step);

  r.flag("imaging", "enabled", cfg.imaging.enabled);
  r.number("imaging", "pixel", cfg.imaging.pixel);
  r.number("imaging", "psf_sigma", cfg.imaging.psf_sigma);
  r.number("imaging", "noise_fraction", cfg.imaging.noise_fraction);
  r.number("imaging", "half_width", cfg.imaging.half_width);

  r.number("reconstruction", "k_c", cfg.reconstruction.k_c);
  r.count("reconstruction", "mlem_iterations", cfg.reconstruction.mlem_iterations);
  r.count("reconstruction", "grid_n", cfg.reconstruction.grid_n);
  r.number("reconstruction", "grid_half", cfg.reconstruction.grid_half);
  r.number("reconstruction", "support_threshold", cfg.reconstruction.support_threshold);

  auto& q = cfg.quantum;
  r.number("quantum", "sigma", q.sigma);
  r.number("quantum", "k", q.k);
  r.number("quantum", "x0", q.x0);
  r.count("quantum", "grid_n", q.grid_n);
  r.number("quantum", "x_min", q.x_min);
  r.number("quantum", "x_max", q.x_max);
  r.number("quantum", "dt", q.dt);
  r.number("quantum", "t_end", q.t_end);
  r.count("quantum", "stride", q.stride);
  r.count("quantum", "n_angles", q.n_angles);
  r.number("quantum", "t_f", q.t_f);
  r.number("quantum", "k_c", q.k_c);
  r.number("quantum", "wigner_half", q.wigner_half);
  r.count("quantum", "wigner_n", q.wigner_n);
  r.count("quantum", "projection_n", q.projection_n);
  r.number("quantum", "projection_half", q.projection_half);

  r.number("period", "e_min_factor", cfg.period.e_min_factor);
  r.number("period", "e_max_factor", cfg.period.e_max_factor);
  r.count("period", "n_energies", cfg.period.n_energies);

  auto& w = cfg.wire;
  r.number("wire", "width", w.width);
  r.number("wire", "thickness", w.thickness);
  r.number("wire", "current", w.current);
  r.number("wire", "distance", w.distance);
  EdgeDefect defect{5e-6, 0.5e-6, 0.0, 0.0};
  r.number("wire", "defect_wavelength", defect.wavelength);
  r.number("wire", "defect_transverse", defect.transverse_amplitude);
  r.number("wire", "defect_stretch", defect.longitudinal_stretch);
  r.number("wire", "defect_phase", defect.phase);
  w.edge_left = {defect};
  w.edge_right = {defect};

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return parse_config(text, path.parent_path());
}

void ExperimentConfig::validate() const {
  params.validate();
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("config: " + what);
  };
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };

  require(std::isfinite(potential.corrugation_scale), "potential.corrugation_scale must be finite");
  require(finite_nonneg(potential.target_shift_span) && potential.target_shift_span < 0.4,
          "potential.target_shift_span must be in [0, 0.4)");
  require(finite_nonneg(potential.quartic_w), "potential.quartic_w must be >= 0");
  if (potential.corrugation == CorrugationSource::file) {
    require(!potential.corrugation_file.empty(), "potential.corrugation_file is required for corrugation = file");
    require(fs::exists(potential.corrugation_file),
            "corrugation file does not exist: " + potential.corrugation_file.string());
  }

  require(ensemble.n >= 1 && ensemble.n <= 10'000'000, "ensemble.n must be in [1, 1e7]");
  require(std::isfinite(ensemble.x_shift), "ensemble.x_shift must be finite");

  require(finite_nonneg(evolution.t1), "evolution.t1 must be >= 0");
  require(finite_pos(evolution.dt), "evolution.dt must be > 0");
  require(evolution.dt <= 2.0 * constants::pi / (50.0 * params.omega0),
          "evolution.dt must give at least 50 steps per trap period");
  require(finite_pos(evolution.cell_size), "evolution.cell_size must be > 0");
  require(finite_pos(evolution.collision_dt), "evolution.collision_dt must be > 0");
  require(!(evolution.use_angle_evolution && evolution.collisions),
          "evolution: collisions require method = verlet");

  require(projections.count >= 2, "projections.count must be >= 2");
  require(finite_pos(projections.time_step), "projections.time_step must be > 0");
  if (projections.spacing == AngleSpacing::time) {
    const double last = params.omega0 * projections.time_step * static_cast<double>(projections.count - 1);
    require(last < constants::pi, "projections: time schedule angles must stay within [0, pi)");
  }

  require(finite_pos(imaging.pixel), "imaging.pixel must be > 0");
  require(finite_nonneg(imaging.psf_sigma), "imaging.psf_sigma must be >= 0");
  require(finite_nonneg(imaging.noise_fraction), "imaging.noise_fraction must be >= 0");
  require(finite_pos(imaging.half_width) && imaging.half_width > imaging.pixel, "imaging.half_width too small");

  require(finite_pos(reconstruction.k_c), "reconstruction.k_c must be > 0");
  require(reconstruction.grid_n >= 8 && reconstruction.grid_n <= 4096, "reconstruction.grid_n must be in [8, 4096]");
  require(finite_pos(reconstruction.grid_half), "reconstruction.grid_half must be > 0");
  require(reconstruction.support_threshold >= 0.0 && reconstruction.support_threshold < 1.0,
          "reconstruction.support_threshold must be in [0, 1)");

  require(finite_nonneg(quantum.sigma), "quantum.sigma must be >= 0");
  require(std::isfinite(quantum.k) && std::isfinite(quantum.x0), "quantum.k and quantum.x0 must be finite");
  require(quantum.grid_n >= 16 && quantum.grid_n <= (1u << 20), "quantum.grid_n out of range");
  require(std::isfinite(quantum.x_min) && std::isfinite(quantum.x_max) && quantum.x_max > quantum.x_min,
          "quantum.x_max must exceed quantum.x_min");
  require(finite_pos(quantum.dt), "quantum.dt must be > 0");
  require(finite_nonneg(quantum.t_end), "quantum.t_end must be >= 0");
  require(quantum.stride >= 1, "quantum.stride must be >= 1");
  require(quantum.n_angles >= 2, "quantum.n_angles must be >= 2");
  require(finite_nonneg(quantum.t_f), "quantum.t_f must be >= 0");
  require(finite_pos(quantum.k_c), "quantum.k_c must be > 0");
  require(finite_pos(quantum.wigner_half) && quantum.wigner_n >= 8, "quantum Wigner grid invalid");
  require(finite_pos(quantum.projection_half) && quantum.projection_n >= 8, "quantum projection axis invalid");

  require(finite_pos(period.e_min_factor) && period.e_max_factor > period.e_min_factor,
          "period energy window invalid");
  require(period.n_energies >= 4, "period.n_energies must be >= 4");

  wire.validate();
  require(!output_dir.empty(), "experiment.output_dir must not be empty");
}

std::string ExperimentConfig::canonical() const {
  std::vector<std::string> lines;
  auto add = [&](const std::string& key, const std::string& value) { lines.push_back(key + "=" + value); };
  auto src = [](CorrugationSource s) {
    return s == CorrugationSource::none ? "none" : s == CorrugationSource::synth ? "synth" : "file";
  };
  add("experiment.kind", to_string(kind));
  add("physics.mass", fmt(params.mass));
  add("physics.omega0", fmt(params.omega0));
  add("physics.omega_perp", fmt(params.omega_perp));
  add("physics.temperature", fmt(params.temperature));
  add("physics.sigma_el", fmt(params.sigma_el));
  add("potential.corrugation", src(potential.corrugation));
  add("potential.corrugation_scale", fmt(potential.corrugation_scale));
  add("potential.target_shift_span", fmt(potential.target_shift_span));
  if (potential.corrugation == CorrugationSource::file) {
    // Content, not path, so moving the file does not change the hash.
    add("potential.corrugation_file", fnv1a_hex(io::read_file(potential.corrugation_file)));
  }
  add("potential.quartic_w", fmt(potential.quartic_w));
  add("ensemble.n", std::to_string(ensemble.n));
  add("ensemble.x_shift", fmt(ensemble.x_shift));
  add("ensemble.seed", std::to_string(ensemble.seed));
  add("evolution.t1", fmt(evolution.t1));
  add("evolution.dt", fmt(evolution.dt));
  add("evolution.method", evolution.use_angle_evolution ? "angle" : "verlet");
  add("evolution.collisions", evolution.collisions ? "true" : "false");
  add("evolution.cell_size", fmt(evolution.cell_size));
  add("evolution.collision_dt", fmt(evolution.collision_dt));
  add("projections.count", std::to_string(projections.count));
  add("projections.spacing", projections.spacing == AngleSpacing::uniform ? "uniform" : "time");
  add("projections.time_step", fmt(projections.time_step));
  add("imaging.enabled", imaging.enabled ? "true" : "false");
  add("imaging.pixel", fmt(imaging.pixel));
  add("imaging.psf_sigma", fmt(imaging.psf_sigma));
  add("imaging.noise_fraction", fmt(imaging.noise_fraction));
  add("imaging.half_width", fmt(imaging.half_width));
  add("reconstruction.k_c", fmt(reconstruction.k_c));
  add("reconstruction.mlem_iterations", std::to_string(reconstruction.mlem_iterations));
  add("reconstruction.grid_n", std::to_string(reconstruction.grid_n));
  add("reconstruction.grid_half", fmt(reconstruction.grid_half));
  add("reconstruction.support_threshold", fmt(reconstruction.support_threshold));
  add("quantum.sigma", fmt(quantum.sigma));
  add("quantum.k", fmt(quantum.k));
  add("quantum.x0", fmt(quantum.x0));
  add("quantum.grid_n", std::to_string(quantum.grid_n));
  add("quantum.x_min", fmt(quantum.x_min));
  add("quantum.x_max", fmt(quantum.x_max));
  add("quantum.dt", fmt(quantum.dt));
  add("quantum.t_end", fmt(quantum.t_end));
  add("quantum.stride", std::to_string(quantum.stride));
  add("quantum.n_angles", std::to_string(quantum.n_angles));
  add("quantum.t_f", fmt(quantum.t_f));
  add("quantum.k_c", fmt(quantum.k_c));
  add("quantum.wigner_half", fmt(quantum.wigner_half));
  add("quantum.wigner_n", std::to_string(quantum.wigner_n));
  add("quantum.projection_n", std::to_string(quantum.projection_n));
  add("quantum.projection_half", fmt(quantum.projection_half));
  add("period.e_min_factor", fmt(period.e_min_factor));
  add("period.e_max_factor", fmt(period.e_max_factor));
  add("period.n_energies", std::to_string(period.n_energies));
  add("wire.width", fmt(wire.width));
  add("wire.thickness", fmt(wire.thickness));
  add("wire.current", fmt(wire.current));
  add("wire.distance", fmt(wire.distance));
  if (!wire.edge_left.empty()) {
    const auto& d = wire.edge_left.front();
    add("wire.defect_wavelength", fmt(d.wavelength));
    add("wire.defect_transverse", fmt(d.transverse_amplitude));
    add("wire.defect_stretch", fmt(d.longitudinal_stretch));
    add("wire.defect_phase", fmt(d.phase));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical()); }

}  // namespace phasetomo
