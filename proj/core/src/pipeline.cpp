#include "phasetomo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phasetomo/collisions.hpp"
#include "phasetomo/dynamics.hpp"
#include "phasetomo/error.hpp"
#include "phasetomo/imaging.hpp"
#include "phasetomo/io.hpp"
#include "phasetomo/period.hpp"
#include "phasetomo/quantum.hpp"
#include "phasetomo/tomography.hpp"
#include "phasetomo/wire.hpp"

namespace phasetomo {

namespace fs = std::filesystem;
using constants::kB;
using constants::nano;
using constants::pi;

std::vector<std::pair<std::string, std::string>> module_versions() {
  return {{"potential", kVersion}, {"dynamics", kVersion}, {"tomography", kVersion},
          {"quantum", kVersion},   {"imaging", kVersion},  {"pipeline_cli", kVersion}};
}

void RunReport::set(const std::string& key, const std::string& value) {
  if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
    throw InputError("RunReport: key/value may not contain '=' or newlines: " + key);
  }
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void RunReport::set(const std::string& key, double value) { set(key, io::format_double(value)); }
void RunReport::set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }

bool RunReport::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& RunReport::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw InputError("RunReport: no key " + key);
}

double RunReport::number(const std::string& key) const { return io::parse_double(get(key), key); }

std::string RunReport::text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

namespace {

class ArtifactSink {
 public:
  explicit ArtifactSink(fs::path dir) : dir_(std::move(dir)) {}
  ArtifactSink(const ArtifactSink&) = delete;
  ArtifactSink& operator=(const ArtifactSink&) = delete;

  ~ArtifactSink() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    io::write_atomic(p, content);
    if (std::find(written_.begin(), written_.end(), p) == written_.end()) written_.push_back(p);
  }

  std::vector<fs::path> commit() {
    committed_ = true;
    return written_;
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

double shift_energy(const ExperimentConfig& cfg) { return cfg.params.harmonic_energy(cfg.ensemble.x_shift); }

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> energies_of(const Ensemble& ens, const Potential1D& pot) {
  std::vector<double> e(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) e[i] = particle_energy(pot, ens.x[i], ens.p[i]);
  return e;
}

struct EnergyWindow {
  double lo;
  double hi;
};

// Central window mean ± 2 std of the ensemble energies.
EnergyWindow central_window(const std::vector<double>& e) {
  const double n = static_cast<double>(e.size());
  const double mean = std::accumulate(e.begin(), e.end(), 0.0) / n;
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  const double emin = *std::min_element(e.begin(), e.end());
  return {std::max(mean - 2.0 * sd, emin), mean + 2.0 * sd};
}

struct CalibratedTrap {
  Potential1D pot;
  double corrugation_scale = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double window_shift_min = 0.0;
  double window_shift_max = 0.0;
};

// Scales the synthetic corrugation so the δω/ω0 span over the ensemble's central
// energy window matches target_shift_span (linear response in the amplitude).
CalibratedTrap calibrated_trap(const ExperimentConfig& cfg, const std::vector<double>& reference_energies) {
  CalibratedTrap out{build_potential(cfg), cfg.potential.corrugation_scale};
  if (cfg.potential.corrugation == CorrugationSource::none) return out;
  const auto window = central_window(reference_energies);
  out.window_lo = window.lo;
  out.window_hi = window.hi;
  const auto grid = linspace(window.lo, window.hi, 48);
  auto span_of = [&](const Potential1D& pot, double& mn, double& mx) {
    const auto curve = frequency_shift_curve(pot, grid);
    if (curve.energies().size() < 4) throw DomainError("calibration: frequency-shift curve has too few points");
    mn = curve.min_shift();
    mx = curve.max_shift();
    return mx - mn;
  };
  double mn = 0.0;
  double mx = 0.0;
  const double span = span_of(out.pot, mn, mx);
  if (cfg.potential.target_shift_span > 0.0 && cfg.potential.corrugation == CorrugationSource::synth) {
    if (!(span > 0.0)) throw DomainError("calibration: corrugation produces no frequency shift");
    ExperimentConfig scaled = cfg;
    scaled.potential.corrugation_scale = cfg.potential.corrugation_scale * cfg.potential.target_shift_span / span;
    out.pot = build_potential(scaled);
    out.corrugation_scale = scaled.potential.corrugation_scale;
    span_of(out.pot, mn, mx);
  }
  out.window_shift_min = mn;
  out.window_shift_max = mx;
  return out;
}

void report_header(RunReport& rep, const ExperimentConfig& cfg) {
  rep.set("phasetomo_version", std::string(kVersion));
  rep.set("experiment", to_string(cfg.kind));
  rep.set("config_hash", cfg.hash());
  for (const auto& [name, version] : module_versions()) rep.set("module." + name, version);
}

void report_metrics(RunReport& rep, const std::string& prefix, const GridMetrics& m) {
  rep.set(prefix + ".mean_q", m.mean_q);
  rep.set(prefix + ".mean_p", m.mean_p);
  rep.set(prefix + ".sigma_major", m.sigma_major);
  rep.set(prefix + ".sigma_minor", m.sigma_minor);
  rep.set(prefix + ".anisotropy", m.anisotropy);
  rep.set(prefix + ".resultant_length", m.resultant_length);
  rep.set(prefix + ".circular_std", m.circular_std);
  rep.set(prefix + ".arc_equivalent_width", m.arc_equivalent_width);
  rep.set(prefix + ".angular_spread", m.angular_spread);
}

std::vector<double> schedule_angles(const ExperimentConfig& cfg) {
  if (cfg.projections.spacing == AngleSpacing::uniform) return uniform_angles(cfg.projections.count);
  std::vector<double> a(cfg.projections.count);
  for (std::size_t j = 0; j < a.size(); ++j) {
    a[j] = cfg.params.omega0 * cfg.projections.time_step * static_cast<double>(j);
  }
  return a;
}

void run_classical(const ExperimentConfig& cfg, RunReport& rep, ArtifactSink& sink) {
  const Ensemble ens0 = sample_ensemble(cfg.params, cfg.ensemble.x_shift, cfg.ensemble.n, cfg.ensemble.seed);
  const bool harmonic_only = cfg.kind == ExperimentKind::harmonic_control;
  ExperimentConfig trap_cfg = cfg;
  if (harmonic_only) {
    trap_cfg.potential.corrugation = CorrugationSource::none;
    trap_cfg.potential.quartic_w = 0.0;
  }
  const auto ref_energies = energies_of(ens0, build_potential(trap_cfg));
  const auto trap = calibrated_trap(trap_cfg, ref_energies);
  const Potential1D& pot = trap.pot;
  rep.set("energy_shift_K", shift_energy(cfg) / kB);
  if (pot.has_corrugation()) {
    rep.set("corrugation.scale", trap.corrugation_scale);
    rep.set("corrugation.window_lo_K", trap.window_lo / kB);
    rep.set("corrugation.window_hi_K", trap.window_hi / kB);
    rep.set("corrugation.shift_min", trap.window_shift_min);
    rep.set("corrugation.shift_max", trap.window_shift_max);
    if (cfg.potential.corrugation == CorrugationSource::synth) {
      sink.write("corrugation.txt", io::format_corrugation(synth_paper_corrugation(trap.corrugation_scale)));
    }
  }

  Ensemble ens = ens0;
  std::size_t out_of_domain = 0;
  const double t1 = cfg.evolution.t1;
  if (cfg.evolution.use_angle_evolution) {
    const auto e = energies_of(ens0, pot);
    const double lo = *std::min_element(e.begin(), e.end());
    const double hi = *std::max_element(e.begin(), e.end());
    const auto curve = frequency_shift_curve(pot, linspace(lo * 0.98, hi * 1.02, 96));
    ens = angle_evolution(ens0, pot, curve, t1);
    rep.set("evolution.method", std::string("angle"));
    rep.set("evolution.curve_gaps", curve.gaps().size());
  } else if (cfg.evolution.collisions) {
    std::size_t collisions = 0;
    double max_prob = 0.0;
    double t = 0.0;
    std::uint64_t chunk = 0;
    while (t < t1) {
      const double step = std::min(cfg.evolution.collision_dt, t1 - t);
      IntegrationReport ir;
      ens = integrate(ens, pot, cfg.evolution.dt, step, &ir);
      out_of_domain = std::max(out_of_domain, ir.particles_out_of_domain);
      CollisionReport cr;
      ens = collision_step(ens, step, cfg.evolution.cell_size, cfg.ensemble.seed, &cr);
      collisions += cr.collisions;
      max_prob = std::max(max_prob, cr.max_pair_probability);
      t = cfg.evolution.collision_dt * static_cast<double>(++chunk);
    }
    rep.set("evolution.method", std::string("verlet+collisions"));
    rep.set("collisions.count", collisions);
    rep.set("collisions.rate_per_atom",
            t1 > 0.0 ? 2.0 * static_cast<double>(collisions) / (static_cast<double>(ens.size()) * t1) : 0.0);
    rep.set("collisions.max_pair_probability", max_prob);
  } else {
    IntegrationReport ir;
    ens = integrate(ens0, pot, cfg.evolution.dt, t1, &ir);
    out_of_domain = ir.particles_out_of_domain;
    rep.set("evolution.method", std::string("verlet"));
  }
  rep.set("evolution.t1", t1);
  rep.set("evolution.out_of_domain", out_of_domain);
  sink.write("ensemble_t1.txt", io::format_ensemble(ens));

  const auto angles = schedule_angles(cfg);
  const UniformAxis grid_axis = symmetric_axis(cfg.reconstruction.grid_half, cfg.reconstruction.grid_n);
  Sinogram sino;
  if (cfg.imaging.enabled) {
    ImageFrame frame{-cfg.imaging.half_width, cfg.imaging.half_width, 25e-6};
    std::vector<ProjectionProfile> profiles;
    double clipped = 0.0;
    for (std::size_t j = 0; j < angles.size(); ++j) {
      const Ensemble rotated = harmonic_evolution(ens, angles[j] / cfg.params.omega0);
      DensityImage img = render_absorption_image(rotated, cfg.imaging.psf_sigma, cfg.imaging.pixel, 0.0,
                                                 cfg.ensemble.seed, frame, j);
      const double noise = cfg.imaging.noise_fraction * peak_value(img);
      if (noise > 0.0) add_image_noise(img, noise, cfg.ensemble.seed, j);
      if (j == 0) sink.write("image_000.pgm", io::format_pgm(img));
      const Profile prof = column_integrate(img);
      clipped = std::max(clipped, prof.clipped_fraction);
      profiles.push_back({angles[j], prof.x, prof.values});
    }
    sino = ingest_projection_stack(profiles);
    rep.set("imaging.max_clipped_fraction", clipped);
  } else {
    const UniformAxis x_axis = symmetric_axis(cfg.imaging.half_width,
                                              static_cast<std::size_t>(std::llround(
                                                  2.0 * cfg.imaging.half_width / cfg.imaging.pixel)));
    sino = make_sinogram(ens, angles, x_axis);
  }
  sink.write("sinogram.txt", io::format_sinogram(sino));

  const auto fbp = fbp_reconstruct(sino, cfg.reconstruction.k_c, grid_axis, grid_axis);
  const auto mlem = mlem_reconstruct(sino, cfg.reconstruction.mlem_iterations, grid_axis, grid_axis);
  const auto truth = bin_ensemble(ens, grid_axis, grid_axis);
  sink.write("fbp.grid", io::format_grid(fbp.clipped));
  sink.write("fbp_raw.grid", io::format_grid(fbp.raw));
  sink.write("mlem.grid", io::format_grid(mlem.grid));
  sink.write("truth.grid", io::format_grid(truth));
  sink.write("fbp.pgm", io::format_pgm(fbp.clipped));
  sink.write("mlem.pgm", io::format_pgm(mlem.grid));
  sink.write("truth.pgm", io::format_pgm(truth));

  rep.set("projections.count", angles.size());
  const double thr = cfg.reconstruction.support_threshold;
  rep.set("metrics.support_threshold", thr);
  const auto m_fbp = grid_metrics(fbp.clipped, thr);
  report_metrics(rep, "fbp", m_fbp);
  rep.set("fbp.clipped_fraction", fbp.clipped_fraction);
  rep.set("fbp.overlap_truth", overlap(fbp.clipped, truth));
  const auto m_mlem = grid_metrics(mlem.grid, thr);
  report_metrics(rep, "mlem", m_mlem);
  rep.set("mlem.final_kl", mlem.kl_history.empty() ? 0.0 : mlem.kl_history.back());
  rep.set("mlem.overlap_truth", overlap(mlem.grid, truth));
  report_metrics(rep, "truth", grid_metrics(truth, thr));
  // Headline values come from MLEM; sparse-angle FBP keeps a streak floor.
  rep.set("anisotropy", m_mlem.anisotropy);
  rep.set("angular_spread", m_mlem.angular_spread);
}

void run_quantum_wigner(const ExperimentConfig& cfg, RunReport& rep, ArtifactSink& sink) {
  const auto& q = cfg.quantum;
  const double sigma = q.sigma > 0.0 ? q.sigma : oscillator_length(cfg.params);
  const auto psi0 = init_superposition(cfg.params, sigma, q.k, q.grid_n, q.x_min, q.x_max, q.x0);
  sink.write("psi0.txt", io::format_wavefunction(psi0));
  const auto direct = wigner_from_wavefunction(psi0, q.wigner_half, q.wigner_half);

  QuantumTomographySettings st;
  st.n_angles = q.n_angles;
  st.t_f = q.t_f;
  st.k_c = q.k_c;
  st.dt_max = q.dt;
  st.projection_axis = symmetric_axis(q.projection_half, q.projection_n);
  st.q_axis = symmetric_axis(q.wigner_half, q.wigner_n);
  st.p_axis = st.q_axis;
  const auto res = quantum_tomography(psi0, Potential1D::harmonic(cfg.params), st);

  sink.write("sinogram.txt", io::format_sinogram(res.sinogram));
  sink.write("wigner_tomo.grid", io::format_grid(res.wigner));
  sink.write("wigner_direct.grid", io::format_grid(direct));
  sink.write("wigner_tomo.pgm", io::format_pgm(res.wigner));
  sink.write("wigner_direct.pgm", io::format_pgm(direct));

  const auto fid = wigner_fidelity(res.wigner, direct);
  const double q_box = 3.0 * sigma / std::sqrt(2.0);
  const double p_box = q.k != 0.0 ? 0.5 * std::abs(q.k) * sigma * sigma : q_box;
  double wmin = 0.0;
  double wmax = 0.0;
  for (double v : res.wigner.values) {
    wmin = std::min(wmin, v);
    wmax = std::max(wmax, v);
  }
  rep.set("quantum.sigma", sigma);
  rep.set("quantum.k", q.k);
  rep.set("tof.stretch", res.geometry.stretch);
  rep.set("tof.theta_f", res.geometry.theta_f);
  rep.set("wigner.abs_overlap", fid.abs_overlap);
  rep.set("wigner.sign_agreement", fid.sign_agreement);
  rep.set("wigner.relative_l2", fid.relative_l2);
  rep.set("wigner.fringe_q_half", q_box);
  rep.set("wigner.fringe_p_half", p_box);
  rep.set("wigner.fringe_l2", relative_l2_in_box(res.wigner, direct, q_box, p_box));
  rep.set("wigner.min_over_max", wmax > 0.0 ? wmin / wmax : 0.0);
}

void run_squeezing(const ExperimentConfig& cfg, RunReport& rep, ArtifactSink& sink) {
  const auto& q = cfg.quantum;
  const double sigma = q.sigma > 0.0 ? q.sigma : oscillator_length(cfg.params);
  const auto psi0 = init_superposition(cfg.params, sigma, q.k, q.grid_n, q.x_min, q.x_max, q.x0);
  const Potential1D pot = build_potential(cfg);
  const auto samples = squeezing_scan(psi0, pot, q.dt, q.t_end, q.stride);

  std::string table = "# t_s\tdx_m\tdp_kgm_s\tmean_x_m\n";
  for (const auto& s : samples) {
    table += io::format_double(s.t) + "\t" + io::format_double(s.dx) + "\t" + io::format_double(s.dp) + "\t" +
             io::format_double(s.mean_x) + "\n";
  }
  sink.write("squeezing.txt", table);

  const auto best = std::min_element(samples.begin(), samples.end(),
                                     [](const auto& a, const auto& b) { return a.dx < b.dx; });
  rep.set("squeezing.dx0", samples.front().dx);
  rep.set("squeezing.t_min", best->t);
  rep.set("squeezing.dx_min", best->dx);
  rep.set("squeezing.ratio", best->dx / samples.front().dx);
  const double period = oscillation_period(samples);
  rep.set("squeezing.period", period);
  rep.set("squeezing.period_change", period / cfg.params.period() - 1.0);

  const auto psi_min = evolve_schrodinger(psi0, pot, q.dt, best->t);
  const double half = std::abs(q.x0) + 8.0 * sigma;
  const auto w = wigner_from_wavefunction(psi_min, half, half);
  sink.write("wigner_tmin.grid", io::format_grid(w));
  sink.write("wigner_tmin.pgm", io::format_pgm(w));
}

void run_corrugation_scan(const ExperimentConfig& cfg, RunReport& rep, ArtifactSink& sink) {
  const auto res = wire_corrugation_amplitude(cfg.wire);
  rep.set("wire.distance", cfg.wire.distance);
  rep.set("wire.current", cfg.wire.current);
  rep.set("wire.amplitude_nK", res.total_amplitude_K / nano);
  rep.set("wire.relative_error", res.estimated_relative_error);
  for (const auto& d : res.per_defect) {
    rep.set("wire.defect_" + io::format_double(d.wavelength) + ".amplitude_nK", d.amplitude_K / nano);
  }
  std::string table = "# distance_m\tamplitude_nK\n";
  for (double d : {5e-6, 10e-6, 15e-6, 20e-6, 30e-6, 40e-6, 60e-6}) {
    WireGeometry g = cfg.wire;
    g.distance = d;
    table += io::format_double(d) + "\t" + io::format_double(wire_corrugation_amplitude(g).total_amplitude_K / nano) +
             "\n";
  }
  sink.write("corrugation_scan.txt", table);
}

void run_period_analysis(const ExperimentConfig& cfg, RunReport& rep, ArtifactSink& sink) {
  const double es = shift_energy(cfg);
  const auto energies = linspace(cfg.period.e_min_factor * es, cfg.period.e_max_factor * es, cfg.period.n_energies);
  CalibratedTrap trap{build_potential(cfg), cfg.potential.corrugation_scale};
  if (cfg.potential.target_shift_span > 0.0) {
    const Ensemble ens0 = sample_ensemble(cfg.params, cfg.ensemble.x_shift, cfg.ensemble.n, cfg.ensemble.seed);
    trap = calibrated_trap(cfg, energies_of(ens0, build_potential(cfg)));
  }
  const Potential1D& pot = trap.pot;
  rep.set("energy_shift_K", es / kB);
  rep.set("corrugation.scale", trap.corrugation_scale);
  const double t0 = cfg.params.period();

  struct Row {
    double direct = std::nan("");
    double exact = std::nan("");
    double lowest = std::nan("");
  };
  std::vector<Row> rows(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    try {
      rows[i].direct = period_direct(pot, energies[i]) / t0 - 1.0;
    } catch (const Error&) {
    }
    try {
      rows[i].exact = period_perturbative(pot, energies[i], PerturbationMode::exact_integral) / t0;
    } catch (const Error&) {
    }
    try {
      rows[i].lowest = period_perturbative(pot, energies[i], PerturbationMode::lowest_order) / t0;
    } catch (const Error&) {
    }
  }
  std::string table = "# E_J\tE_over_Eshift\tdT_T_direct\tdT_T_exact\tdT_T_lowest\n";
  double span = 0.0;
  double worst_exact = 0.0;
  double worst_lowest = 0.0;
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (std::isfinite(r.direct)) span = std::max(span, std::abs(r.direct));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    table += io::format_double(energies[i]) + "\t" + io::format_double(energies[i] / es) + "\t" +
             io::format_double(r.direct) + "\t" + io::format_double(r.exact) + "\t" + io::format_double(r.lowest) +
             "\n";
    if (!std::isfinite(r.direct)) {
      ++failed;
      continue;
    }
    if (span > 0.0 && std::isfinite(r.exact)) worst_exact = std::max(worst_exact, std::abs(r.exact - r.direct) / span);
    if (span > 0.0 && std::isfinite(r.lowest)) {
      worst_lowest = std::max(worst_lowest, std::abs(r.lowest - r.direct) / span);
    }
  }
  sink.write("period.txt", table);
  rep.set("period.points", energies.size());
  rep.set("period.failed_points", failed);
  rep.set("period.max_abs_dT_T", span);
  rep.set("period.exact_vs_direct", worst_exact);
  rep.set("period.lowest_vs_direct", worst_lowest);
  const auto curve = frequency_shift_curve(pot, energies);
  rep.set("period.shift_min", curve.min_shift());
  rep.set("period.shift_max", curve.max_shift());
  if (pot.has_quartic()) {
    const double xm = cfg.ensemble.x_shift;
    rep.set("period.quartic_closed_form", -0.75 * (xm / pot.quartic_scale()) * (xm / pot.quartic_scale()));
  }
}

}  // namespace

Potential1D build_potential(const ExperimentConfig& cfg) {
  Potential1D pot = Potential1D::harmonic(cfg.params);
  switch (cfg.potential.corrugation) {
    case CorrugationSource::none:
      break;
    case CorrugationSource::synth:
      pot = pot.with_corrugation(synth_paper_corrugation(cfg.potential.corrugation_scale));
      break;
    case CorrugationSource::file: {
      auto grid = io::load_corrugation(cfg.potential.corrugation_file);
      for (double& v : grid.delta_u) v *= cfg.potential.corrugation_scale;
      pot = pot.with_corrugation(grid);
      break;
    }
  }
  if (cfg.potential.quartic_w > 0.0) pot = pot.with_quartic(cfg.potential.quartic_w);
  return pot;
}

RunResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  ArtifactSink sink(cfg.output_dir);
  RunResult result;
  report_header(result.report, cfg);
  switch (cfg.kind) {
    case ExperimentKind::classical_oscillation:
    case ExperimentKind::harmonic_control:
      run_classical(cfg, result.report, sink);
      break;
    case ExperimentKind::quantum_wigner:
      run_quantum_wigner(cfg, result.report, sink);
      break;
    case ExperimentKind::squeezing:
      run_squeezing(cfg, result.report, sink);
      break;
    case ExperimentKind::corrugation_scan:
      run_corrugation_scan(cfg, result.report, sink);
      break;
    case ExperimentKind::period_analysis:
      run_period_analysis(cfg, result.report, sink);
      break;
  }
  sink.write("report.txt", result.report.text());
  result.artifacts = sink.commit();
  return result;
}

}  // namespace phasetomo
