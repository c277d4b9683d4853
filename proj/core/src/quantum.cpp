#include "phasetomo/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "phasetomo/error.hpp"
#include "phasetomo/parallel.hpp"

namespace phasetomo {

using constants::hbar;
using constants::pi;
using cplx = std::complex<double>;

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftBuffer {
 public:
  explicit FftBuffer(std::size_t n) : n_(n) {
    data_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!data_) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    const int ni = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(ni, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(ni, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftBuffer() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(backward_);
    }
    fftw_free(data_);
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(data_); }
  std::size_t size() const { return n_; }
  void forward() { fftw_execute(forward_); }
  // Unnormalized inverse.
  void backward() { fftw_execute(backward_); }

  void load(const std::vector<cplx>& v) { std::copy(v.begin(), v.end(), data()); }
  void store(std::vector<cplx>& v) const {
    const auto* p = reinterpret_cast<const cplx*>(data_);
    std::copy(p, p + n_, v.begin());
  }

 private:
  std::size_t n_;
  fftw_complex* data_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

void normalize(WaveFunction1D& w) {
  const double nrm = w.norm();
  if (!(nrm > 0.0)) throw InputError("wave function has zero norm");
  const double s = 1.0 / std::sqrt(nrm);
  for (auto& a : w.psi) a *= s;
}

void check_boundary(const WaveFunction1D& w) {
  const std::size_t n = w.size();
  const std::size_t edge = std::min<std::size_t>(4, n / 2);
  double p = 0.0;
  for (std::size_t i = 0; i < edge; ++i) p += std::norm(w.psi[i]) + std::norm(w.psi[n - 1 - i]);
  p *= w.dx();
  if (p > 1e-6) throw BoundaryError("wave packet reached the grid boundary (edge probability " + std::to_string(p) + ")");
}

}  // namespace

double WaveFunction1D::norm() const {
  double s = 0.0;
  for (const auto& a : psi) s += std::norm(a);
  return s * dx();
}

std::vector<double> WaveFunction1D::wavenumbers() const {
  const std::size_t n = psi.size();
  std::vector<double> k(n);
  const double dk = 2.0 * pi / (static_cast<double>(n) * dx());
  for (std::size_t l = 0; l < n; ++l) {
    const auto sl = l < (n + 1) / 2 ? static_cast<double>(l) : static_cast<double>(l) - static_cast<double>(n);
    k[l] = sl * dk;
  }
  return k;
}

void WaveFunction1D::validate() const {
  if (psi.size() < 2) throw InputError("wave function needs at least two grid points");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    throw InputError("wave function grid extent must be finite with x_min < x_max");
  }
  for (const auto& a : psi) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw InputError("wave function has non-finite values");
  }
}

double oscillator_length(const PhysicalParams& params) { return std::sqrt(hbar / (params.mass * params.omega0)); }

WaveFunction1D init_superposition(const PhysicalParams& params, double sigma, double k, std::size_t n, double x_min,
                                  double x_max, double x0) {
  params.validate();
  if (!(sigma > 0.0) || !std::isfinite(k) || n < 2 || !(x_max > x_min)) {
    throw InputError("init_superposition: bad arguments");
  }
  WaveFunction1D w{params, x_min, x_max, std::vector<cplx>(n), 0.0};
  if (x_max - x_min < 8.0 * sigma) throw GridError("init_superposition: grid spans less than 8 sigma");
  if (std::abs(k) * w.dx() >= pi / 4.0) throw GridError("init_superposition: grid does not resolve k (k dx >= pi/4)");
  for (std::size_t i = 0; i < n; ++i) {
    const double u = w.x(i) - x0;
    w.psi[i] = std::exp(-u * u / (2.0 * sigma * sigma)) * 2.0 * std::cos(k * u);
  }
  normalize(w);
  return w;
}

struct SplitStepper::Impl {
  explicit Impl(std::size_t n) : fft(n) {}
  FftBuffer fft;
  std::vector<cplx> kinetic_half;
  std::vector<cplx> potential;
};

SplitStepper::SplitStepper(const WaveFunction1D& shape, const Potential1D& pot, double dt)
    : impl_(std::make_unique<Impl>(shape.size())), dt_(dt) {
  shape.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("SplitStepper: dt must be > 0");
  const double m = shape.params.mass;
  const auto k = shape.wavenumbers();
  const double inv_n = 1.0 / static_cast<double>(shape.size());
  impl_->kinetic_half.resize(k.size());
  for (std::size_t l = 0; l < k.size(); ++l) {
    // The 1/n of the inverse transform is folded in here.
    impl_->kinetic_half[l] = std::polar(inv_n, -hbar * k[l] * k[l] * dt / (4.0 * m));
  }
  impl_->potential.resize(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    impl_->potential[i] = std::polar(1.0, -pot.eval(shape.x(i)).energy * dt / hbar);
  }
}

SplitStepper::~SplitStepper() = default;

void SplitStepper::advance(WaveFunction1D& psi, std::size_t n_steps) {
  auto& fft = impl_->fft;
  if (psi.size() != fft.size()) throw InputError("SplitStepper: grid size changed");
  cplx* d = fft.data();
  const std::size_t n = fft.size();
  fft.load(psi.psi);
  for (std::size_t s = 0; s < n_steps; ++s) {
    fft.forward();
    for (std::size_t l = 0; l < n; ++l) d[l] *= impl_->kinetic_half[l];
    fft.backward();
    for (std::size_t i = 0; i < n; ++i) d[i] *= impl_->potential[i];
    fft.forward();
    for (std::size_t l = 0; l < n; ++l) d[l] *= impl_->kinetic_half[l];
    fft.backward();
  }
  fft.store(psi.psi);
  psi.time += dt_ * static_cast<double>(n_steps);
  check_boundary(psi);
}

double split_step_phase(const WaveFunction1D& psi, const Potential1D& pot, double dt) {
  psi.validate();
  const std::size_t n = psi.size();
  double rho_max = 0.0;
  for (const auto& a : psi.psi) rho_max = std::max(rho_max, std::norm(a));
  double v_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::norm(psi.psi[i]) > 1e-10 * rho_max) v_max = std::max(v_max, std::abs(pot.eval(psi.x(i)).energy));
  }
  FftBuffer fft(n);
  fft.load(psi.psi);
  fft.forward();
  const cplx* d = fft.data();
  double spec_max = 0.0;
  for (std::size_t l = 0; l < n; ++l) spec_max = std::max(spec_max, std::norm(d[l]));
  const auto k = psi.wavenumbers();
  double t_max = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    if (std::norm(d[l]) > 1e-10 * spec_max) {
      t_max = std::max(t_max, hbar * hbar * k[l] * k[l] / (2.0 * psi.params.mass));
    }
  }
  return dt * (t_max + v_max) / hbar;
}

WaveFunction1D evolve_schrodinger(const WaveFunction1D& psi, const Potential1D& pot, double dt, double t_total) {
  psi.validate();
  if (!(dt > 0.0) || !(t_total >= 0.0) || !std::isfinite(t_total)) {
    throw InputError("evolve_schrodinger: need dt > 0 and t_total >= 0");
  }
  WaveFunction1D out = psi;
  if (t_total == 0.0) return out;
  const auto steps = static_cast<std::size_t>(std::ceil(t_total / dt - 1e-9));
  const double h = t_total / static_cast<double>(steps);
  const double phase = split_step_phase(psi, pot, h);
  if (phase >= 0.1) {
    throw InputError("evolve_schrodinger: step phase " + std::to_string(phase) + " rad exceeds 0.1; reduce dt");
  }
  SplitStepper stepper(psi, pot, h);
  // Advance in chunks so a boundary breach is caught before it wraps around.
  constexpr std::size_t chunk = 256;
  for (std::size_t done = 0; done < steps;) {
    const std::size_t m = std::min(chunk, steps - done);
    stepper.advance(out, m);
    done += m;
  }
  out.time = psi.time + t_total;
  return out;
}

WaveFunction1D free_flight(const WaveFunction1D& psi, double t) {
  psi.validate();
  if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("free_flight: t must be >= 0");
  WaveFunction1D out = psi;
  if (t == 0.0) return out;
  FftBuffer fft(psi.size());
  fft.load(psi.psi);
  fft.forward();
  const auto k = psi.wavenumbers();
  cplx* d = fft.data();
  const double inv_n = 1.0 / static_cast<double>(psi.size());
  for (std::size_t l = 0; l < k.size(); ++l) {
    d[l] *= std::polar(inv_n, -hbar * k[l] * k[l] * t / (2.0 * psi.params.mass));
  }
  fft.backward();
  fft.store(out.psi);
  out.time += t;
  return out;
}

PhaseSpaceGrid wigner_from_wavefunction(const WaveFunction1D& psi, double q_half, double p_half) {
  psi.validate();
  const std::size_t n = psi.size();
  const double dx = psi.dx();
  const double p_scale = psi.params.momentum_scale();
  // η = 2 m Δx makes the η-sum a length-n DFT with Δp = πħ/(nΔx).
  const double dpbar = pi * hbar / (static_cast<double>(n) * dx) / p_scale;
  const auto half_n = static_cast<std::ptrdiff_t>(n / 2);

  std::size_t iq_lo = 0;
  std::size_t iq_hi = n;
  if (q_half > 0.0) {
    iq_lo = n;
    iq_hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(psi.x(i)) <= q_half) {
        iq_lo = std::min(iq_lo, i);
        iq_hi = std::max(iq_hi, i + 1);
      }
    }
    if (iq_lo >= iq_hi) throw InputError("wigner_from_wavefunction: q window misses the grid");
  }
  std::ptrdiff_t l_lo = -half_n;
  std::ptrdiff_t l_hi = static_cast<std::ptrdiff_t>(n) - half_n;
  if (p_half > 0.0) {
    const auto lim = static_cast<std::ptrdiff_t>(std::floor(p_half / dpbar));
    l_lo = std::max(l_lo, -lim);
    l_hi = std::min(l_hi, lim + 1);
  }
  const std::size_t nq = iq_hi - iq_lo;
  const auto np = static_cast<std::size_t>(l_hi - l_lo);
  UniformAxis q_axis{psi.x(iq_lo) - 0.5 * dx, psi.x(iq_lo) + (static_cast<double>(nq) - 0.5) * dx, nq};
  UniformAxis p_axis{(static_cast<double>(l_lo) - 0.5) * dpbar, (static_cast<double>(l_hi) - 0.5) * dpbar, np};
  PhaseSpaceGrid out(q_axis, p_axis, true);

  // W dp̄ carries 2Δx/(2πħ)·(mω0) after the DFT.
  const double pref = 2.0 * dx / (2.0 * pi * hbar) * p_scale;
  std::vector<std::unique_ptr<FftBuffer>> buffers;
  const unsigned workers = std::max(1u, std::min<unsigned>(thread_count(), static_cast<unsigned>(nq)));
  for (unsigned w = 0; w < workers; ++w) buffers.push_back(std::make_unique<FftBuffer>(n));
  const std::size_t block = (nq + workers - 1) / workers;
  parallel_for(0, workers, [&](std::size_t w) {
    FftBuffer& fft = *buffers[w];
    cplx* d = fft.data();
    for (std::size_t r = w * block; r < std::min(nq, (w + 1) * block); ++r) {
      const auto i = static_cast<std::ptrdiff_t>(iq_lo + r);
      for (std::size_t slot = 0; slot < n; ++slot) {
        // slot holds offset m in FFT order.
        const auto m = slot < (n + 1) / 2 ? static_cast<std::ptrdiff_t>(slot)
                                          : static_cast<std::ptrdiff_t>(slot) - static_cast<std::ptrdiff_t>(n);
        const auto a = i - m;
        const auto b = i + m;
        if (a < 0 || b < 0 || a >= static_cast<std::ptrdiff_t>(n) || b >= static_cast<std::ptrdiff_t>(n)) {
          d[slot] = 0.0;
        } else {
          d[slot] = std::conj(psi.psi[static_cast<std::size_t>(a)]) * psi.psi[static_cast<std::size_t>(b)];
        }
      }
      fft.forward();
      for (auto l = l_lo; l < l_hi; ++l) {
        const auto slot = static_cast<std::size_t>(l < 0 ? l + static_cast<std::ptrdiff_t>(n) : l);
        out.at(r, static_cast<std::size_t>(l - l_lo)) = pref * d[slot].real();
      }
    }
  });
  return out;
}

std::vector<double> position_density(const WaveFunction1D& psi) {
  std::vector<double> rho(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi.psi[i]);
  return rho;
}

std::pair<std::vector<double>, std::vector<double>> momentum_density(const WaveFunction1D& psi) {
  psi.validate();
  const std::size_t n = psi.size();
  FftBuffer fft(n);
  fft.load(psi.psi);
  fft.forward();
  const auto k = psi.wavenumbers();
  const cplx* d = fft.data();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = (i + (n + 1) / 2) % n;
  std::vector<double> ks(n);
  std::vector<double> rho(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ks[i] = k[order[i]];
    rho[i] = std::norm(d[order[i]]);
    sum += rho[i];
  }
  const double dk = 2.0 * pi / (static_cast<double>(n) * psi.dx());
  for (double& r : rho) r /= sum * dk;
  return {ks, rho};
}

Uncertainties uncertainties(const WaveFunction1D& psi) {
  psi.validate();
  const auto rho = position_density(psi);
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    s0 += rho[i];
    s1 += rho[i] * psi.x(i);
  }
  const double mean_x = s1 / s0;
  for (std::size_t i = 0; i < psi.size(); ++i) s2 += rho[i] * (psi.x(i) - mean_x) * (psi.x(i) - mean_x);
  const auto [k, rk] = momentum_density(psi);
  double t0 = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  for (std::size_t l = 0; l < k.size(); ++l) {
    t0 += rk[l];
    t1 += rk[l] * k[l];
  }
  const double mean_k = t1 / t0;
  for (std::size_t l = 0; l < k.size(); ++l) t2 += rk[l] * (k[l] - mean_k) * (k[l] - mean_k);
  return {std::sqrt(s2 / s0), hbar * std::sqrt(t2 / t0), mean_x, hbar * mean_k};
}

Uncertainties uncertainties(const PhaseSpaceGrid& wigner, const PhysicalParams& params) {
  wigner.validate();
  std::vector<double> mq(wigner.nq(), 0.0);
  std::vector<double> mp(wigner.np(), 0.0);
  for (std::size_t ip = 0; ip < wigner.np(); ++ip) {
    for (std::size_t iq = 0; iq < wigner.nq(); ++iq) {
      mq[iq] += wigner.at(iq, ip);
      mp[ip] += wigner.at(iq, ip);
    }
  }
  auto moments = [](const std::vector<double>& m, const UniformAxis& ax) {
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      s0 += m[i];
      s1 += m[i] * ax.center(i);
    }
    if (!(s0 > 0.0)) throw InputError("uncertainties: marginal has no positive mass");
    const double mean = s1 / s0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s2 += m[i] * (ax.center(i) - mean) * (ax.center(i) - mean);
    return std::pair{mean, std::sqrt(std::max(0.0, s2 / s0))};
  };
  const auto [mx, sx] = moments(mq, wigner.q);
  const auto [mpb, spb] = moments(mp, wigner.p);
  const double scale = params.momentum_scale();
  return {sx, spb * scale, mx, mpb * scale};
}

TofGeometry tof_geometry(double omega, double t_f) {
  if (!(t_f >= 0.0) || !std::isfinite(t_f)) throw InputError("tof_map: t_f must be >= 0");
  const double a = omega * t_f;
  return {-std::atan(a), std::sqrt(1.0 + a * a)};
}

PhaseSpaceGrid tof_map(const PhaseSpaceGrid& grid, double omega, double t_f, TofGeometry* geometry) {
  const auto g = tof_geometry(omega, t_f);
  if (geometry) *geometry = g;
  grid.validate();
  const double a = omega * t_f;
  PhaseSpaceGrid out(grid.q, grid.p, grid.is_signed);
  parallel_for(0, grid.np(), [&](std::size_t ip) {
    const double pv = grid.p.center(ip);
    for (std::size_t iq = 0; iq < grid.nq(); ++iq) out.at(iq, ip) = grid.interpolate(grid.q.center(iq) - a * pv, pv);
  });
  return out;
}

WaveFunction1D tof_map(const WaveFunction1D& psi, double omega, double t_f, TofGeometry* geometry) {
  const auto g = tof_geometry(omega, t_f);
  if (geometry) *geometry = g;
  return free_flight(psi, t_f);
}

namespace {

// Mass of the density between a and b, from the piecewise-linear cumulative sum.
class CumulativeDensity {
 public:
  explicit CumulativeDensity(const WaveFunction1D& w) : x0_(w.x_min - 0.5 * w.dx()), dx_(w.dx()) {
    cum_.resize(w.size() + 1, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) cum_[i + 1] = cum_[i] + std::norm(w.psi[i]) * dx_;
  }
  double at(double x) const {
    const double f = (x - x0_) / dx_;
    if (f <= 0.0) return 0.0;
    const auto n = static_cast<double>(cum_.size() - 1);
    if (f >= n) return cum_.back();
    const auto i = static_cast<std::size_t>(f);
    return cum_[i] + (f - static_cast<double>(i)) * (cum_[i + 1] - cum_[i]);
  }

 private:
  double x0_;
  double dx_;
  std::vector<double> cum_;
};

}  // namespace

QuantumTomographyResult quantum_tomography(const WaveFunction1D& psi0, const Potential1D& pot,
                                           const QuantumTomographySettings& settings) {
  psi0.validate();
  if (settings.n_angles < 13) throw InputError("quantum_tomography: need at least 13 angles");
  if (!pot.is_harmonic()) throw InputError("quantum_tomography: hold potential must be harmonic");
  settings.projection_axis.validate();
  const double omega = pot.params().omega0;
  const auto geo = tof_geometry(omega, settings.t_f);
  const double alpha = -geo.theta_f;

  QuantumTomographyResult result;
  result.geometry = geo;
  result.sinogram.angles = uniform_angles(settings.n_angles);
  result.sinogram.x = settings.projection_axis;
  result.sinogram.values.assign(settings.n_angles * settings.projection_axis.n, 0.0);
  result.sinogram.normalized = true;
  result.hold_times.resize(settings.n_angles);

  const auto& ax = settings.projection_axis;
  parallel_for(0, settings.n_angles, [&](std::size_t j) {
    const double phi = result.sinogram.angles[j];
    // Hold rotation θ plus flight rotation α gives the projection angle φ (mod π).
    double hold = std::fmod(phi - alpha, pi);
    if (hold < 0.0) hold += pi;
    const bool mirrored = hold + alpha >= pi;
    const double t_hold = hold / omega;
    result.hold_times[j] = t_hold;
    WaveFunction1D held = psi0;
    if (t_hold > 0.0) {
      const auto steps = static_cast<std::size_t>(std::ceil(t_hold / settings.dt_max - 1e-9));
      SplitStepper stepper(psi0, pot, t_hold / static_cast<double>(steps));
      stepper.advance(held, steps);
    }
    const auto flown = free_flight(held, settings.t_f);
    check_boundary(flown);
    const CumulativeDensity cum(flown);
    auto row = result.sinogram.projection(j);
    for (std::size_t b = 0; b < ax.n; ++b) {
      // Projection cell [s0, s1] maps to [stretch·s0, stretch·s1] after flight,
      // or to its mirror image when the effective angle wrapped past π.
      double s0 = ax.center(b) - 0.5 * ax.step();
      double s1 = ax.center(b) + 0.5 * ax.step();
      if (mirrored) {
        const double t = -s1;
        s1 = -s0;
        s0 = t;
      }
      row[b] = std::max(0.0, cum.at(geo.stretch * s1) - cum.at(geo.stretch * s0)) / ax.step();
    }
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum > 0.0) {
      for (double& v : row) v /= sum * ax.step();
    }
  });

  const auto fbp = fbp_reconstruct(result.sinogram, settings.k_c, settings.q_axis, settings.p_axis);
  result.wigner = normalize_signed(fbp.raw);
  return result;
}

WignerFidelity wigner_fidelity(const PhaseSpaceGrid& w, const PhaseSpaceGrid& reference) {
  w.validate();
  reference.validate();
  std::vector<double> ref(w.values.size());
  for (std::size_t ip = 0; ip < w.np(); ++ip) {
    for (std::size_t iq = 0; iq < w.nq(); ++iq) {
      ref[ip * w.nq() + iq] = reference.interpolate(w.q.center(iq), w.p.center(ip));
    }
  }
  double sa = 0.0;
  double sb = 0.0;
  double ref_max = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    sa += std::abs(w.values[k]);
    sb += std::abs(ref[k]);
    ref_max = std::max(ref_max, std::abs(ref[k]));
  }
  if (!(sa > 0.0) || !(sb > 0.0)) throw InputError("wigner_fidelity: zero grid");
  double bc = 0.0;
  double diff2 = 0.0;
  double ref2 = 0.0;
  std::size_t strong = 0;
  std::size_t agree = 0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    bc += std::sqrt(std::abs(w.values[k]) / sa * std::abs(ref[k]) / sb);
    diff2 += (w.values[k] - ref[k]) * (w.values[k] - ref[k]);
    ref2 += ref[k] * ref[k];
    if (std::abs(ref[k]) > 0.1 * ref_max) {
      ++strong;
      if ((w.values[k] > 0.0) == (ref[k] > 0.0)) ++agree;
    }
  }
  return {bc, strong ? static_cast<double>(agree) / static_cast<double>(strong) : 1.0, std::sqrt(diff2 / ref2)};
}

std::vector<SqueezingSample> squeezing_scan(const WaveFunction1D& psi0, const Potential1D& pot, double dt,
                                            double t_end, std::size_t stride) {
  psi0.validate();
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw InputError("squeezing_scan: need dt > 0 and t_end >= 0");
  if (stride == 0) stride = 1;
  if (split_step_phase(psi0, pot, dt) >= 0.1) throw InputError("squeezing_scan: dt too large for the grid");
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  WaveFunction1D w = psi0;
  SplitStepper stepper(w, pot, dt);
  std::vector<SqueezingSample> out;
  auto record = [&] {
    const auto u = uncertainties(w);
    out.push_back({w.time - psi0.time, u.dx, u.dp, u.mean_x});
  };
  record();
  for (std::size_t done = 0; done < steps;) {
    const std::size_t m = std::min(stride, steps - done);
    stepper.advance(w, m);
    done += m;
    record();
  }
  return out;
}

double relative_l2_in_box(const PhaseSpaceGrid& w, const PhaseSpaceGrid& reference, double q_half, double p_half) {
  w.validate();
  reference.validate();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t ip = 0; ip < w.np(); ++ip) {
    const double pv = w.p.center(ip);
    if (std::abs(pv) >= p_half) continue;
    for (std::size_t iq = 0; iq < w.nq(); ++iq) {
      const double qv = w.q.center(iq);
      if (std::abs(qv) >= q_half) continue;
      const double ref = reference.interpolate(qv, pv);
      num += (w.at(iq, ip) - ref) * (w.at(iq, ip) - ref);
      den += ref * ref;
    }
  }
  if (!(den > 0.0)) throw InputError("relative_l2_in_box: reference vanishes inside the box");
  return std::sqrt(num / den);
}

double oscillation_period(const std::vector<SqueezingSample>& samples, double center) {
  std::vector<double> crossings;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double a = samples[i - 1].mean_x - center;
    const double b = samples[i].mean_x - center;
    if (a < 0.0 && b >= 0.0) {
      const double f = a / (a - b);
      crossings.push_back(samples[i - 1].t + f * (samples[i].t - samples[i - 1].t));
    }
  }
  if (crossings.size() < 2) throw DomainError("oscillation_period: fewer than two upward crossings");
  return (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

}  // namespace phasetomo

