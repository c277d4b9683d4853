#include "phasetomo/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "phasetomo/error.hpp"

namespace phasetomo::io {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& context) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw IoError(context + ": cannot parse number '" + token + "'");
  return v;
}

namespace {

std::uint64_t parse_u64(const std::string& token, const std::string& context) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw IoError(context + ": cannot parse integer '" + token + "'");
  }
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Value after `key=` inside a whitespace-separated header.
std::string header_field(const std::vector<std::string>& toks, const std::string& key, const std::string& ctx) {
  for (const auto& t : toks) {
    if (t.rfind(key + "=", 0) == 0) return t.substr(key.size() + 1);
  }
  throw IoError(ctx + ": header lacks " + key + "=");
}

}  // namespace

std::string format_corrugation(const CorrugationGrid& grid) {
  grid.validate();
  std::string out = "# x_meters\tdeltaU_joules\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += format_double(grid.x[i]) + "\t" + format_double(grid.delta_u[i]) + "\n";
  }
  return out;
}

CorrugationGrid parse_corrugation(const std::string& text) {
  CorrugationGrid grid;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    const auto toks = split_ws(s);
    const std::string ctx = "corrugation line " + std::to_string(lineno);
    if (toks.size() != 2) throw IoError(ctx + ": expected two columns");
    grid.x.push_back(parse_double(toks[0], ctx));
    grid.delta_u.push_back(parse_double(toks[1], ctx));
  }
  try {
    grid.validate();
  } catch (const InputError& e) {
    throw IoError(std::string("corrugation file: ") + e.what());
  }
  return grid;
}

void save_corrugation(const fs::path& path, const CorrugationGrid& grid) { write_atomic(path, format_corrugation(grid)); }
CorrugationGrid load_corrugation(const fs::path& path) { return parse_corrugation(read_file(path)); }

std::string format_ensemble(const Ensemble& ens) {
  ens.validate();
  std::string out = "# N=" + std::to_string(ens.size()) + " t=" + format_double(ens.time) +
                    " seed=" + std::to_string(ens.seed) + "\n";
  out += "# draws=" + std::to_string(ens.draws) + " collision_steps=" + std::to_string(ens.collision_steps) + "\n";
  for (std::size_t i = 0; i < ens.size(); ++i) {
    out += format_double(ens.x[i]) + "\t" + format_double(ens.p[i]) + "\t" + format_double(ens.e_perp[i]) + "\n";
  }
  return out;
}

Ensemble parse_ensemble(const std::string& text, const PhysicalParams& params) {
  Ensemble ens;
  ens.params = params;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t expected = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = strip(line);
    if (s.empty()) continue;
    const std::string ctx = "ensemble line " + std::to_string(lineno);
    if (s[0] == '#') {
      const auto toks = split_ws(s.substr(1));
      if (!have_header && !toks.empty() && toks[0].rfind("N=", 0) == 0) {
        expected = parse_u64(header_field(toks, "N", ctx), ctx);
        ens.time = parse_double(header_field(toks, "t", ctx), ctx);
        ens.seed = parse_u64(header_field(toks, "seed", ctx), ctx);
        have_header = true;
      } else if (!toks.empty() && toks[0].rfind("draws=", 0) == 0) {
        ens.draws = parse_u64(header_field(toks, "draws", ctx), ctx);
        ens.collision_steps = parse_u64(header_field(toks, "collision_steps", ctx), ctx);
      }
      continue;
    }
    const auto toks = split_ws(s);
    if (toks.size() != 3) throw IoError(ctx + ": expected three columns");
    ens.x.push_back(parse_double(toks[0], ctx));
    ens.p.push_back(parse_double(toks[1], ctx));
    ens.e_perp.push_back(parse_double(toks[2], ctx));
  }
  if (!have_header) throw IoError("ensemble file: missing '# N=... t=... seed=...' header");
  if (ens.size() != expected) throw IoError("ensemble file: header N does not match row count");
  try {
    ens.validate();
  } catch (const InputError& e) {
    throw IoError(std::string("ensemble file: ") + e.what());
  }
  return ens;
}

void save_ensemble(const fs::path& path, const Ensemble& ens) { write_atomic(path, format_ensemble(ens)); }
Ensemble load_ensemble(const fs::path& path, const PhysicalParams& params) {
  return parse_ensemble(read_file(path), params);
}

std::string format_sinogram(const Sinogram& sino) {
  sino.validate();
  std::string out = "PSSINO1 " + std::to_string(sino.n_angles()) + " " + std::to_string(sino.x.n) + " " +
                    format_double(sino.x.min) + " " + format_double(sino.x.max) + "\n";
  for (std::size_t i = 0; i < sino.n_angles(); ++i) {
    out += "theta=" + format_double(sino.angles[i]) + "\n";
    const auto row = sino.projection(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ' ';
      out += format_double(row[j]);
    }
    out += "\n";
  }
  return out;
}

Sinogram parse_sinogram(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  if (!(in >> tok) || tok != "PSSINO1") throw IoError("sinogram file: missing PSSINO1 magic");
  std::string sa, sn, smin, smax;
  if (!(in >> sa >> sn >> smin >> smax)) throw IoError("sinogram file: truncated header");
  const auto n_angles = parse_u64(sa, "sinogram header");
  const auto n_x = parse_u64(sn, "sinogram header");
  Sinogram sino;
  sino.x = {parse_double(smin, "sinogram header"), parse_double(smax, "sinogram header"), n_x};
  for (std::uint64_t i = 0; i < n_angles; ++i) {
    if (!(in >> tok) || tok.rfind("theta=", 0) != 0) throw IoError("sinogram file: expected theta= line");
    sino.angles.push_back(parse_double(tok.substr(6), "sinogram theta"));
    for (std::uint64_t j = 0; j < n_x; ++j) {
      if (!(in >> tok)) throw IoError("sinogram file: truncated projection");
      sino.values.push_back(parse_double(tok, "sinogram value"));
    }
  }
  if (in >> tok) throw IoError("sinogram file: trailing data");
  sino.normalized = true;
  for (std::size_t i = 0; i < sino.n_angles(); ++i) {
    double sum = 0.0;
    for (double v : sino.projection(i)) sum += v;
    if (std::abs(sum * sino.x.step() - 1.0) > 1e-6) sino.normalized = false;
  }
  try {
    sino.validate();
  } catch (const InputError& e) {
    throw IoError(std::string("sinogram file: ") + e.what());
  }
  return sino;
}

void save_sinogram(const fs::path& path, const Sinogram& sino) { write_atomic(path, format_sinogram(sino)); }
Sinogram load_sinogram(const fs::path& path) { return parse_sinogram(read_file(path)); }

std::string format_grid(const PhaseSpaceGrid& grid) {
  grid.validate();
  std::string out = "PSGRID1 " + std::to_string(grid.nq()) + " " + std::to_string(grid.np()) + " " +
                    format_double(grid.q.min) + " " + format_double(grid.q.max) + " " + format_double(grid.p.min) +
                    " " + format_double(grid.p.max) + "\n";
  const std::size_t offset = out.size();
  out.resize(offset + grid.values.size() * 8);
  for (std::size_t k = 0; k < grid.values.size(); ++k) {
    auto bits = std::bit_cast<std::uint64_t>(grid.values[k]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(out.data() + offset + 8 * k, &bits, 8);
  }
  return out;
}

PhaseSpaceGrid parse_grid(const std::string& bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos) throw IoError("grid file: missing header line");
  const auto toks = split_ws(bytes.substr(0, eol));
  if (toks.size() != 7 || toks[0] != "PSGRID1") throw IoError("grid file: bad PSGRID1 header");
  const auto nq = parse_u64(toks[1], "grid header");
  const auto np = parse_u64(toks[2], "grid header");
  UniformAxis q{parse_double(toks[3], "grid header"), parse_double(toks[4], "grid header"), nq};
  UniformAxis p{parse_double(toks[5], "grid header"), parse_double(toks[6], "grid header"), np};
  const std::size_t count = nq * np;
  if (bytes.size() - eol - 1 != count * 8) throw IoError("grid file: payload size does not match header");
  PhaseSpaceGrid grid;
  try {
    grid = PhaseSpaceGrid(q, p, false);
  } catch (const InputError& e) {
    throw IoError(std::string("grid file: ") + e.what());
  }
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes.data() + eol + 1 + 8 * k, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    grid.values[k] = std::bit_cast<double>(bits);
    if (grid.values[k] < 0.0) grid.is_signed = true;
  }
  try {
    grid.validate();
  } catch (const InputError& e) {
    throw IoError(std::string("grid file: ") + e.what());
  }
  return grid;
}

void save_grid(const fs::path& path, const PhaseSpaceGrid& grid) { write_atomic(path, format_grid(grid)); }
PhaseSpaceGrid load_grid(const fs::path& path) { return parse_grid(read_file(path)); }

std::string format_wavefunction(const WaveFunction1D& psi) {
  psi.validate();
  std::string out = "PSWF1 " + std::to_string(psi.size()) + " " + format_double(psi.x_min) + " " +
                    format_double(psi.x_max) + " " + format_double(psi.time) + "\n";
  for (const auto& a : psi.psi) out += format_double(a.real()) + "\t" + format_double(a.imag()) + "\n";
  return out;
}

WaveFunction1D parse_wavefunction(const std::string& text, const PhysicalParams& params) {
  std::istringstream in(text);
  std::string magic, sn, smin, smax, st;
  if (!(in >> magic) || magic != "PSWF1") throw IoError("wave function file: missing PSWF1 magic");
  if (!(in >> sn >> smin >> smax >> st)) throw IoError("wave function file: truncated header");
  WaveFunction1D psi;
  psi.params = params;
  const auto n = parse_u64(sn, "wave function header");
  psi.x_min = parse_double(smin, "wave function header");
  psi.x_max = parse_double(smax, "wave function header");
  psi.time = parse_double(st, "wave function header");
  psi.psi.reserve(n);
  std::string re, im;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!(in >> re >> im)) throw IoError("wave function file: truncated data");
    psi.psi.emplace_back(parse_double(re, "wave function value"), parse_double(im, "wave function value"));
  }
  if (in >> re) throw IoError("wave function file: trailing data");
  try {
    psi.validate();
  } catch (const InputError& e) {
    throw IoError(std::string("wave function file: ") + e.what());
  }
  return psi;
}

void save_wavefunction(const fs::path& path, const WaveFunction1D& psi) {
  write_atomic(path, format_wavefunction(psi));
}
WaveFunction1D load_wavefunction(const fs::path& path, const PhysicalParams& params) {
  return parse_wavefunction(read_file(path), params);
}

std::string format_profile(const UniformAxis& x, const std::vector<double>& values) {
  if (values.size() != x.n) throw InputError("format_profile: size mismatch");
  std::string out = "# x_meters\tdensity\n";
  for (std::size_t j = 0; j < x.n; ++j) out += format_double(x.center(j)) + "\t" + format_double(values[j]) + "\n";
  return out;
}

void save_profile(const fs::path& path, const UniformAxis& x, const std::vector<double>& values) {
  write_atomic(path, format_profile(x, values));
}

namespace {

std::string pgm(std::size_t w, std::size_t h, const std::string& comment,
                const std::function<unsigned char(std::size_t, std::size_t)>& pixel) {
  std::string out = "P5\n# " + comment + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + w * h);
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) out.push_back(static_cast<char>(pixel(col, h - 1 - row)));
  }
  return out;
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::clamp(std::lround(255.0 * v), 0L, 255L));
}

}  // namespace

std::string format_pgm(const DensityImage& img) {
  img.validate();
  const double vmax = peak_value(img);
  const double scale = vmax > 0.0 ? 1.0 / vmax : 0.0;
  const std::string comment = "pixel_m=" + format_double(img.pixel()) + " od_per_level=" + format_double(vmax / 255.0);
  return pgm(img.x.n, img.y.n, comment, [&](std::size_t ix, std::size_t iy) { return to_byte(img.at(ix, iy) * scale); });
}

std::string format_pgm(const PhaseSpaceGrid& grid) {
  grid.validate();
  double amax = 0.0;
  for (double v : grid.values) amax = std::max(amax, std::abs(v));
  const double scale = amax > 0.0 ? 1.0 / amax : 0.0;
  const std::string comment = "dq_m=" + format_double(grid.q.step()) + " dp_m=" + format_double(grid.p.step()) +
                              (grid.is_signed ? " signed zero=128" : "") +
                              " value_per_level=" + format_double(amax / (grid.is_signed ? 127.5 : 255.0));
  return pgm(grid.nq(), grid.np(), comment, [&](std::size_t iq, std::size_t ip) {
    const double v = grid.at(iq, ip) * scale;
    return to_byte(grid.is_signed ? 0.5 * (v + 1.0) : v);
  });
}

void save_pgm(const fs::path& path, const DensityImage& img) { write_atomic(path, format_pgm(img)); }
void save_pgm(const fs::path& path, const PhaseSpaceGrid& grid) { write_atomic(path, format_pgm(grid)); }

}  // namespace phasetomo::io
