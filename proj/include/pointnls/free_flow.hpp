#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pointnls/error.hpp"
#include "pointnls/fft.hpp"
#include "pointnls/field.hpp"
#include "pointnls/grid.hpp"

namespace pointnls {

/// Multiplies DFT coefficients by exp(-i k^2 t) in place.
inline void apply_free_multiplier(const SpatialGrid& grid, std::span<cplx> coeffs, double t) {
  for (std::size_t m = 0; m < coeffs.size(); ++m) {
    const double k = grid.wavenumber(m);
    coeffs[m] *= std::polar(1.0, -k * k * t);
  }
}

/// e^{i t d_xx} f, exact on the grid's trigonometric polynomials.
inline WaveField evolve_free(const WaveField& f, double t) {
  if (t == 0.0) return f;
  auto c = f.coefficients();
  apply_free_multiplier(f.grid(), c, t);
  return WaveField::from_coefficients(f.grid(), c);
}

/// k(t, x) = (4 pi |t|)^{-1/2} exp(i x^2 / (4t) - i pi/4 sign t).
inline cplx kernel_at(double t, double x) {
  if (t == 0.0 || !std::isfinite(t)) throw Error(ErrorKind::singular_kernel, "kernel evaluated at t = 0");
  const double sgn = t > 0.0 ? 1.0 : -1.0;
  return std::polar(1.0 / std::sqrt(4.0 * pi * std::abs(t)), x * x / (4.0 * t) - sgn * pi / 4.0);
}

/// Values of e^{i t d_xx} f0 at x0 for each of the given times.
inline std::vector<cplx> free_trace(const WaveField& f0, std::span<const double> times, double x0) {
  const auto& grid = f0.grid();
  if (!grid.contains(x0)) throw Error(ErrorKind::domain, "trace point " + std::to_string(x0) + " outside [-L, L)");
  const std::size_t n = grid.size();
  const auto c = f0.coefficients();
  const double y = x0 + grid.half_width();
  std::vector<cplx> d(n);
  std::vector<double> k2(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double k = grid.wavenumber(m);
    k2[m] = k * k;
    d[m] = grid.is_nyquist(m) ? c[m] * std::cos(grid.nyquist() * y) : c[m] * std::polar(1.0, k * y);
    d[m] /= static_cast<double>(n);
  }
  std::vector<cplx> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    cplx s{};
    for (std::size_t m = 0; m < n; ++m) s += d[m] * std::polar(1.0, -k2[m] * times[i]);
    out[i] = s;
  }
  return out;
}

inline std::vector<double> node_times(const TimeGrid& times) {
  std::vector<double> t(times.n_nodes());
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = times.t(n);
  return t;
}

inline std::vector<cplx> free_trace(const WaveField& f0, const TimeGrid& times, double x0) {
  const auto t = node_times(times);
  return free_trace(f0, std::span<const double>(t), x0);
}

/// Windowed L^4_t C_x norm of the free evolution.
struct L4NormResult {
  double norm = 0.0;           ///< (window integral)^{1/4}
  double window_integral = 0.0;
  double tail_estimate = 0.0;  ///< power-law extrapolation of the integral beyond the window
  double decay_exponent = 0.0; ///< p in sup_x |psi(t)| ~ t^{-p} over the last tenth of the window
};

/// Trapezoid quadrature in time of (sup_x |e^{it d_xx} f0|)^4 on the nodes of
/// `times`, each step subdivided `time_refine` times. The sup over x is taken
/// on the grid oversampled `space_refine` times by zero padding.
inline L4NormResult linear_l4c_norm(const WaveField& f0, const TimeGrid& times, std::size_t time_refine = 1,
                                    std::size_t space_refine = 1) {
  if (time_refine == 0 || space_refine == 0 || !is_power_of_two(space_refine))
    throw Error(ErrorKind::validation, "refinement factors must be positive (space: power of two)");
  const auto& grid = f0.grid();
  const std::size_t n = grid.size();
  const std::size_t nn = n * space_refine;
  const auto c = f0.coefficients();
  const TimeGrid fine(times.t_final(), times.n_steps() * time_refine);

  std::vector<cplx> padded(nn);
  std::vector<double> sup(fine.n_nodes());
  for (std::size_t i = 0; i < fine.n_nodes(); ++i) {
    std::fill(padded.begin(), padded.end(), cplx{});
    const double t = fine.t(i);
    for (std::size_t m = 0; m < n; ++m) {
      const double k = grid.wavenumber(m);
      const cplx v = c[m] * std::polar(1.0, -k * k * t);
      if (grid.is_nyquist(m) && space_refine > 1) {
        padded[n / 2] += 0.5 * v;
        padded[nn - n / 2] += 0.5 * v;
      } else {
        padded[m < n / 2 ? m : nn - (n - m)] += v;
      }
    }
    // Zero padding puts the oversampled grid at the same origin -L.
    const auto vals = fft::inverse(padded);
    double mx = 0.0;
    for (const auto& v : vals) mx = std::max(mx, std::abs(v));
    sup[i] = mx * static_cast<double>(space_refine);
  }

  L4NormResult r;
  const double dt = fine.dt();
  for (std::size_t i = 0; i < sup.size(); ++i) {
    const double w = (i == 0 || i + 1 == sup.size()) ? 0.5 * dt : dt;
    r.window_integral += w * std::pow(sup[i], 4);
  }
  r.norm = std::pow(r.window_integral, 0.25);

  const std::size_t first = sup.size() - std::max<std::size_t>(2, sup.size() / 10);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t i = std::max<std::size_t>(first, 1); i < sup.size(); ++i) {
    if (!(sup[i] > 0.0)) continue;
    const double lx = std::log(fine.t(i)), ly = std::log(sup[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  if (cnt >= 2 && sxx * static_cast<double>(cnt) - sx * sx > 0.0) {
    const double slope = (static_cast<double>(cnt) * sxy - sx * sy) / (static_cast<double>(cnt) * sxx - sx * sx);
    r.decay_exponent = -slope;
    const double p4 = 4.0 * r.decay_exponent;
    const double t_end = fine.t_final();
    if (p4 > 1.0) r.tail_estimate = std::pow(sup.back(), 4) * t_end / (p4 - 1.0);
  }
  return r;
}

/// Writes a complex series as CSV with columns t, re, im.
inline void write_series_csv(const std::string& path, std::span<const double> times, std::span<const cplx> values) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.precision(17);
  out << "t,re,im\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    out << times[i] << ',' << values[i].real() << ',' << values[i].imag() << '\n';
}

}  // namespace pointnls
