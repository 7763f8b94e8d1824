#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pointnls/error.hpp"
#include "pointnls/fft.hpp"
#include "pointnls/grid.hpp"

namespace pointnls {

/// Samples of psi(t, .) on a periodic grid. Immutable once built.
class WaveField {
 public:
  WaveField(SpatialGrid grid, std::vector<cplx> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw Error(ErrorKind::invalid_field, "field has " + std::to_string(values_.size()) +
                                                " samples but grid has " + std::to_string(grid_.size()));
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw Error(ErrorKind::invalid_field, "field contains non-finite samples");
  }

  static WaveField zeros(SpatialGrid grid) { return WaveField(grid, std::vector<cplx>(grid.size())); }

  template <class Fn>
  static WaveField sample(SpatialGrid grid, Fn&& fn) {
    std::vector<cplx> v(grid.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = fn(grid.x(j));
    return WaveField(grid, std::move(v));
  }

  const SpatialGrid& grid() const noexcept { return grid_; }
  std::span<const cplx> values() const noexcept { return values_; }
  const cplx& operator[](std::size_t j) const noexcept { return values_[j]; }
  std::size_t size() const noexcept { return values_.size(); }

  /// DFT coefficients c_m = sum_j psi_j exp(-2 pi i m j / n).
  std::vector<cplx> coefficients() const { return fft::forward(values_); }

  static WaveField from_coefficients(SpatialGrid grid, std::span<const cplx> coeffs) {
    return WaveField(grid, fft::inverse(coeffs));
  }

 private:
  SpatialGrid grid_;
  std::vector<cplx> values_;
};

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b) {
  if (!(a == b))
    throw Error(ErrorKind::incompatible_grids,
                "grids differ (L=" + std::to_string(a.half_width()) + ", n=" + std::to_string(a.size()) +
                    " vs L=" + std::to_string(b.half_width()) + ", n=" + std::to_string(b.size()) + ")");
}

/// M[psi] = integral |psi|^2 dx, as dx * sum |psi_j|^2.
inline double mass(const WaveField& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return f.grid().dx() * s;
}

/// Mass computed from DFT coefficients (Parseval).
inline double mass_from_coefficients(const SpatialGrid& grid, std::span<const cplx> coeffs) {
  double s = 0.0;
  for (const auto& c : coeffs) s += std::norm(c);
  return grid.dx() * s / static_cast<double>(grid.size());
}

inline double l2_norm(const WaveField& f) { return std::sqrt(mass(f)); }

inline double l2_distance(const WaveField& f, const WaveField& g) {
  require_same_grid(f.grid(), g.grid());
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += std::norm(f[j] - g[j]);
  return std::sqrt(f.grid().dx() * s);
}

inline double sup_norm(const WaveField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Trigonometric interpolant of a grid field, evaluable anywhere in [-L, L).
class BandLimited {
 public:
  explicit BandLimited(const WaveField& f) : grid_(f.grid()), coeffs_(f.coefficients()) {}
  BandLimited(SpatialGrid grid, std::vector<cplx> coeffs) : grid_(grid), coeffs_(std::move(coeffs)) {}

  cplx operator()(double x) const {
    const std::size_t n = grid_.size();
    const double y = x + grid_.half_width();
    const double step = grid_.dk() * y;
    // Positive and negative bins are summed with a reseeded phase recurrence.
    cplx acc = coeffs_[0];
    const cplx base = std::polar(1.0, step);
    cplx w(1.0, 0.0);
    for (std::size_t m = 1; m < n / 2; ++m) {
      w = (m % 64 == 0) ? std::polar(1.0, step * static_cast<double>(m)) : w * base;
      acc += coeffs_[m] * w + coeffs_[n - m] * std::conj(w);
    }
    acc += coeffs_[n / 2] * std::cos(grid_.nyquist() * y);
    return acc / static_cast<double>(n);
  }

  const SpatialGrid& grid() const noexcept { return grid_; }
  std::span<const cplx> coefficients() const noexcept { return coeffs_; }

 private:
  SpatialGrid grid_;
  std::vector<cplx> coeffs_;
};

/// Band-limited point evaluation; exact at nodes.
inline cplx evaluate(const WaveField& f, double x) {
  if (!f.grid().contains(x))
    throw Error(ErrorKind::domain, "evaluation point " + std::to_string(x) + " outside [-L, L)");
  if (auto j = f.grid().node_of(x)) return f[*j];
  return BandLimited(f)(x);
}

/// x -> sqrt(lambda) f(lambda x) on the same grid. Points whose preimage
/// leaves [-L, L) are set to zero (the field is taken to vanish outside the
/// truncated domain). Cost is O(n^2).
inline WaveField rescale(const WaveField& f, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorKind::domain, "rescale factor must be positive, got " + std::to_string(lambda));
  if (lambda == 1.0) return f;
  const BandLimited interp(f);
  const auto& grid = f.grid();
  std::vector<cplx> out(grid.size());
  const double amp = std::sqrt(lambda);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double y = lambda * grid.x(j);
    if (!grid.contains(y)) continue;
    if (auto node = grid.node_of(y))
      out[j] = amp * f[*node];
    else
      out[j] = amp * interp(y);
  }
  return WaveField(grid, std::move(out));
}

/// Largest |psi| over the outer strip |x| >= (1 - strip) L.
inline double boundary_amplitude(const WaveField& f, double strip = 0.05) {
  const auto& g = f.grid();
  const double edge = (1.0 - strip) * g.half_width();
  double m = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    if (std::abs(g.x(j)) >= edge) m = std::max(m, std::abs(f[j]));
  return m;
}

/// Fraction of the mass held in the outer strip |x| >= (1 - strip) L.
inline double boundary_mass_fraction(const WaveField& f, double strip = 0.05) {
  const auto& g = f.grid();
  const double edge = (1.0 - strip) * g.half_width();
  double outer = 0.0, total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double w = std::norm(f[j]);
    total += w;
    if (std::abs(g.x(j)) >= edge) outer += w;
  }
  return total > 0.0 ? outer / total : 0.0;
}

/// DFT coefficients of the grid delta at x_a, i.e. of the band-limited
/// function whose unitary transform is (2 pi)^{-1/2} exp(-i k x_a).
inline std::vector<cplx> delta_coefficients(const SpatialGrid& grid, double x_a) {
  const std::size_t n = grid.size();
  const double y = x_a + grid.half_width();
  const double inv_dx = 1.0 / grid.dx();
  std::vector<cplx> c(n);
  for (std::size_t m = 0; m < n; ++m) {
    if (grid.is_nyquist(m))
      c[m] = inv_dx * std::cos(grid.nyquist() * y);
    else
      c[m] = inv_dx * std::polar(1.0, -grid.wavenumber(m) * y);
  }
  return c;
}

}  // namespace pointnls
