#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>

#include "pointnls/error.hpp"

namespace pointnls {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Uniform periodic grid on [-L, L) standing in for the real line.
class SpatialGrid {
 public:
  SpatialGrid(double half_width, std::size_t n_points) : half_width_(half_width), n_(n_points) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw Error(ErrorKind::validation, "grid half_width must be positive, got " + std::to_string(half_width));
    if (n_points < 8 || !is_power_of_two(n_points))
      throw Error(ErrorKind::validation,
                  "grid n_points must be a power of two >= 8, got " + std::to_string(n_points));
  }

  double half_width() const noexcept { return half_width_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return 2.0 * half_width_ / static_cast<double>(n_); }
  double x(std::size_t j) const noexcept { return -half_width_ + static_cast<double>(j) * dx(); }
  double dk() const noexcept { return pi / half_width_; }

  /// Angular wavenumber of DFT bin m in standard FFT order. The Nyquist bin
  /// is reported as negative; callers that care about its sign treat it
  /// symmetrically.
  double wavenumber(std::size_t m) const noexcept {
    const auto n = static_cast<std::ptrdiff_t>(n_);
    auto mm = static_cast<std::ptrdiff_t>(m);
    if (mm >= n / 2) mm -= n;
    return static_cast<double>(mm) * dk();
  }

  bool is_nyquist(std::size_t m) const noexcept { return m == n_ / 2; }
  double nyquist() const noexcept { return pi / dx(); }

  bool contains(double x) const noexcept { return x >= -half_width_ && x < half_width_; }

  /// Grid index of x when x sits on a node (to relative tolerance), else nullopt.
  std::optional<std::size_t> node_of(double x, double rel_tol = 1e-12) const {
    const double j = (x + half_width_) / dx();
    const double r = std::round(j);
    if (std::abs(j - r) > rel_tol * std::max(1.0, std::abs(j))) return std::nullopt;
    if (r < 0.0 || r >= static_cast<double>(n_)) return std::nullopt;
    return static_cast<std::size_t>(r);
  }

  friend bool operator==(const SpatialGrid& a, const SpatialGrid& b) {
    return a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  double half_width_;
  std::size_t n_;
};

/// Uniform time nodes t_n = n*dt, n = 0..n_steps.
class TimeGrid {
 public:
  TimeGrid(double t_final, std::size_t n_steps) : t_final_(t_final), n_steps_(n_steps) {
    if (!(t_final > 0.0) || !std::isfinite(t_final))
      throw Error(ErrorKind::validation, "t_final must be positive, got " + std::to_string(t_final));
    if (n_steps == 0) throw Error(ErrorKind::validation, "n_steps must be >= 1");
  }

  /// Grid with prescribed step; t_final/h must be an integer.
  static TimeGrid with_step(double t_final, double h) {
    const double steps = t_final / h;
    const double r = std::round(steps);
    if (!(h > 0.0) || r < 1.0 || std::abs(steps - r) > 1e-9 * r)
      throw Error(ErrorKind::validation, "t_final " + std::to_string(t_final) +
                                             " is not an integer multiple of step " + std::to_string(h));
    return TimeGrid(t_final, static_cast<std::size_t>(r));
  }

  double t_final() const noexcept { return t_final_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t n_nodes() const noexcept { return n_steps_ + 1; }
  double dt() const noexcept { return t_final_ / static_cast<double>(n_steps_); }
  double t(std::size_t n) const noexcept {
    return t_final_ * static_cast<double>(n) / static_cast<double>(n_steps_);
  }

  std::optional<std::size_t> node_of(double t, double rel_tol = 1e-10) const {
    const double j = t / dt();
    const double r = std::round(j);
    if (std::abs(j - r) > rel_tol * std::max(1.0, std::abs(j))) return std::nullopt;
    if (r < 0.0 || r > static_cast<double>(n_steps_)) return std::nullopt;
    return static_cast<std::size_t>(r);
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.n_steps_ == b.n_steps_ && a.t_final_ == b.t_final_;
  }

 private:
  double t_final_;
  std::size_t n_steps_;
};

}  // namespace pointnls
