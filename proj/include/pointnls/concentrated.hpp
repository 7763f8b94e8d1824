#pragma once

// Strang-split spectral solver for i psi_t = -psi_xx + g(x) |psi|^2 psi with a
// sampled coupling density g.

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pointnls/error.hpp"
#include "pointnls/fft.hpp"
#include "pointnls/field.hpp"
#include "pointnls/free_flow.hpp"
#include "pointnls/grid.hpp"
#include "pointnls/measure.hpp"

namespace pointnls {

struct SplitStepConfig {
  double dealias = 2.0 / 3.0;         ///< kept fraction of the spectrum when sampling the trace
  std::size_t sample_stride = 0;      ///< keep every stride-th field (0: only the final one)
  double boundary_threshold = 1e-2;   ///< largest tolerated mass fraction in the outer strip
  bool track_sup = true;              ///< record sup |psi| at every node
  double dt_factor = 1.0;             ///< Strang steps are at most dt_factor * dx^2
  std::size_t substeps = 0;           ///< Strang steps per time-grid step (0: from dt_factor)

  /// Strang steps per time-grid step of length h on a grid with spacing dx.
  std::size_t substeps_for(double h, double dx) const {
    if (substeps > 0) return substeps;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(h / (dt_factor * dx * dx) - 1e-9)));
  }

  void validate() const {
    if (!(dealias > 0.0 && dealias <= 1.0)) throw Error(ErrorKind::validation, "dealias fraction must lie in (0, 1]");
    if (!(boundary_threshold > 0.0)) throw Error(ErrorKind::validation, "boundary threshold must be positive");
    if (!(dt_factor > 0.0)) throw Error(ErrorKind::validation, "dt factor must be positive");
  }
};

/// psi <- psi exp(-i g |psi|^2 dt), exact for the pointwise ODE.
inline void apply_phase(std::span<cplx> psi, std::span<const double> g, double dt) {
  for (std::size_t j = 0; j < psi.size(); ++j)
    if (g[j] != 0.0) psi[j] *= std::polar(1.0, -g[j] * std::norm(psi[j]) * dt);
}

/// One Strang step: half free step, exact phase step, half free step.
inline WaveField strang_step(const WaveField& f, std::span<const double> g, double dt) {
  if (g.size() != f.size()) throw Error(ErrorKind::incompatible_grids, "density and field sizes differ");
  const auto& grid = f.grid();
  auto c = f.coefficients();
  apply_free_multiplier(grid, c, 0.5 * dt);
  auto psi = fft::inverse(c);
  apply_phase(psi, g, dt);
  c = fft::forward(psi);
  apply_free_multiplier(grid, c, 0.5 * dt);
  return WaveField::from_coefficients(grid, c);
}

/// Stateful stepper that keeps the solution in Fourier space between steps.
class StrangStepper {
 public:
  StrangStepper(const WaveField& f0, std::vector<double> g, double dt)
      : grid_(f0.grid()), g_(std::move(g)), dt_(dt), c_(f0.coefficients()), half_(grid_.size()) {
    if (g_.size() != grid_.size()) throw Error(ErrorKind::incompatible_grids, "density and field sizes differ");
    if (!(dt > 0.0)) throw Error(ErrorKind::validation, "time step must be positive");
    for (std::size_t m = 0; m < half_.size(); ++m) {
      const double k = grid_.wavenumber(m);
      half_[m] = std::polar(1.0, -k * k * 0.5 * dt);
    }
  }

  void step() {
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] *= half_[m];
    auto psi = fft::inverse(c_);
    apply_phase(psi, g_, dt_);
    c_ = fft::forward(psi);
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] *= half_[m];
  }

  const std::vector<cplx>& coefficients() const noexcept { return c_; }
  WaveField field() const { return WaveField::from_coefficients(grid_, c_); }
  double mass() const { return mass_from_coefficients(grid_, c_); }

  /// Value at x = 0 of the field with modes above dealias * nyquist removed.
  cplx filtered_origin_value(double dealias) const {
    const double cut = dealias * grid_.nyquist();
    cplx s{};
    for (std::size_t m = 0; m < c_.size(); ++m) {
      if (std::abs(grid_.wavenumber(m)) > cut * (1.0 + 1e-12)) continue;
      // x = 0 is node n/2, where the phase of mode m is (-1)^m
      s += (m % 2 == 0) ? c_[m] : -c_[m];
    }
    return s / static_cast<double>(c_.size());
  }

 private:
  SpatialGrid grid_;
  std::vector<double> g_;
  double dt_;
  std::vector<cplx> c_;
  std::vector<cplx> half_;
};

struct ConcentratedRun {
  TimeGrid times{1.0, 1};
  std::vector<std::size_t> sample_nodes;
  std::vector<WaveField> samples;
  std::vector<cplx> origin_trace;      ///< dealiased psi(t_n, 0)
  std::vector<double> mass;            ///< per node
  std::vector<double> sup;             ///< per node (empty when not tracked)
  std::vector<double> boundary_mass;   ///< per sampled node
  double weighted_l4 = 0.0;            ///< int int |psi|^4 g dx dt (trapezoid in t)
  double weighted_l4_abs = 0.0;        ///< same with |g|
  double epsilon = 0.0;
  std::size_t substeps = 1;

  double mass_drift() const {
    double d = 0.0;
    for (double m : mass) d = std::max(d, std::abs(m - mass.front()));
    return mass.front() > 0.0 ? d / mass.front() : d;
  }
};

/// Evolves f0 on `times` with coupling density samples g. Fields are kept at
/// nodes that are multiples of cfg.sample_stride, and always at the two ends.
inline ConcentratedRun solve_concentrated(const WaveField& f0, const Density& g, const TimeGrid& times,
                                          const SplitStepConfig& cfg = {}) {
  cfg.validate();
  require_same_grid(f0.grid(), g.grid);
  if (g.epsilon < 4.0 * f0.grid().dx() * (1.0 - 1e-12))
    throw Error(ErrorKind::under_resolved_profile, "epsilon below 4 dx");
  ConcentratedRun run;
  run.times = times;
  run.epsilon = g.epsilon;
  const auto& grid = f0.grid();
  const std::size_t sub = cfg.substeps_for(times.dt(), grid.dx());
  StrangStepper st(f0, g.values, times.dt() / static_cast<double>(sub));
  run.substeps = sub;
  const std::size_t N = times.n_steps();

  const auto record = [&](std::size_t n) {
    run.mass.push_back(st.mass());
    run.origin_trace.push_back(st.filtered_origin_value(cfg.dealias));
    const bool sample = n == 0 || n == N || (cfg.sample_stride > 0 && n % cfg.sample_stride == 0);
    const auto f = st.field();
    double l4 = 0.0, l4a = 0.0;
    double mx = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double a2 = std::norm(f[j]);
      l4 += a2 * a2 * g.values[j];
      l4a += a2 * a2 * std::abs(g.values[j]);
      mx = std::max(mx, std::sqrt(a2));
    }
    if (cfg.track_sup) run.sup.push_back(mx);
    const double w = (n == 0 || n == N) ? 0.5 : 1.0;
    run.weighted_l4 += w * times.dt() * grid.dx() * l4;
    run.weighted_l4_abs += w * times.dt() * grid.dx() * l4a;
    if (sample) {
      const double bm = boundary_mass_fraction(f);
      run.boundary_mass.push_back(bm);
      run.sample_nodes.push_back(n);
      run.samples.push_back(f);
      if (bm > cfg.boundary_threshold)
        throw Error(ErrorKind::truncation_domain, "boundary mass fraction " + std::to_string(bm) + " at t = " +
                                                      std::to_string(times.t(n)) + " exceeds the threshold " +
                                                      std::to_string(cfg.boundary_threshold));
    }
  };
  record(0);
  for (std::size_t n = 1; n <= N; ++n) {
    for (std::size_t k = 0; k < sub; ++k) st.step();
    record(n);
  }
  return run;
}

/// One row of the epsilon study.
struct EpsilonRow {
  double epsilon = 0.0;
  double sup_l2_distance = 0.0;
  double mass_drift = 0.0;
  double boundary_mass = 0.0;
};

/// D(eps) = max over the reference sample nodes of ||psi_eps(t) - psi(t)||.
/// `reference[i]` is the reference field at node reference_nodes[i] of `times`.
/// With perturbation p > 0 the eps run starts from (1 + p eps) psi(0).
inline std::vector<EpsilonRow> eps_convergence_study(const WaveField& f0, const Profile& profile,
                                                     std::span<const double> eps_list, const TimeGrid& times,
                                                     std::span<const std::size_t> reference_nodes,
                                                     std::span<const WaveField> reference, SplitStepConfig cfg = {},
                                                     double perturbation = 0.0, std::size_t jobs = 1) {
  if (reference_nodes.size() != reference.size() || reference.empty())
    throw Error(ErrorKind::validation, "reference nodes and fields must match and be non-empty");
  for (const auto& r : reference) require_same_grid(r.grid(), f0.grid());
  for (auto n : reference_nodes)
    if (n > times.n_steps()) throw Error(ErrorKind::incompatible_grids, "reference node outside the time grid");
  // Sample exactly on the reference nodes.
  std::size_t stride = 0;
  for (auto n : reference_nodes) stride = std::gcd(stride, n);
  cfg.sample_stride = stride == 0 ? times.n_steps() : stride;

  const auto one = [&](double eps) {
    const auto g = sample_g_eps(profile, eps, f0.grid());
    WaveField start = f0;
    if (perturbation != 0.0) {
      std::vector<cplx> v(f0.values().begin(), f0.values().end());
      for (auto& x : v) x *= 1.0 + perturbation * eps;
      start = WaveField(f0.grid(), std::move(v));
    }
    const auto run = solve_concentrated(start, g, times, cfg);
    EpsilonRow row{eps, 0.0, run.mass_drift(), 0.0};
    for (std::size_t i = 0; i < reference_nodes.size(); ++i) {
      const auto it = std::find(run.sample_nodes.begin(), run.sample_nodes.end(), reference_nodes[i]);
      const auto& f = run.samples[static_cast<std::size_t>(it - run.sample_nodes.begin())];
      row.sup_l2_distance = std::max(row.sup_l2_distance, l2_distance(f, reference[i]));
    }
    for (double b : run.boundary_mass) row.boundary_mass = std::max(row.boundary_mass, b);
    return row;
  };

  std::vector<EpsilonRow> rows(eps_list.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) rows[i] = one(eps_list[i]);
    return rows;
  }
  for (std::size_t start = 0; start < eps_list.size(); start += jobs) {
    std::vector<std::future<EpsilonRow>> fut;
    for (std::size_t i = start; i < std::min(eps_list.size(), start + jobs); ++i)
      fut.push_back(std::async(std::launch::async, one, eps_list[i]));
    for (std::size_t i = 0; i < fut.size(); ++i) rows[start + i] = fut[i].get();
  }
  return rows;
}

}  // namespace pointnls
