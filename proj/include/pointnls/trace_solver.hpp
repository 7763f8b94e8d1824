#pragma once

// Boundary-trace formulation for mu = sum_j c_j delta_{x_j}:
//   phi_i(t) = a_i(t) - i sum_j c_j int_0^t k(t - s, x_i - x_j) F_j(s) ds,
//   F_j = |phi_j|^2 phi_j,  a_i(t) = (e^{it d_xx} psi_0)(x_i).

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pointnls/abel.hpp"
#include "pointnls/data.hpp"
#include "pointnls/error.hpp"
#include "pointnls/field.hpp"
#include "pointnls/free_flow.hpp"
#include "pointnls/grid.hpp"
#include "pointnls/history.hpp"
#include "pointnls/measure.hpp"

namespace pointnls {

/// (4 pi)^{-1/2} e^{-i pi/4}: k(t, 0) = diagonal_phase() / sqrt(t) for t > 0.
inline cplx diagonal_phase() { return std::polar(1.0 / std::sqrt(4.0 * pi), -pi / 4.0); }

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 200;
  bool fast_history = false;
  int start_order = 2;  ///< singular starting terms corrected (0 disables)
  int max_halvings = 10;
};

/// phi_j at the nodes of a time grid. Node n sits at origin + direction * t_n.
struct BoundaryTrace {
  TimeGrid grid{1.0, 1};
  double origin = 0.0;
  int direction = 1;
  std::vector<double> locations;
  std::vector<std::vector<cplx>> values;  ///< values[atom][node]
  int start_order = 2;
  std::size_t total_iterations = 0;
  std::size_t max_iterations_per_step = 0;

  std::size_t n_atoms() const noexcept { return values.size(); }
  std::size_t n_nodes() const noexcept { return grid.n_nodes(); }
  double time(std::size_t n) const { return origin + direction * grid.t(n); }
  std::span<const cplx> series(std::size_t atom) const { return values.at(atom); }

  static BoundaryTrace zeros(const TimeGrid& grid, std::vector<double> locations) {
    BoundaryTrace tr;
    tr.grid = grid;
    tr.values.assign(locations.size(), std::vector<cplx>(grid.n_nodes()));
    tr.locations = std::move(locations);
    return tr;
  }

  /// F_j = |phi_j|^2 phi_j at node n.
  cplx nonlinear(std::size_t atom, std::size_t n) const {
    const cplx v = values[atom][n];
    return std::norm(v) * v;
  }
};

inline double trace_sup_distance(const BoundaryTrace& a, const BoundaryTrace& b, std::size_t stride_a = 1,
                                 std::size_t stride_b = 1) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.n_atoms(); ++i)
    for (std::size_t n = 0; n * stride_a < a.n_nodes() && n * stride_b < b.n_nodes(); ++n)
      d = std::max(d, std::abs(a.values[i][n * stride_a] - b.values[i][n * stride_b]));
  return d;
}

inline double trace_sup_norm(const BoundaryTrace& a) {
  double d = 0.0;
  for (const auto& s : a.values)
    for (const auto& v : s) d = std::max(d, std::abs(v));
  return d;
}

/// The state at the end of a forward trace solve, held through its Duhamel
/// representation so that free values at other times need no field
/// reconstruction.
struct DuhamelEndpoint {
  std::variant<GaussianData, WaveField> data;
  CouplingMeasure measure;
  BoundaryTrace trace;

  double time() const { return trace.time(trace.grid.n_steps()); }
};

using InitialState = std::variant<GaussianData, WaveField, DuhamelEndpoint>;

inline double initial_time(const InitialState& s) {
  if (const auto* e = std::get_if<DuhamelEndpoint>(&s)) return e->time();
  return 0.0;
}

namespace detail {

inline std::vector<std::vector<cplx>> base_free_values(const std::variant<GaussianData, WaveField>& data,
                                                       std::span<const double> locations,
                                                       std::span<const double> times) {
  std::vector<std::vector<cplx>> out(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (const auto* g = std::get_if<GaussianData>(&data)) {
      out[i].resize(times.size());
      for (std::size_t n = 0; n < times.size(); ++n) out[i][n] = g->free_value(locations[i], times[n]);
    } else {
      out[i] = free_trace(std::get<WaveField>(data), times, locations[i]);
    }
  }
  return out;
}

// int_0^T k(t* - s, d) F(s) ds with F the piecewise-linear interpolant of the
// trace nodes; t* anywhere on the real line.
inline cplx endpoint_integral_general(const BoundaryTrace& tr, std::size_t atom, double t_star, double d) {
  const double beta = d * d / 4.0;
  const cplx ph = diagonal_phase();
  const std::size_t N = tr.grid.n_steps();
  cplx acc{};
  const auto piece = [&](double sa, double sb, cplx fa, cplx fb) {
    if (sb <= sa) return;
    if (sb <= t_star) {
      const auto w = oscillatory_interval(t_star - sb, t_star - sa, beta);
      acc += ph * (w.near * fb + w.far * fa);
    } else {
      const auto w = oscillatory_interval(sa - t_star, sb - t_star, beta);
      acc += std::conj(ph) * (std::conj(w.near) * fa + std::conj(w.far) * fb);
    }
  };
  for (std::size_t m = 0; m < N; ++m) {
    const double sa = tr.grid.t(m), sb = tr.grid.t(m + 1);
    const cplx fa = tr.nonlinear(atom, m), fb = tr.nonlinear(atom, m + 1);
    if (t_star > sa && t_star < sb) {
      const cplx fs = fa + (fb - fa) * ((t_star - sa) / (sb - sa));
      piece(sa, t_star, fa, fs);
      piece(t_star, sb, fs, fb);
    } else {
      piece(sa, sb, fa, fb);
    }
  }
  return acc;
}

// Same integral for t* = t_{n*}, using exactly the weights a forward solve
// on [0, t*] and a reversed solve on [t*, T] would use.
inline cplx endpoint_integral_aligned(const BoundaryTrace& tr, std::size_t atom, std::size_t n_star, double d,
                                      const AbelWeights& abel, const StartCorrection& corr) {
  const std::size_t N = tr.grid.n_steps();
  const double h = tr.grid.dt();
  const cplx ph = diagonal_phase();
  cplx fwd{}, bwd{};
  if (d == 0.0) {
    const auto w = [&](std::size_t n, std::size_t m) { return abel.weight(n, m) + corr.weight(n, m); };
    for (std::size_t m = 0; m <= std::min(N, std::max(n_star, corr.reach())); ++m)
      fwd += w(n_star, m) * tr.nonlinear(atom, m);
    for (std::size_t m = 0; m <= std::min(N, std::max(N - n_star, corr.reach())); ++m)
      bwd += w(N - n_star, m) * tr.nonlinear(atom, N - m);
  } else {
    const auto kw = KernelWeightCache::instance().get(h, N, d);
    for (std::size_t m = 0; m <= n_star; ++m) fwd += kw->weight(n_star, m) * tr.nonlinear(atom, m);
    for (std::size_t m = 0; m <= N - n_star; ++m)
      bwd += std::conj(kw->weight(N - n_star, m)) * tr.nonlinear(atom, N - m);
  }
  return ph * fwd + std::conj(ph) * bwd;
}

}  // namespace detail

/// a_i(t) for each atom location and time: analytic for Gaussian data,
/// band-limited interpolation of the free evolution for sampled fields, and
/// the Duhamel representation for an endpoint state.
inline std::vector<std::vector<cplx>> free_trace_matrix(const InitialState& state, std::span<const double> locations,
                                                        std::span<const double> times) {
  if (const auto* e = std::get_if<DuhamelEndpoint>(&state)) {
    auto out = detail::base_free_values(e->data, locations, times);
    const auto& tr = e->trace;
    if (tr.origin != 0.0 || tr.direction != 1)
      throw Error(ErrorKind::validation, "endpoint state needs a forward trace starting at t = 0");
    const auto& atoms = e->measure.atoms();
    const AbelWeights abel(tr.grid.dt(), tr.grid.n_steps());
    const StartCorrection corr(abel, tr.start_order);
    for (std::size_t n = 0; n < times.size(); ++n) {
      const auto aligned = tr.grid.node_of(times[n]);
      for (std::size_t i = 0; i < locations.size(); ++i) {
        cplx duhamel{};
        for (std::size_t j = 0; j < atoms.size(); ++j) {
          const double d = locations[i] - atoms[j].location;
          const cplx integral = aligned ? detail::endpoint_integral_aligned(tr, j, *aligned, d, abel, corr)
                                        : detail::endpoint_integral_general(tr, j, times[n], d);
          duhamel += atoms[j].weight * integral;
        }
        out[i][n] -= cplx(0.0, 1.0) * duhamel;
      }
    }
    return out;
  }
  if (const auto* g = std::get_if<GaussianData>(&state)) return detail::base_free_values(*g, locations, times);
  return detail::base_free_values(std::get<WaveField>(state), locations, times);
}

/// Marches the discrete trace equation with given free values free[i][n] on
/// the nodes of `grid`. At each node the implicit value is found by Picard
/// iteration from a linear predictor; the relaxation factor is halved when the
/// update grows. With the starting correction, nodes 1..reach are solved as one block.
inline BoundaryTrace solve_volterra(const std::vector<std::vector<cplx>>& free, const CouplingMeasure& mu,
                                    const TimeGrid& grid, const SolverOptions& opt) {
  if (!(opt.tol > 0.0)) throw Error(ErrorKind::validation, "solver tolerance must be positive");
  if (opt.max_iter < 1) throw Error(ErrorKind::validation, "max_iter must be >= 1");
  const auto& atoms = mu.atoms();
  const std::size_t M = atoms.size();
  const std::size_t N = grid.n_steps();
  const double h = grid.dt();
  if (free.size() != M) throw Error(ErrorKind::validation, "free values do not match the atoms");
  for (const auto& row : free)
    if (row.size() != N + 1) throw Error(ErrorKind::validation, "free values do not match the time grid");

  BoundaryTrace tr = BoundaryTrace::zeros(grid, mu.locations());
  tr.start_order = opt.start_order;
  if (M == 0) return tr;

  const AbelWeights abel(h, N);
  const StartCorrection corr(abel, opt.start_order);
  const cplx ph = diagonal_phase();
  const cplx minus_i(0.0, -1.0);

  // One convolution engine per ordered atom pair; weights include c_j and the phase.
  struct Pair {
    std::unique_ptr<OnlineConvolution> conv;
    std::vector<cplx> lag, start;
    cplx scale;
    bool diagonal;
  };
  std::vector<Pair> pairs(M * M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      const double d = atoms[i].location - atoms[j].location;
      auto& p = pairs[i * M + j];
      p.scale = atoms[j].weight * ph;
      p.diagonal = d == 0.0;
      p.lag.resize(N + 1);
      p.start.resize(N + 1);
      if (p.diagonal) {
        for (std::size_t l = 0; l <= N; ++l) {
          p.lag[l] = p.scale * abel.lag(l);
          p.start[l] = p.scale * abel.start(l);
        }
      } else {
        const auto kw = KernelWeightCache::instance().get(h, N, d);
        for (std::size_t l = 0; l <= N; ++l) {
          p.lag[l] = p.scale * kw->lag(l);
          p.start[l] = p.scale * kw->start(l);
        }
      }
      p.conv = std::make_unique<OnlineConvolution>(p.lag, opt.fast_history);
    }
  // Full weight of node m in row r for the pair (i, j).
  const auto weight = [&](std::size_t i, std::size_t j, std::size_t r, std::size_t m) {
    const auto& p = pairs[i * M + j];
    cplx w = m > r ? cplx{} : (m == 0 ? p.start[r] : p.lag[r - m]);
    if (p.diagonal) w += p.scale * corr.weight(r, m);
    return w;
  };

  for (std::size_t i = 0; i < M; ++i) tr.values[i][0] = free[i][0];

  std::vector<std::size_t> rows;
  std::vector<cplx> known, phi, next, predictor;
  for (std::size_t n = 1; n <= N;) {
    rows.assign({n});
    if (n == 1 && corr.active())
      for (std::size_t r = 2; r <= corr.reach(); ++r) rows.push_back(r);
    const std::size_t B = rows.size();
    known.assign(M * B, cplx{});
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t r = rows[b];
      for (std::size_t i = 0; i < M; ++i) {
        cplx hist{};
        for (std::size_t j = 0; j < M; ++j) {
          if (B == 1) {
            hist += pairs[i * M + j].conv->history(r) + weight(i, j, r, 0) * tr.nonlinear(j, 0);
            if (pairs[i * M + j].diagonal)
              for (std::size_t m = 1; m <= corr.reach(); ++m)
                hist += pairs[i * M + j].scale * corr.weight(r, m) * tr.nonlinear(j, m);
          } else {
            hist += weight(i, j, r, 0) * tr.nonlinear(j, 0);
          }
        }
        known[b * M + i] = free[i][r] + minus_i * hist;
      }
    }
    const auto map = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < M; ++i) {
          cplx s{};
          for (std::size_t j = 0; j < M; ++j)
            for (std::size_t c = 0; c < B; ++c) {
              const cplx v = in[c * M + j];
              s += weight(i, j, rows[b], rows[c]) * (std::norm(v) * v);
            }
          out[b * M + i] = known[b * M + i] + minus_i * s;
        }
    };
    predictor.assign(M * B, cplx{});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < M; ++i)
        predictor[b * M + i] = n >= 2 ? 2.0 * tr.values[i][n - 1] - tr.values[i][n - 2] : tr.values[i][n - 1];

    bool converged = false;
    double theta = 1.0;
    std::size_t iters = 0;
    next.assign(M * B, cplx{});
    for (int halving = 0; halving <= opt.max_halvings && !converged; ++halving, theta *= 0.5) {
      phi = predictor;
      double prev = std::numeric_limits<double>::infinity();
      int growth = 0;
      for (int it = 0; it < opt.max_iter; ++it) {
        ++iters;
        map(phi, next);
        double diff = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) {
          const cplx upd = theta * (next[k] - phi[k]);
          diff = std::max(diff, std::abs(upd));
          phi[k] += upd;
        }
        if (!std::isfinite(diff)) break;
        if (diff <= opt.tol) {
          converged = true;
          break;
        }
        if (diff > prev && ++growth >= 3) break;
        prev = diff;
      }
    }
    if (!converged)
      throw Error(ErrorKind::step_size_too_large,
                  "fixed-point iteration failed at node " + std::to_string(n) + " (t = " + std::to_string(grid.t(n)) +
                      "); reduce the time step");
    tr.total_iterations += iters;
    tr.max_iterations_per_step = std::max(tr.max_iterations_per_step, iters);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t i = 0; i < M; ++i) tr.values[i][rows[b]] = phi[b * M + i];
      for (std::size_t j = 0; j < M; ++j) {
        const cplx Fj = tr.nonlinear(j, rows[b]);
        for (std::size_t i = 0; i < M; ++i) pairs[i * M + j].conv->push(Fj);
      }
    }
    n += B;
  }
  return tr;
}

inline void require_atoms_only(const CouplingMeasure& mu) {
  if (!mu.atoms_only())
    throw Error(ErrorKind::validation, "the trace solver handles atomic couplings only; use the concentrated solver");
}

/// Forward solve on [t0, t0 + T] where t0 is the time of the initial state.
inline BoundaryTrace solve_trace(const InitialState& state, const CouplingMeasure& mu, const TimeGrid& times,
                                 const SolverOptions& opt = {}) {
  require_atoms_only(mu);
  const double t0 = initial_time(state);
  std::vector<double> t(times.n_nodes());
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = t0 + times.t(n);
  const auto locs = mu.locations();
  auto tr = solve_volterra(free_trace_matrix(state, locs, t), mu, times, opt);
  tr.origin = t0;
  return tr;
}

/// Backward solve on [t0 - T, t0]. With u(tau) = conj(phi(t0 - tau)) the
/// problem becomes a forward one whose free part is conj(a(t0 - tau)).
inline BoundaryTrace solve_backward(const InitialState& state, const CouplingMeasure& mu, const TimeGrid& times,
                                    const SolverOptions& opt = {}) {
  require_atoms_only(mu);
  const double t0 = initial_time(state);
  std::vector<double> t(times.n_nodes());
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = t0 - times.t(n);
  const auto locs = mu.locations();
  auto free = free_trace_matrix(state, locs, t);
  for (auto& row : free)
    for (auto& v : row) v = std::conj(v);
  auto tr = solve_volterra(free, mu, times, opt);
  for (auto& row : tr.values)
    for (auto& v : row) v = std::conj(v);
  tr.origin = t0;
  tr.direction = -1;
  return tr;
}

/// Trapezoid quadrature of |phi_atom|^4 over the trace window.
inline double spacetime_l4(const BoundaryTrace& tr, std::size_t atom = 0) {
  const auto& s = tr.values.at(atom);
  const double h = tr.grid.dt();
  double acc = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double w = (n == 0 || n + 1 == s.size()) ? 0.5 : 1.0;
    acc += w * std::pow(std::norm(s[n]), 2);
  }
  return acc * h;
}

/// CSV with columns t, atom_index, re_phi, im_phi.
inline void write_trace_csv(const std::string& path, const BoundaryTrace& tr) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.precision(17);
  out << "t,atom_index,re_phi,im_phi\n";
  for (std::size_t n = 0; n < tr.n_nodes(); ++n)
    for (std::size_t i = 0; i < tr.n_atoms(); ++i)
      out << tr.time(n) << ',' << i << ',' << tr.values[i][n].real() << ',' << tr.values[i][n].imag() << '\n';
}

}  // namespace pointnls
