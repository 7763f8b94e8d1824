#pragma once

// Full-field reconstruction from the data and the boundary trace. In DFT
// coefficients (c = fft(psi)) the Duhamel formula reads
//   c(t) = e^{-i k^2 t} c(0) - i sum_j c_j delta_j(k) G_j(k, t),
//   G_j(k, t) = int_0^t e^{-i k^2 (t - s)} F_j(s) ds,
// where delta_j are the coefficients of the grid delta at x_j. With F
// piecewise linear each mode obeys the exact one-step recursion
//   G(t_{n+1}) = e^{-i w h} G(t_n) + alpha F_n + beta F_{n+1},  w = k^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "pointnls/error.hpp"
#include "pointnls/field.hpp"
#include "pointnls/free_flow.hpp"
#include "pointnls/grid.hpp"
#include "pointnls/measure.hpp"
#include "pointnls/trace_solver.hpp"

namespace pointnls {

/// Exponential-integrator coefficients for one step of length h at frequency w.
struct StepCoefficients {
  cplx decay;  ///< e^{-i w h}
  cplx alpha;  ///< weight of the older node
  cplx beta;   ///< weight of the newer node
};

inline StepCoefficients step_coefficients(double w, double h) {
  const cplx z(0.0, -w * h);
  cplx phi1, psi;
  if (std::abs(z) < 0.5) {
    // phi1 = sum z^k/(k+1)!,  psi = int_0^1 y e^{zy} dy = sum z^k / (k! (k+2))
    cplx term(1.0, 0.0);
    phi1 = 0.0;
    psi = 0.0;
    for (int k = 0; k < 24; ++k) {
      phi1 += term / static_cast<double>(k + 1);
      psi += term / static_cast<double>(k + 2);
      term *= z / static_cast<double>(k + 1);
    }
  } else {
    const cplx ez = std::exp(z);
    phi1 = (ez - 1.0) / z;
    psi = (ez * (z - 1.0) + 1.0) / (z * z);
  }
  return {std::exp(z), h * psi, h * (phi1 - psi)};
}

/// Error of the piecewise-linear product rule for sqrt(s) on [t_m, t_{m+1}]:
///   int e^{-i w (t_{m+1} - s)} (sqrt(s) - chord(s)) ds,  t_m = m h.
/// Gauss-Legendre panels when w h is moderate, endpoint asymptotics otherwise.
inline cplx root_interval_error(double w, double h, std::size_t m) {
  const double a = static_cast<double>(m) * h;
  const double b = a + h;
  const double wh = w * h;
  if (wh <= 24.0) {
    using gl = boost::math::quadrature::gauss<double, 10>;
    const auto& x = gl::abscissa();
    const auto& wt = gl::weights();
    const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(wh / 2.0)));
    const auto rule = [&](auto&& f, double lo, double hi) {
      cplx acc{};
      const double len = (hi - lo) / static_cast<double>(panels);
      for (std::size_t p = 0; p < panels; ++p) {
        const double c = lo + (static_cast<double>(p) + 0.5) * len;
        for (std::size_t i = 0; i < x.size(); ++i) {
          acc += wt[i] * f(c + 0.5 * len * x[i]);
          if (x[i] != 0.0) acc += wt[i] * f(c - 0.5 * len * x[i]);
        }
      }
      return 0.5 * len * acc;
    };
    if (m == 0) {
      // s = u^2 removes the square-root singularity
      const double rh = std::sqrt(h);
      return rule([&](double u) { return std::polar(1.0, -w * (h - u * u)) * (u - u * u / rh) * 2.0 * u; }, 0.0, rh);
    }
    const double ra = std::sqrt(a), rb = std::sqrt(b);
    return rule(
        [&](double s) {
          const double chord = ra + (rb - ra) * (s - a) / h;
          return std::polar(1.0, -w * (b - s)) * (std::sqrt(s) - chord);
        },
        a, b);
  }
  // int_a^b e^{iw(s-b)} f ds = sum_j (-1)^j (iw)^{-(j+1)} [f^(j)(b) - e^{-iwh} f^(j)(a)]
  const cplx iw(0.0, w);
  const cplx back = std::polar(1.0, -wh);
  const auto endpoint_series = [&](double at, bool lower) {
    cplx sum{}, scale = 1.0 / iw;
    double deriv = std::sqrt(at);
    double prev = INFINITY;
    for (int j = 0; j < 40; ++j) {
      const cplx term = scale * deriv;
      const double mag = std::abs(term);
      if (mag > prev) break;
      sum += term;
      if (mag < 1e-18 * std::abs(sum)) break;
      prev = mag;
      deriv *= (0.5 - j) / at;
      scale *= -1.0 / iw;
    }
    return lower ? -back * sum : sum;
  };
  cplx exact = endpoint_series(b, false);
  if (m == 0) {
    // whole-line contribution of the singular endpoint: Gamma(3/2) (-i w)^{-3/2}
    exact += back * std::polar(std::sqrt(pi) / 2.0 * std::pow(w, -1.5), 0.75 * pi);
  } else {
    exact += endpoint_series(a, true);
  }
  const auto sc = step_coefficients(w, h);
  return exact - (sc.alpha * std::sqrt(a) + sc.beta * std::sqrt(b));
}

/// root_interval_error at fixed (w, h) for all m. Away from the origin sqrt(s)
/// is expanded about the interval midpoint, so only the moments of the chord
/// error of u^k, which do not depend on m, need oscillatory quadrature.
class RootIntervalRule {
 public:
  static constexpr std::size_t degree = 16;
  static constexpr std::size_t first_expanded = 8;  ///< (h/2) / midpoint <= 1/17 from here on

  RootIntervalRule() = default;
  RootIntervalRule(double w, double h) : w_(w), h_(h), expanded_(w * h <= 24.0) {
    if (!expanded_) return;
    using gl = boost::math::quadrature::gauss<double, 10>;
    const auto& x = gl::abscissa();
    const auto& wt = gl::weights();
    const double H = 0.5 * h;
    const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(w * h / 2.0)));
    const double len = h / static_cast<double>(panels);
    const auto add = [&](double u, double weight) {
      const cplx e = weight * std::polar(1.0, -w * (H - u));
      double uk = u * u, hk = H * H;
      for (std::size_t k = 2; k <= degree; ++k) {
        moments_[k] += e * (uk - (k % 2 == 0 ? hk : hk / H * u));
        uk *= u;
        hk *= H;
      }
    };
    for (std::size_t p = 0; p < panels; ++p) {
      const double c = -H + (static_cast<double>(p) + 0.5) * len;
      for (std::size_t i = 0; i < x.size(); ++i) {
        add(c + 0.5 * len * x[i], 0.5 * len * wt[i]);
        if (x[i] != 0.0) add(c - 0.5 * len * x[i], 0.5 * len * wt[i]);
      }
    }
  }

  cplx operator()(std::size_t m) const {
    if (!expanded_ || m < first_expanded) return root_interval_error(w_, h_, m);
    const double c = (static_cast<double>(m) + 0.5) * h_;
    double coef = std::sqrt(c);
    cplx s{};
    for (std::size_t k = 0; k < degree; ++k) {
      coef *= (0.5 - static_cast<double>(k)) / (static_cast<double>(k + 1) * c);
      if (k + 1 >= 2) s += coef * moments_[k + 1];
    }
    return s;
  }

 private:
  double w_ = 0.0, h_ = 0.0;
  bool expanded_ = false;
  std::array<cplx, degree + 1> moments_{};
};

/// Per-mode accumulated error E_n(w) of the product rule for sqrt(s) on [0, t_n].
/// Adding E_n / (sqrt(2h) - 2 sqrt(h)) times F_0 - 2 F_1 + F_2 makes the rule
/// exact for 1, s and sqrt(s) without touching the one-step recursion.
class RootCorrection {
 public:
  RootCorrection() = default;
  RootCorrection(const std::vector<double>& freqs, double h) : h_(h), decay_(freqs.size()), e_(freqs.size()) {
    rules_.reserve(freqs.size());
    for (std::size_t m = 0; m < freqs.size(); ++m) {
      decay_[m] = std::polar(1.0, -freqs[m] * h_);
      rules_.emplace_back(freqs[m], h);
    }
  }

  double stencil_norm() const { return std::sqrt(2.0 * h_) - 2.0 * std::sqrt(h_); }
  const std::vector<cplx>& values() const noexcept { return e_; }
  std::size_t node() const noexcept { return node_; }

  void advance() {
    for (std::size_t m = 0; m < e_.size(); ++m) e_[m] = decay_[m] * e_[m] + rules_[m](node_);
    ++node_;
  }

 private:
  double h_ = 0.0;
  std::vector<RootIntervalRule> rules_;
  std::vector<cplx> decay_;
  std::vector<cplx> e_;
  std::size_t node_ = 0;
};

namespace detail {

inline void require_forward(const BoundaryTrace& tr) {
  if (tr.direction != 1) throw Error(ErrorKind::validation, "reconstruction needs a forward trace");
}

/// The sqrt(s) start correction is used whenever the trace solver used one.
inline bool root_correction_active(const BoundaryTrace& tr) { return tr.start_order > 0 && tr.grid.n_steps() >= 2; }

/// F_0 - 2 F_1 + F_2 per atom, scaled by 1 / (sqrt(2h) - 2 sqrt(h)).
inline std::vector<cplx> root_stencil(const BoundaryTrace& tr) {
  std::vector<cplx> d(tr.n_atoms());
  if (!root_correction_active(tr)) return d;
  const double h = tr.grid.dt();
  const double norm = std::sqrt(2.0 * h) - 2.0 * std::sqrt(h);
  for (std::size_t j = 0; j < d.size(); ++j)
    d[j] = (tr.nonlinear(j, 0) - 2.0 * tr.nonlinear(j, 1) + tr.nonlinear(j, 2)) / norm;
  return d;
}

inline std::vector<std::vector<cplx>> atom_delta_coefficients(const SpatialGrid& grid, const CouplingMeasure& mu) {
  std::vector<std::vector<cplx>> out;
  for (const auto& a : mu.atoms()) {
    if (!grid.contains(a.location)) throw Error(ErrorKind::domain, "atom outside the spatial grid");
    out.push_back(delta_coefficients(grid, a.location));
  }
  return out;
}

}  // namespace detail

/// Advances the reconstructed coefficients node by node, all modes at once.
class DuhamelStepper {
 public:
  DuhamelStepper(const WaveField& f0, const BoundaryTrace& tr, const CouplingMeasure& mu)
      : grid_(f0.grid()), tr_(&tr), free_(f0.coefficients()), c_(free_) {
    detail::require_forward(tr);
    require_atoms_only(mu);
    if (tr.n_atoms() != mu.atoms().size()) throw Error(ErrorKind::validation, "trace does not match the coupling");
    const std::size_t n = grid_.size();
    const auto deltas = detail::atom_delta_coefficients(grid_, mu);
    src_.resize(deltas.size());
    G_.assign(deltas.size(), std::vector<cplx>(n));
    for (std::size_t j = 0; j < deltas.size(); ++j) {
      src_[j].resize(n);
      for (std::size_t m = 0; m < n; ++m) src_[j][m] = cplx(0.0, -1.0) * mu.atoms()[j].weight * deltas[j][m];
    }
    steps_.resize(n);
    std::vector<double> freqs(n);
    for (std::size_t m = 0; m < n; ++m) {
      const double k = grid_.wavenumber(m);
      freqs[m] = k * k;
      steps_[m] = step_coefficients(k * k, tr.grid.dt());
    }
    if (detail::root_correction_active(tr)) {
      root_ = RootCorrection(freqs, tr.grid.dt());
      stencil_ = detail::root_stencil(tr);
    }
  }

  std::size_t node() const noexcept { return node_; }
  double time() const { return tr_->time(node_); }
  bool done() const noexcept { return node_ >= tr_->grid.n_steps(); }
  const std::vector<cplx>& coefficients() const noexcept { return c_; }
  WaveField field() const { return WaveField::from_coefficients(grid_, c_); }
  double mass() const { return mass_from_coefficients(grid_, c_); }

  void advance() {
    if (done()) throw Error(ErrorKind::window, "reconstruction already at the end of the trace");
    const std::size_t M = G_.size();
    std::vector<cplx> fa(M), fb(M);
    for (std::size_t j = 0; j < M; ++j) {
      fa[j] = tr_->nonlinear(j, node_);
      fb[j] = tr_->nonlinear(j, node_ + 1);
    }
    const bool corrected = !stencil_.empty();
    if (corrected) root_.advance();
    for (std::size_t m = 0; m < c_.size(); ++m) {
      const auto& sc = steps_[m];
      free_[m] *= sc.decay;
      cplx c = free_[m];
      for (std::size_t j = 0; j < M; ++j) {
        G_[j][m] = sc.decay * G_[j][m] + sc.alpha * fa[j] + sc.beta * fb[j];
        c += src_[j][m] * (corrected ? G_[j][m] + root_.values()[m] * stencil_[j] : G_[j][m]);
      }
      c_[m] = c;
    }
    ++node_;
  }

 private:
  SpatialGrid grid_;
  const BoundaryTrace* tr_;
  std::vector<StepCoefficients> steps_;
  std::vector<std::vector<cplx>> src_;
  std::vector<std::vector<cplx>> G_;
  std::vector<cplx> free_;
  std::vector<cplx> c_;
  RootCorrection root_;
  std::vector<cplx> stencil_;
  std::size_t node_ = 0;
};

/// Reconstructed DFT coefficients at chosen trace nodes, plus the mass at every node.
struct Reconstruction {
  SpatialGrid grid;
  std::vector<std::size_t> nodes;
  std::vector<std::vector<cplx>> coefficients;  ///< one array per requested node
  std::vector<double> mass;                     ///< mass at every trace node

  WaveField field(std::size_t i) const { return WaveField::from_coefficients(grid, coefficients.at(i)); }
};

inline Reconstruction reconstruct_nodes(const WaveField& f0, const BoundaryTrace& tr, const CouplingMeasure& mu,
                                        std::vector<std::size_t> nodes) {
  const std::size_t N = tr.grid.n_steps();
  for (auto k : nodes)
    if (k > N) throw Error(ErrorKind::interpolation_unsupported, "node index beyond the trace");
  DuhamelStepper st(f0, tr, mu);
  Reconstruction out{f0.grid(), nodes, std::vector<std::vector<cplx>>(nodes.size()), std::vector<double>(N + 1)};
  for (std::size_t s = 0; s <= N; ++s) {
    if (s > 0) st.advance();
    out.mass[s] = st.mass();
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i] == s) out.coefficients[i] = st.coefficients();
  }
  return out;
}

/// Fields at every stride-th node (and the last), with mass and sup at every node.
struct SampledTrajectory {
  std::vector<std::size_t> nodes;
  std::vector<WaveField> fields;
  std::vector<double> mass;
  std::vector<double> sup;
};

inline SampledTrajectory reconstruct_trajectory(const WaveField& f0, const BoundaryTrace& tr,
                                                const CouplingMeasure& mu, std::size_t stride, bool track_sup = true) {
  if (stride == 0) throw Error(ErrorKind::validation, "sample stride must be >= 1");
  const std::size_t N = tr.grid.n_steps();
  DuhamelStepper st(f0, tr, mu);
  SampledTrajectory out;
  for (std::size_t s = 0; s <= N; ++s) {
    if (s > 0) st.advance();
    out.mass.push_back(st.mass());
    const bool keep = s % stride == 0 || s == N;
    if (!(keep || track_sup)) continue;
    auto f = st.field();
    if (track_sup) out.sup.push_back(sup_norm(f));
    if (keep) {
      out.nodes.push_back(s);
      out.fields.push_back(std::move(f));
    }
  }
  return out;
}

inline std::size_t trace_node_at(const BoundaryTrace& tr, double t) {
  const double rel = (t - tr.origin) * tr.direction;
  const auto node = tr.grid.node_of(rel);
  if (!node)
    throw Error(ErrorKind::interpolation_unsupported,
                "time " + std::to_string(t) + " is not a node of the trace grid");
  return *node;
}

/// psi(t) on the grid of f0; t must be a trace node.
inline WaveField reconstruct(const WaveField& f0, const BoundaryTrace& tr, const CouplingMeasure& mu, double t) {
  const auto node = trace_node_at(tr, t);
  return reconstruct_nodes(f0, tr, mu, {node}).field(0);
}

struct ScatteringState {
  WaveField state;              ///< psi_+ extracted at T
  double extraction_time = 0.0;
  double defect = 0.0;          ///< ||psi_+(2T) - psi_+(T)||
  double formula_gap = 0.0;     ///< distance between the direct sum and e^{-iT d_xx} psi(T)
  double boundary_mass = 0.0;   ///< mass fraction of psi(T) in the outer strip
  double mass = 0.0;
};

namespace detail {

// Coefficients of psi_+ at each node in `ends` (ascending) by direct
// absolute-phase summation:
//   c_+ = c0 - i sum_j c_j delta_j int_0^T e^{i w s} F_j(s) ds.
inline std::vector<std::vector<cplx>> scattering_direct(const std::vector<cplx>& c0, const SpatialGrid& grid,
                                                        const BoundaryTrace& tr, const CouplingMeasure& mu,
                                                        const std::vector<std::vector<cplx>>& deltas,
                                                        const std::vector<std::size_t>& ends) {
  const double h = tr.grid.dt();
  const std::size_t M = deltas.size();
  const std::size_t last = ends.empty() ? 0 : ends.back();
  std::vector<std::vector<cplx>> out(ends.size(), c0);
  std::vector<std::vector<cplx>> F(M, std::vector<cplx>(last + 1));
  for (std::size_t j = 0; j < M; ++j)
    for (std::size_t s = 0; s <= last; ++s) F[j][s] = tr.nonlinear(j, s);
  const auto stencil = root_stencil(tr);
  const bool corrected = root_correction_active(tr);
  std::vector<cplx> acc(M);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double k = grid.wavenumber(m);
    const double w = k * k;
    const auto sc = step_coefficients(w, h);
    const RootIntervalRule rule = corrected ? RootIntervalRule(w, h) : RootIntervalRule();
    std::fill(acc.begin(), acc.end(), cplx{});
    cplx root{};
    std::size_t next = 0;
    for (std::size_t s = 0; s <= last; ++s) {
      while (next < ends.size() && ends[next] == s) {
        for (std::size_t j = 0; j < M; ++j)
          out[next][m] += cplx(0.0, -1.0) * mu.atoms()[j].weight * deltas[j][m] * (acc[j] + root * stencil[j]);
        ++next;
      }
      if (s == last) break;
      const cplx phase = std::polar(1.0, w * tr.grid.t(s + 1));
      if (corrected) root += phase * rule(s);
      for (std::size_t j = 0; j < M; ++j) acc[j] += phase * (sc.alpha * F[j][s] + sc.beta * F[j][s + 1]);
    }
  }
  return out;
}

}  // namespace detail

/// Asymptotic state psi_+ from the trace on [0, 2T].
inline ScatteringState scattering_state(const WaveField& f0, const BoundaryTrace& tr, const CouplingMeasure& mu,
                                        double T) {
  detail::require_forward(tr);
  require_atoms_only(mu);
  if (tr.origin != 0.0) throw Error(ErrorKind::validation, "scattering extraction needs a trace starting at t = 0");
  if (!(T > 0.0)) throw Error(ErrorKind::window, "extraction time must be positive");
  if (2.0 * T > tr.grid.t_final() * (1.0 + 1e-12))
    throw Error(ErrorKind::window, "trace ends at " + std::to_string(tr.grid.t_final()) +
                                       " but the defect needs the window [0, " + std::to_string(2.0 * T) + "]");
  const auto NT = tr.grid.node_of(T);
  const auto N2T = tr.grid.node_of(2.0 * T);
  if (!NT || !N2T) throw Error(ErrorKind::window, "extraction times must be trace nodes");
  const auto& grid = f0.grid();
  const auto c0 = f0.coefficients();
  const auto deltas = detail::atom_delta_coefficients(grid, mu);

  const auto plus = detail::scattering_direct(c0, grid, tr, mu, deltas, {*NT, *N2T});
  const auto& plus_T = plus[0];
  const auto& plus_2T = plus[1];

  const auto rec = reconstruct_nodes(f0, tr, mu, {*NT});
  auto pulled = rec.coefficients[0];
  apply_free_multiplier(grid, pulled, -T);

  ScatteringState s{WaveField::from_coefficients(grid, plus_T), T, 0.0, 0.0, 0.0, 0.0};
  double d2 = 0.0, g2 = 0.0;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    d2 += std::norm(plus_2T[m] - plus_T[m]);
    g2 += std::norm(pulled[m] - plus_T[m]);
  }
  const double scale = grid.dx() / static_cast<double>(grid.size());
  s.defect = std::sqrt(scale * d2);
  s.formula_gap = std::sqrt(scale * g2);
  s.boundary_mass = boundary_mass_fraction(rec.field(0));
  s.mass = mass_from_coefficients(grid, plus_T);
  return s;
}

/// psi_+ by the second formula, e^{-iT d_xx} psi(T).
inline WaveField scattering_by_pullback(const WaveField& f0, const BoundaryTrace& tr, const CouplingMeasure& mu,
                                        double T) {
  return evolve_free(reconstruct(f0, tr, mu, T), -T);
}

/// max over node pairs (n0, n1) of
///   || psi(t1) - [e^{i(t1-t0) d_xx} psi(t0) - i int_{t0}^{t1} e^{i(t1-s) d_xx} mu F(s) ds] ||.
inline double verify_duhamel_residual(const std::map<std::size_t, WaveField>& fields, const BoundaryTrace& tr,
                                      const CouplingMeasure& mu,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  detail::require_forward(tr);
  double worst = 0.0;
  for (const auto& [n0, n1] : pairs) {
    if (n1 < n0) throw Error(ErrorKind::validation, "node pairs must satisfy n0 <= n1");
    const auto& f0 = fields.at(n0);
    const auto& f1 = fields.at(n1);
    require_same_grid(f0.grid(), f1.grid());
    if (n0 == n1) continue;
    const auto& grid = f0.grid();
    const auto deltas = detail::atom_delta_coefficients(grid, mu);
    const auto c0 = f0.coefficients();
    const auto c1 = f1.coefficients();
    const double h = tr.grid.dt();
    const auto stencil = detail::root_stencil(tr);
    const bool corrected = detail::root_correction_active(tr);
    double acc = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
      const double k = grid.wavenumber(m);
      const auto sc = step_coefficients(k * k, h);
      cplx v = c0[m];
      cplx root{};
      std::vector<cplx> G(deltas.size());
      const RootIntervalRule rule = corrected ? RootIntervalRule(k * k, h) : RootIntervalRule();
      for (std::size_t s = n0; s < n1; ++s) {
        v *= sc.decay;
        if (corrected) root = sc.decay * root + rule(s);
        for (std::size_t j = 0; j < deltas.size(); ++j)
          G[j] = sc.decay * G[j] + sc.alpha * tr.nonlinear(j, s) + sc.beta * tr.nonlinear(j, s + 1);
      }
      for (std::size_t j = 0; j < deltas.size(); ++j)
        v += cplx(0.0, -1.0) * mu.atoms()[j].weight * deltas[j][m] * (G[j] + root * stencil[j]);
      acc += std::norm(c1[m] - v);
    }
    worst = std::max(worst, std::sqrt(grid.dx() * acc / static_cast<double>(grid.size())));
  }
  return worst;
}

}  // namespace pointnls
