#pragma once

// Product-integration weights for the memory kernels of the trace equation.
//
// Everything is phrased in the lag variable u = t - s >= 0. An interval of the
// time grid sits at distances [u_near, u_far] from the evaluation time; F is
// interpolated linearly between its near node (u_near) and far node (u_far).

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "pointnls/error.hpp"
#include "pointnls/grid.hpp"

namespace pointnls {

/// Weights of one interval on its near and far node.
template <class T>
struct IntervalWeights {
  T near{};
  T far{};
};

/// Integral of u^{-1/2} against the linear hat functions of [u_near, u_far].
/// Written in terms of sqrt(u) so that no difference of large square roots is formed.
inline IntervalWeights<double> abel_interval(double u_near, double u_far) {
  const double p = std::sqrt(u_far), q = std::sqrt(u_near);
  const double len = u_far - u_near;
  const double s = p + q;
  const double m0 = 2.0 * len / s;
  const double near = (2.0 / 3.0) * len * (2.0 * p + q) / (s * s);
  return {near, m0 - near};
}

/// Moments over [t_m, t_{m+1}] for evaluation time t_n, m = 0..n-1:
/// m0 = int (t_n - s)^{-1/2} ds, m1 = int (t_n - s)^{-1/2} s ds.
struct AbelMoment {
  double m0 = 0.0;
  double m1 = 0.0;
};

inline std::vector<AbelMoment> abel_moments(std::size_t n, double h) {
  if (n == 0) throw Error(ErrorKind::validation, "abel_moments needs n >= 1");
  if (!(h > 0.0)) throw Error(ErrorKind::validation, "abel_moments needs h > 0");
  std::vector<AbelMoment> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double u_near = h * static_cast<double>(n - m - 1);
    const double u_far = h * static_cast<double>(n - m);
    const double p = std::sqrt(u_far), q = std::sqrt(u_near);
    const double len = u_far - u_near;
    const double m0 = 2.0 * len / (p + q);
    // int u^{-1/2} (u - u_near) du
    const double lin = (2.0 / 3.0) * len * len * (p + 2.0 * q) / ((p + q) * (p + q));
    out[m] = {m0, h * static_cast<double>(m + 1) * m0 - lin};
  }
  return out;
}

/// Lag-indexed product-integration weights on a uniform grid:
///   int_0^{t_n} (t_n - s)^{-1/2} F(s) ds = sum_{m=1}^{n} lag(n - m) F_m + start(n) F_0
/// exactly for piecewise-linear F.
class AbelWeights {
 public:
  AbelWeights(double h, std::size_t n_max) : h_(h), lag_(n_max + 1), start_(n_max + 1) {
    if (!(h > 0.0)) throw Error(ErrorKind::validation, "Abel step must be positive");
    std::vector<IntervalWeights<double>> iv(n_max + 2);
    for (std::size_t j = 1; j <= n_max + 1; ++j)
      iv[j] = abel_interval(h * static_cast<double>(j - 1), h * static_cast<double>(j));
    for (std::size_t l = 0; l <= n_max; ++l) {
      lag_[l] = iv[l + 1].near + (l >= 1 ? iv[l].far : 0.0);
      start_[l] = l >= 1 ? iv[l].far : 0.0;
    }
  }

  double step() const noexcept { return h_; }
  std::size_t n_max() const noexcept { return lag_.size() - 1; }
  double lag(std::size_t l) const { return lag_[l]; }
  double start(std::size_t n) const { return start_[n]; }
  double weight(std::size_t n, std::size_t m) const {
    if (m > n) return 0.0;
    return m == 0 ? start_[n] : lag_[n - m];
  }

  double row_sum(std::size_t n) const {
    double s = 0.0;
    for (std::size_t m = 0; m <= n; ++m) s += weight(n, m);
    return s;
  }

 private:
  double h_;
  std::vector<double> lag_, start_;
};

/// Starting correction for the Abel rule. The trace behaves like a series
/// in sqrt(s) near s = 0, which piecewise-linear interpolation resolves only
/// to O(h). Every row n gains weights on nodes 0, 1, 2 that annihilate
/// constants and linear functions and make the row exact for s^{1/2}. The
/// first K = order + 1 rows, where the singular terms dominate, use nodes
/// 0..K and are also exact for s^{3/2}, ..., s^{order - 1/2}; the solver
/// treats those rows as one block. Later rows keep the single sqrt term:
/// matching higher powers there would only trade the smooth O(h^2)
/// interior error for larger start weights.
class StartCorrection {
 public:
  StartCorrection() = default;
  StartCorrection(const AbelWeights& w, int order) {
    if (order <= 0) return;
    const std::size_t K = static_cast<std::size_t>(order) + 1;
    if (w.n_max() < K) return;
    K_ = K;
    const double h = w.step();
    // Columns: nodes 0..K; rows: monomials 1, s, s^{1/2}, s^{3/2}, ... in units of h.
    std::vector<double> powers{0.0, 1.0};
    for (int k = 0; k < order; ++k) powers.push_back(0.5 + k);
    const std::size_t R = powers.size();
    std::vector<std::vector<double>> V(R, std::vector<double>(R));
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t m = 0; m < R; ++m) V[r][m] = (m == 0 && powers[r] == 0.0) ? 1.0 : std::pow(static_cast<double>(m), powers[r]);
    e_.assign(w.n_max() + 1, std::vector<double>(R, 0.0));
    for (std::size_t n = 1; n <= w.n_max(); ++n) {
      const std::size_t used = n <= K ? R : 3;
      std::vector<double> rhs(used, 0.0);
      for (std::size_t r = 2; r < used; ++r) {
        const double p = powers[r];
        const double tn = h * static_cast<double>(n);
        // int_0^t (t - s)^{-1/2} s^p ds = t^{p + 1/2} B(1/2, p + 1)
        const double exact = std::pow(tn, p + 0.5) * std::exp(std::lgamma(0.5) + std::lgamma(p + 1.0) - std::lgamma(p + 1.5));
        double approx = 0.0;
        for (std::size_t m = n; m >= 1; --m) approx += w.weight(n, m) * std::pow(h * static_cast<double>(m), p);
        rhs[r] = (exact - approx) / std::pow(h, p);
      }
      std::vector<std::vector<double>> Vu(used, std::vector<double>(used));
      for (std::size_t r = 0; r < used; ++r)
        for (std::size_t m = 0; m < used; ++m) Vu[r][m] = V[r][m];
      const auto e = solve(Vu, rhs);
      std::copy(e.begin(), e.end(), e_[n].begin());
    }
  }

  bool active() const noexcept { return K_ > 0; }
  /// Last node touched by the correction.
  std::size_t reach() const noexcept { return K_; }

  double weight(std::size_t n, std::size_t m) const {
    if (!active() || n == 0 || m > K_) return 0.0;
    return e_[n][m];
  }

 private:
  static std::vector<double> solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t R = b.size();
    for (std::size_t c = 0; c < R; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < R; ++r)
        if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
      std::swap(A[c], A[piv]);
      std::swap(b[c], b[piv]);
      for (std::size_t r = c + 1; r < R; ++r) {
        const double f = A[r][c] / A[c][c];
        for (std::size_t k = c; k < R; ++k) A[r][k] -= f * A[c][k];
        b[r] -= f * b[c];
      }
    }
    std::vector<double> x(R);
    for (std::size_t c = R; c-- > 0;) {
      double s = b[c];
      for (std::size_t k = c + 1; k < R; ++k) s -= A[c][k] * x[k];
      x[c] = s / A[c][c];
    }
    return x;
  }

  std::size_t K_ = 0;
  std::vector<std::vector<double>> e_;
};

namespace detail {

// int_0^W f(w) e^{i beta / w^2} dw for the polynomial f = sum coeff[j] w^j, by
// repeated integration by parts. Valid for W^2 << beta; the terms shrink by
// roughly (j + 3) W^2 / (2 beta) each round.
inline cplx oscillatory_head(std::vector<cplx> coeff, double beta, double W) {
  if (W <= 0.0) return {};
  const cplx phase = std::polar(1.0, beta / (W * W));
  const cplx inv = 1.0 / cplx(0.0, -2.0 * beta);
  // scaled coefficients b_j W^j
  for (std::size_t j = 0; j < coeff.size(); ++j) coeff[j] *= std::pow(W, static_cast<double>(j));
  cplx acc{};
  double sign = 1.0;
  for (int round = 0; round < 200; ++round) {
    cplx bsum{};
    for (const auto& b : coeff) bsum += b;
    const cplx term = sign * bsum * W * W * W * phase * inv;
    acc += term;
    if (std::abs(term) <= 1e-18 * std::max(1.0, std::abs(acc))) break;
    std::vector<cplx> next(coeff.size() + 2);
    for (std::size_t j = 0; j < coeff.size(); ++j)
      next[j + 2] = coeff[j] * static_cast<double>(j + 3) * W * W * inv;
    coeff = std::move(next);
    sign = -sign;
  }
  return acc;
}

}  // namespace detail

/// Weights of the oscillatory kernel u^{-1/2} exp(i beta / u) with beta = d^2/4,
/// integrated against the hats of [u_near, u_far]. The constant (4 pi)^{-1/2}
/// e^{-i pi/4} is left out, as for the diagonal weights.
inline IntervalWeights<cplx> oscillatory_interval(double u_near, double u_far, double beta) {
  if (beta == 0.0) {
    const auto w = abel_interval(u_near, u_far);
    return {w.near, w.far};
  }
  const double q = std::sqrt(u_near), p = std::sqrt(u_far);
  const double len = u_far - u_near;
  // In w = sqrt(u): M0 = int 2 e^{i beta/w^2} dw, M1 = int 2 (w^2 - u_near) e^{i beta/w^2} dw.
  const double W = std::sqrt(0.005 * beta);
  cplx m0{}, m1{};
  const auto head = [&](double upper) {
    if (upper <= 0.0) return std::pair<cplx, cplx>{};
    return std::pair<cplx, cplx>{detail::oscillatory_head({2.0}, beta, upper),
                                 detail::oscillatory_head({-2.0 * u_near, 0.0, 2.0}, beta, upper)};
  };
  if (q < W) {
    const auto hi = head(std::min(p, W));
    const auto lo = head(q);
    m0 += hi.first - lo.first;
    m1 += hi.second - lo.second;
  }
  const double a = std::max(q, W);
  if (p > a) {
    // v = 1/w^2 makes the phase linear: M0 = int v^{-3/2} e^{i beta v} dv,
    // M1 = int (1/v - u_near) v^{-3/2} e^{i beta v} dv over [1/p^2, 1/a^2].
    // Panels advance the phase by at most 1 and grow v by at most 25%.
    using gl = boost::math::quadrature::gauss<double, 10>;
    const double v_lo = 1.0 / (p * p), v_hi = 1.0 / (a * a);
    for (double v0 = v_lo; v0 < v_hi;) {
      const double v1 = std::min(v_hi, v0 + std::min(1.0 / beta, 0.25 * v0));
      const double mid = 0.5 * (v0 + v1), half = 0.5 * (v1 - v0);
      for (std::size_t i = 0; i < gl::abscissa().size(); ++i) {
        const double wt = gl::weights()[i] * half;
        for (double side : {-1.0, 1.0}) {
          if (side > 0.0 && gl::abscissa()[i] == 0.0) continue;
          const double v = mid + side * gl::abscissa()[i] * half;
          const cplx f = std::polar(wt / (v * std::sqrt(v)), beta * v);
          m0 += f;
          m1 += (1.0 / v - u_near) * f;
        }
      }
      v0 = v1;
    }
  }
  const cplx far = m1 / len;
  return {m0 - far, far};
}

/// Lag-indexed oscillatory weights for one atom separation |d| > 0, in the
/// same layout as AbelWeights (no correction stencil).
class KernelLagWeights {
 public:
  KernelLagWeights(double h, std::size_t n_max, double separation)
      : h_(h), separation_(std::abs(separation)), lag_(n_max + 1), start_(n_max + 1) {
    const double beta = separation_ * separation_ / 4.0;
    std::vector<IntervalWeights<cplx>> iv(n_max + 2);
    for (std::size_t j = 1; j <= n_max + 1; ++j)
      iv[j] = oscillatory_interval(h * static_cast<double>(j - 1), h * static_cast<double>(j), beta);
    for (std::size_t l = 0; l <= n_max; ++l) {
      lag_[l] = iv[l + 1].near + (l >= 1 ? iv[l].far : cplx{});
      start_[l] = l >= 1 ? iv[l].far : cplx{};
    }
  }

  double separation() const noexcept { return separation_; }
  cplx lag(std::size_t l) const { return lag_[l]; }
  cplx start(std::size_t n) const { return start_[n]; }
  cplx weight(std::size_t n, std::size_t m) const { return m == 0 ? start_[n] : lag_[n - m]; }

 private:
  double h_, separation_;
  std::vector<cplx> lag_, start_;
};

/// Process-wide cache of oscillatory lag weights keyed by (h, n_max, |d|).
class KernelWeightCache {
 public:
  static KernelWeightCache& instance() {
    static KernelWeightCache c;
    return c;
  }

  std::shared_ptr<const KernelLagWeights> get(double h, std::size_t n_max, double separation) {
    const auto key = std::make_tuple(h, n_max, std::abs(separation));
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    auto w = std::make_shared<const KernelLagWeights>(h, n_max, separation);
    cache_.emplace(key, w);
    return w;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<double, std::size_t, double>, std::shared_ptr<const KernelLagWeights>> cache_;
};

}  // namespace pointnls
