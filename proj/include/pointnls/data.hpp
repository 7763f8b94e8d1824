#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "pointnls/error.hpp"
#include "pointnls/field.hpp"
#include "pointnls/grid.hpp"

namespace pointnls {

/// A exp(-(x - center)^2 / (4 a) + i v x). Evolves in closed form under the free flow.
struct GaussianPacket {
  cplx amplitude{1.0, 0.0};
  double a = 0.25;
  double center = 0.0;
  double velocity = 0.0;

  cplx operator()(double x) const {
    const double y = x - center;
    return amplitude * std::exp(cplx(-y * y / (4.0 * a), velocity * x));
  }

  /// (e^{i t d_xx} packet)(x).
  cplx free_value(double x, double t) const {
    const cplx denom(a, t);
    const double y = x - center - 2.0 * velocity * t;
    return amplitude * std::sqrt(a / denom) *
           std::exp(-y * y / (4.0 * denom) + cplx(0.0, velocity * x - velocity * velocity * t));
  }
};

/// A finite sum of Gaussian packets, the analytic initial data family.
class GaussianData {
 public:
  GaussianData() = default;
  explicit GaussianData(std::vector<GaussianPacket> packets) : packets_(std::move(packets)) {
    for (const auto& p : packets_)
      if (!(p.a > 0.0)) throw Error(ErrorKind::domain, "Gaussian width parameter must be positive");
  }

  /// A exp(-x^2 / w^2).
  static GaussianData gaussian(cplx amplitude, double width) {
    return GaussianData({GaussianPacket{amplitude, width * width / 4.0, 0.0, 0.0}});
  }

  /// Two copies of the width-w Gaussian centred at +-offset, added (bimodal) or subtracted (odd).
  static GaussianData pair(cplx amplitude, double width, double offset, bool odd) {
    const double a = width * width / 4.0;
    return GaussianData({GaussianPacket{amplitude, a, offset, 0.0},
                         GaussianPacket{odd ? -amplitude : amplitude, a, -offset, 0.0}});
  }

  const std::vector<GaussianPacket>& packets() const noexcept { return packets_; }

  cplx operator()(double x) const {
    cplx s{};
    for (const auto& p : packets_) s += p(x);
    return s;
  }

  cplx free_value(double x, double t) const {
    cplx s{};
    for (const auto& p : packets_) s += p.free_value(x, t);
    return s;
  }

  WaveField sample(const SpatialGrid& grid) const {
    return WaveField::sample(grid, [this](double x) { return (*this)(x); });
  }

  WaveField sample_free(const SpatialGrid& grid, double t) const {
    return WaveField::sample(grid, [this, t](double x) { return free_value(x, t); });
  }

  /// Exact integral of |psi|^2 over the real line.
  double mass() const {
    cplx s{};
    for (const auto& p : packets_)
      for (const auto& q : packets_) s += overlap(p, q);
    return s.real();
  }

  GaussianData scaled(cplx factor) const {
    auto out = packets_;
    for (auto& p : out) p.amplitude *= factor;
    return GaussianData(std::move(out));
  }

  /// x -> sqrt(lambda) psi(lambda x).
  GaussianData rescaled(double lambda) const {
    if (!(lambda > 0.0)) throw Error(ErrorKind::domain, "rescale factor must be positive");
    auto out = packets_;
    for (auto& p : out) {
      p.amplitude *= std::sqrt(lambda);
      p.a /= lambda * lambda;
      p.center /= lambda;
      p.velocity *= lambda;
    }
    return GaussianData(std::move(out));
  }

  GaussianData conj() const {
    auto out = packets_;
    for (auto& p : out) {
      p.amplitude = std::conj(p.amplitude);
      p.velocity = -p.velocity;
    }
    return GaussianData(std::move(out));
  }

  GaussianData plus(const GaussianData& other) const {
    auto out = packets_;
    out.insert(out.end(), other.packets_.begin(), other.packets_.end());
    return GaussianData(std::move(out));
  }

 private:
  // integral conj(p) q dx
  static cplx overlap(const GaussianPacket& p, const GaussianPacket& q) {
    const double alpha = 1.0 / (4.0 * p.a) + 1.0 / (4.0 * q.a);
    const cplx beta(p.center / (2.0 * p.a) + q.center / (2.0 * q.a), q.velocity - p.velocity);
    const double gamma = -p.center * p.center / (4.0 * p.a) - q.center * q.center / (4.0 * q.a);
    return std::conj(p.amplitude) * q.amplitude * std::sqrt(pi / alpha) *
           std::exp(beta * beta / (4.0 * alpha) + gamma);
  }

  std::vector<GaussianPacket> packets_;
};

/// Free evolution of A exp(-x^2/(4a)) at x = 0: A (a / (a + i t))^{1/2}, principal branch.
inline cplx gaussian_free_trace(double a_width, cplx amplitude, double t) {
  if (!(a_width > 0.0)) throw Error(ErrorKind::domain, "Gaussian width parameter must be positive");
  return amplitude * std::sqrt(a_width / cplx(a_width, t));
}

}  // namespace pointnls
