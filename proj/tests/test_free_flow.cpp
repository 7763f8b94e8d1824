#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pointnls/pointnls.hpp"

using namespace pointnls;

namespace {

WaveField gaussian_field(const SpatialGrid& g, double amp = 1.0) {
  return WaveField::sample(g, [amp](double x) { return cplx(amp * std::exp(-x * x), 0.0); });
}

}  // namespace

TEST(EvolveFree, ZeroTimeIsIdentity) {
  const SpatialGrid g(20.0, 512);
  const auto f = gaussian_field(g);
  EXPECT_LE(l2_distance(evolve_free(f, 0.0), f), 1e-15);
}

TEST(EvolveFree, PlaneWaveEigenfunction) {
  const SpatialGrid g(pi, 64);
  const auto f = WaveField::sample(g, [](double x) { return std::polar(1.0, 2.0 * x); });
  const auto out = evolve_free(f, 0.5);
  for (std::size_t j = 0; j < g.size(); ++j)
    EXPECT_NEAR(std::abs(out[j] - std::polar(1.0, -2.0) * f[j]), 0.0, 1e-13);
}

TEST(EvolveFree, GaussianClosedForm) {
  const SpatialGrid g(20.0, 2048);
  const auto out = evolve_free(gaussian_field(g), 1.0);
  double err = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) err = std::max(err, std::abs(out[j] - oracle::free_gaussian(g.x(j), 1.0)));
  EXPECT_LE(err, 1e-8);
}

TEST(EvolveFree, UnitarityAndGroupLaw) {
  const SpatialGrid g(20.0, 2048);
  const auto f = WaveField::sample(g, [](double x) { return std::exp(cplx(-x * x, 0.7 * x)); });
  for (double t : {0.1, 1.0, 5.0, -3.0}) {
    const auto ft = evolve_free(f, t);
    EXPECT_LE(std::abs(mass(ft) - mass(f)) / mass(f), 1e-13);
    EXPECT_LE(l2_distance(evolve_free(ft, -t), f) / l2_norm(f), 1e-12);
    EXPECT_LE(l2_distance(evolve_free(evolve_free(f, 0.3), t), evolve_free(f, t + 0.3)) / l2_norm(f), 1e-12);
  }
}

TEST(Kernel, ReferenceValue) {
  const cplx k = kernel_at(1.0, 0.0);
  EXPECT_NEAR(k.real(), 0.19947114, 5e-9);
  EXPECT_NEAR(k.imag(), -0.19947114, 5e-9);
}

TEST(Kernel, ConjugationIdentity) {
  EXPECT_NEAR(std::abs(std::conj(kernel_at(0.37, 0.0)) - kernel_at(-0.37, 0.0)), 0.0, 1e-15);
}

TEST(Kernel, ModulusIndependentOfPosition) {
  EXPECT_NEAR(std::abs(kernel_at(2.0, 5.0)), 1.0 / std::sqrt(8.0 * pi), 1e-15);
  EXPECT_NEAR(std::abs(kernel_at(2.0, 5.0) - oracle::kernel(2.0, 5.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(kernel_at(-0.7, 1.3) - oracle::kernel(-0.7, 1.3)), 0.0, 1e-15);
}

TEST(Kernel, IdentitiesAtRandomTimes) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    const double s = t > 0 ? 1.0 : -1.0;
    worst = std::max(worst, std::abs(std::conj(kernel_at(t, 0.0)) - kernel_at(-t, 0.0)));
    worst = std::max(worst, std::abs(cplx(0.0, s) * kernel_at(t, 0.0) - kernel_at(-t, 0.0)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Kernel, SingularAtZero) {
  try {
    kernel_at(0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::singular_kernel);
  }
}

TEST(FreeTrace, ZeroData) {
  const SpatialGrid g(10.0, 256);
  for (const auto& v : free_trace(WaveField::zeros(g), TimeGrid(1.0, 16), 0.0)) EXPECT_EQ(v, cplx{});
}

TEST(FreeTrace, GaussianAtOrigin) {
  const SpatialGrid g(40.0, 4096);
  const auto a = free_trace(gaussian_field(g), TimeGrid(1.0, 8), 0.0);
  EXPECT_NEAR(std::abs(a.back()), std::pow(17.0, -0.25), 1e-8);
  EXPECT_NEAR(std::abs(std::pow(17.0, -0.25) - 0.492479), 0.0, 1e-6);
  for (std::size_t n = 0; n < a.size(); ++n)
    EXPECT_NEAR(std::abs(a[n] - oracle::free_gaussian(0.0, n / 8.0)), 0.0, 1e-8);
}

TEST(FreeTrace, OffNodePointAndTimeReversal) {
  const SpatialGrid g(40.0, 4096);
  const auto f = gaussian_field(g);
  const std::vector<double> fwd{0.25, 0.5, 1.0}, bwd{-0.25, -0.5, -1.0};
  const auto a = free_trace(f, fwd, 0.3131);
  const auto b = free_trace(f, bwd, 0.3131);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::abs(a[i] - oracle::free_gaussian(0.3131, fwd[i])), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(b[i] - std::conj(a[i])), 0.0, 1e-12);
  }
}

TEST(FreeTrace, OutsideDomain) {
  const SpatialGrid g(10.0, 256);
  EXPECT_THROW(free_trace(gaussian_field(g), TimeGrid(1.0, 4), 10.5), Error);
}

TEST(GaussianFreeTrace, Values) {
  EXPECT_EQ(gaussian_free_trace(0.25, cplx(2.0, 1.0), 0.0), cplx(2.0, 1.0));
  EXPECT_NEAR(std::abs(gaussian_free_trace(0.25, 1.0, 1.0) - 1.0 / std::sqrt(cplx(1.0, 4.0))), 0.0, 1e-15);
  double prev = INFINITY;
  for (double t : {0.0, 1.0, 2.0, 4.0}) {
    const double m = std::abs(gaussian_free_trace(0.25, 1.0, t));
    EXPECT_LE(m, prev);
    prev = m;
  }
  EXPECT_THROW(gaussian_free_trace(0.0, 1.0, 1.0), Error);
}

TEST(GaussianFreeTrace, AgreesWithInterpolatedTrace) {
  const SpatialGrid g(40.0, 4096);
  const auto d = GaussianData::gaussian(1.5, 1.0);
  const auto a = free_trace(d.sample(g), TimeGrid(2.0, 16), 0.0);
  for (std::size_t n = 0; n < a.size(); ++n)
    EXPECT_NEAR(std::abs(a[n] - gaussian_free_trace(0.25, 1.5, n / 8.0)), 0.0, 1e-8);
}

TEST(LinearL4C, ZeroAndHomogeneity) {
  const SpatialGrid g(20.0, 1024);
  const TimeGrid t(2.0, 128);
  EXPECT_EQ(linear_l4c_norm(WaveField::zeros(g), t).norm, 0.0);
  const double one = linear_l4c_norm(gaussian_field(g), t).norm;
  const double two = linear_l4c_norm(gaussian_field(g, 2.0), t).norm;
  EXPECT_NEAR(two, 2.0 * one, 1e-14 * two);
}

TEST(LinearL4C, SelfRefinementAndExactValue) {
  const SpatialGrid g(40.0, 4096);
  const TimeGrid t(8.0, 2048);
  const auto f = gaussian_field(g);
  const auto coarse = linear_l4c_norm(f, t);
  const auto fine = linear_l4c_norm(f, t, 4, 2);
  EXPECT_LE(std::abs(coarse.norm - fine.norm) / fine.norm, 1e-2);
  EXPECT_NEAR(fine.window_integral, oracle::gaussian_l4c_pow4(8.0), 1e-4);
  EXPECT_GT(coarse.tail_estimate, 0.0);
  EXPECT_NEAR(coarse.decay_exponent, 0.5, 0.05);
}
