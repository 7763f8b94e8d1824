#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "pointnls/pointnls.hpp"

using namespace pointnls;

namespace {

const SpatialGrid kGrid(25.6, 2048);

}  // namespace

TEST(Diagnostics, KernelIdentities) {
  const std::vector<double> ts{-3.0, -0.1, 0.2, 7.5};
  const auto r = check_kernel_identities(ts);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.lhs, 1e-12);
  EXPECT_EQ(r.details.at("samples"), 4.0);
}

TEST(Diagnostics, SpacetimeBoundZeroData) {
  const auto d = GaussianData::gaussian(0.0, 1.0);
  const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(1.0, 32));
  const auto r = check_spacetime_bound(d.sample(kGrid), tr);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Diagnostics, SpacetimeBoundSmallAmplitudeNearEquality) {
  const auto d = GaussianData::gaussian(1e-3, 1.0);
  const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(4.0, 512));
  const auto r = check_spacetime_bound(d.sample(kGrid), tr);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.details.at("ratio"), 1.0, 1e-2);
  EXPECT_NEAR(r.rhs, 1e-12 * oracle::gaussian_l4c_pow4(4.0), 1e-15);
}

TEST(Diagnostics, SpacetimeBoundWithReferenceNorm) {
  const auto d = GaussianData::gaussian(2.0, 1.0);
  const auto f0 = d.sample(kGrid);
  const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(2.0, 64));
  const auto own = check_spacetime_bound(f0, tr);
  const auto same = check_spacetime_bound(f0, tr, linear_l4c_norm(f0, tr.grid));
  EXPECT_EQ(own.lhs, same.lhs);
  EXPECT_EQ(own.rhs, same.rhs);
  const auto fine = check_spacetime_bound(f0, tr, linear_l4c_norm(f0, tr.grid, 8));
  EXPECT_EQ(fine.lhs, own.lhs);
  EXPECT_NEAR(fine.rhs, own.rhs, 1e-2 * own.rhs);
  EXPECT_TRUE(fine.pass);
}

TEST(Diagnostics, MassConservationReport) {
  const std::vector<double> flat{2.0, 2.0, 2.0};
  EXPECT_TRUE(check_mass_conservation(flat, 0.0).pass);
  const std::vector<double> drift{2.0, 2.002, 1.999};
  const auto r = check_mass_conservation(drift, 1e-3);
  EXPECT_NEAR(r.lhs, 1e-3, 1e-12);
  EXPECT_FALSE(check_mass_conservation(drift, 5e-4).pass);
}

TEST(HighFreqTail, ZeroCutoffIsFullNorm) {
  const auto f = GaussianData::gaussian(1.0, 1.0).sample(kGrid);
  EXPECT_NEAR(high_freq_tail(f, 0.0), std::sqrt(mass(f) - std::norm(f.coefficients()[0]) * kGrid.dx() / kGrid.size()),
              1e-12);
}

TEST(HighFreqTail, BandLimitedFieldHasNoTail) {
  const SpatialGrid g(pi, 64);
  const auto f = WaveField::sample(g, [](double x) { return std::cos(3.0 * x) + cplx(0.0, 1.0) * std::sin(5.0 * x); });
  EXPECT_LE(high_freq_tail(f, 5.0), 1e-13);
  EXPECT_NEAR(high_freq_tail(f, 4.0), std::sqrt(pi), 1e-12);  // ||sin 5x||^2 on [-pi, pi) is pi
}

TEST(HighFreqTail, GaussianTailMatchesErfc) {
  // Discrete modes sit at k = m pi / L. With L = 511.5 pi / 4 the cutoff N = 4 falls
  // midway between two modes, so the mode sum is a midpoint rule for the tail integral.
  const SpatialGrid g(511.5 * pi / 4.0, 4096);
  const auto f = WaveField::sample(g, [](double x) { return cplx(std::exp(-x * x), 0.0); });
  EXPECT_NEAR(high_freq_tail(f, 4.0), oracle::gaussian_tail(4.0), 1e-6);
  for (double m : {127.5, 255.5}) {
    const double N = m * pi / g.half_width();
    EXPECT_NEAR(high_freq_tail(f, N), oracle::gaussian_tail(N), 1e-5) << N;  // midpoint error O(dk^2)
  }
}

TEST(HighFreqTail, RejectsBadCutoff) {
  const auto f = WaveField::zeros(kGrid);
  EXPECT_THROW(high_freq_tail(f, -1.0), Error);
  EXPECT_THROW(high_freq_tail(f, 2.0 * kGrid.nyquist()), Error);
}

TEST(Diagnostics, PhaseCovariance) {
  TraceProblem p;
  p.times = TimeGrid(1.0, 128);
  const auto r = check_phase_covariance(p);
  EXPECT_TRUE(r.pass) << r.lhs;
  EXPECT_GT(r.details.at("response_ratio"), 0.0);
}

TEST(Diagnostics, LipschitzRatiosStable) {
  TraceProblem p;
  p.times = TimeGrid(1.0, 128);
  const std::vector<double> scales{1e-3, 1e-4, 1e-5};
  const auto r = check_lipschitz_dependence(p, scales, 7);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.trend.size(), 3u);
  for (double v : r.trend) EXPECT_GT(v, 0.0);
}

TEST(Diagnostics, LipschitzDirectionIsUnitNorm) {
  EXPECT_NEAR(random_direction(11).mass(), 1.0, 1e-12);
  EXPECT_NE(random_direction(11).mass(), 0.0);
}

TEST(Diagnostics, ScalingIdentityAndNonTrivial) {
  TraceProblem p;
  p.times = TimeGrid(1.0, 128);
  EXPECT_LE(check_scaling_symmetry(p, 1.0).lhs, 1e-14);
  EXPECT_TRUE(check_scaling_symmetry(p, 2.0).pass);
  EXPECT_THROW(check_scaling_symmetry(p, 0.0), Error);
}

TEST(Diagnostics, TraceTimeReversalAndUniqueness) {
  TraceProblem p;
  p.times = TimeGrid(1.0, 128);
  EXPECT_TRUE(check_trace_time_reversal(p).pass);
  EXPECT_TRUE(check_uniqueness(p).pass);
  EXPECT_TRUE(check_fast_history(p).pass);
}

TEST(ForcingDifference, DiscreteDeltaCancels) {
  // A density equal to the grid delta at x = 0 reproduces the point forcing exactly.
  const auto d = GaussianData::gaussian(1.0, 1.0);
  const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(0.5, 64));
  std::vector<double> dens(kGrid.size(), 0.0);
  dens[*kGrid.node_of(0.0)] = 1.0 / kGrid.dx();
  const std::vector<std::vector<double>> ds{dens};
  const std::vector<double> eps{kGrid.dx()};
  const auto rows = forcing_difference_decay(d.sample(kGrid), tr, CouplingMeasure::delta(),
                                             std::span<const std::vector<double>>(ds), eps, 8.0);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LE(rows[0].sup_l2, 1e-12);
  EXPECT_LE(rows[0].l4_weighted, 1e-9);
}

TEST(ForcingDifference, ZeroDataGivesZero) {
  const auto d = GaussianData::gaussian(0.0, 1.0);
  const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(0.5, 32));
  const std::vector<double> eps{0.4, 0.2};
  for (const auto& row :
       forcing_difference_decay(d.sample(kGrid), tr, CouplingMeasure::delta(), Profile(ProfileKind::box), eps, 8.0)) {
    EXPECT_EQ(row.sup_l2, 0.0);
    EXPECT_EQ(row.l4_weighted, 0.0);
  }
}

TEST(ForcingDifference, DecaysWithEpsilon) {
  const SpatialGrid fine(25.6, 4096);
  const auto d = GaussianData::gaussian(1.0, 1.0);
  const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(1.0, 256));
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  for (auto kind : {ProfileKind::box, ProfileKind::signed_two_bump}) {
    const auto rows = forcing_difference_decay(d.sample(fine), tr, CouplingMeasure::delta(), Profile(kind), eps, 8.0);
    std::vector<double> a, b;
    for (const auto& r : rows) {
      a.push_back(r.sup_l2);
      b.push_back(r.l4_weighted);
    }
    EXPECT_TRUE(strictly_decreasing(a));
    EXPECT_TRUE(strictly_decreasing(b));
  }
}

TEST(ForcingDifference, MismatchedInputs) {
  const auto d = GaussianData::gaussian(1.0, 1.0);
  const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(0.5, 16));
  const std::vector<std::vector<double>> ds{std::vector<double>(kGrid.size())};
  const std::vector<double> eps{0.1, 0.2};
  EXPECT_THROW(forcing_difference_decay(d.sample(kGrid), tr, CouplingMeasure::delta(),
                                        std::span<const std::vector<double>>(ds), eps, 8.0),
               Error);
}

TEST(Helpers, StrictlyDecreasingAndOrder) {
  EXPECT_TRUE(strictly_decreasing(std::vector<double>{3.0, 2.0, 1.0}));
  EXPECT_FALSE(strictly_decreasing(std::vector<double>{3.0, 3.0, 1.0}));
  EXPECT_FALSE(strictly_decreasing(std::vector<double>{1.0, NAN}));
  EXPECT_DOUBLE_EQ(richardson_order(4.0, 1.0), 2.0);
}

TEST(Reports, JsonShape) {
  auto r = make_report("x", 1.0, 2.0);
  r.details["k"] = 3.0;
  std::ostringstream os;
  const std::vector<CheckReport> v{r, make_report("y", NAN, 1.0)};
  write_reports_jsonl(os, v);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["name"], "x");
  EXPECT_EQ(j["margin"], 1.0);
  EXPECT_EQ(j["pass"], true);
  EXPECT_EQ(j["details"]["k"], 3.0);
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line)["pass"], false);
}
