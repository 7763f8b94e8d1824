// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pointnls/pointnls.hpp"

using namespace pointnls;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome kernel_exactness() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> ts;
  while (ts.size() < 100)
    if (const double t = u(rng); t != 0.0) ts.push_back(t);
  const auto r = check_kernel_identities(ts, 1e-12);
  const cplx k = kernel_at(1.0, 0.0);
  const double ref = std::abs(k - cplx(0.19947114, -0.19947114));
  return {r.pass && ref <= 1e-8, fmt("identity error %.2e, k(1,0) deviation %.2e", r.lhs, ref)};
}

Outcome linear_unitarity() {
  const SpatialGrid g(20.0, 2048);
  const auto f = WaveField::sample(g, [](double x) { return std::exp(cplx(-x * x, 0.7 * x)) * (1.0 + 0.3 * x); });
  double drift = 0.0, group = 0.0;
  for (double t : {0.1, 1.0, 5.0, -2.5}) {
    const auto ft = evolve_free(f, t);
    drift = std::max(drift, std::abs(mass(ft) - mass(f)) / mass(f));
    group = std::max(group, l2_distance(evolve_free(ft, -t), f) / l2_norm(f));
  }
  return {drift <= 1e-13 && group <= 1e-12, fmt("mass drift %.2e, round trip %.2e", drift, group)};
}

Outcome volterra_order() {
  const auto d = GaussianData::gaussian(2.0, 1.0);
  const auto mu = CouplingMeasure::delta();
  const auto a = solve_trace(d, mu, TimeGrid(2.0, 256));
  const auto b = solve_trace(d, mu, TimeGrid(2.0, 512));
  const auto c = solve_trace(d, mu, TimeGrid(2.0, 1024));
  const double d1 = trace_sup_distance(a, b, 1, 2), d2 = trace_sup_distance(b, c, 1, 2);
  const double p = richardson_order(d1, d2);
  return {p >= 1.5, fmt("observed order %.3f (differences %.3e, %.3e)", p, d1, d2)};
}

std::vector<std::pair<std::string, GaussianData>> data_library() {
  std::vector<std::pair<std::string, GaussianData>> lib;
  for (double A : {1e-3, 0.5, 1.0, 2.0, 4.0}) lib.emplace_back(fmt("gaussian A=%g", A), GaussianData::gaussian(A, 1.0));
  lib.emplace_back("bimodal pair", GaussianData::pair(1.0, 1.0, 2.0, false));
  lib.emplace_back("odd pair", GaussianData::pair(1.0, 1.0, 2.0, true));
  lib.emplace_back("narrow gaussian", GaussianData::gaussian(2.0, 0.5));
  lib.emplace_back("wide gaussian", GaussianData::gaussian(1.0, 2.0));
  lib.emplace_back("moving packet", GaussianData({GaussianPacket{2.0, 0.25, -1.0, 1.0}}));
  return lib;
}

Outcome spacetime_inequality() {
  const SpatialGrid g(25.6, 2048);
  bool ok = true;
  double worst_ratio = 0.0, small_ratio = NAN;
  std::string failures;
  for (const auto& [name, d] : data_library()) {
    const auto f0 = d.sample(g);
    // The linear norm depends on the data only, so it is taken once on a fine time grid;
    // the margin then isolates the effect of the trace step h.
    const auto linear = linear_l4c_norm(f0, TimeGrid(8.0, 2048), 4);
    std::vector<double> margins;
    for (std::size_t N : {512u, 1024u, 2048u}) {
      const auto r = check_spacetime_bound(f0, solve_trace(d, CouplingMeasure::delta(), TimeGrid(8.0, N)), linear, 1e-2);
      ok = ok && r.pass;
      margins.push_back(r.margin() / r.rhs);
      worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
      if (name == "gaussian A=0.001") small_ratio = r.lhs / r.rhs;
    }
    // the relative margin may not shrink when h halves (slack absorbs roundoff)
    for (std::size_t i = 1; i < margins.size(); ++i)
      if (margins[i] < margins[i - 1] - 1e-6) {
        ok = false;
        failures += " degrades:" + name;
      }
  }
  ok = ok && small_ratio >= 0.97 && small_ratio <= 1.0;
  return {ok, fmt("max lhs/rhs %.6f, A=1e-3 ratio %.6f%s", worst_ratio, small_ratio, failures.c_str())};
}

Outcome ratio_study() {
  const SpatialGrid g(25.6, 2048);
  const TimeGrid t(8.0, 1024);
  bool ok = true;
  std::string table;
  for (double A : {1e-3, 0.5, 1.0, 2.0, 4.0}) {
    const auto d = GaussianData::gaussian(A, 1.0);
    const auto f0 = d.sample(g);
    const double m2 = std::pow(mass(f0), 2.0);
    const double lhs = spacetime_l4(solve_trace(d, CouplingMeasure::delta(), t), 0) / m2;
    const double rhs = linear_l4c_norm(f0, t).window_integral / m2;
    ok = ok && std::isfinite(lhs) && lhs <= rhs * (1.0 + 1e-2);
    table += fmt(" A=%g:%.4f/%.4f", A, lhs, rhs);
  }
  return {ok, "spacetime/mass^2 vs linear/mass^2" + table};
}

Outcome mass_conservation() {
  const SpatialGrid g(25.6, 4096);
  const auto d = GaussianData::gaussian(2.0, 1.0);
  const auto f0 = d.sample(g);
  const auto run = solve_concentrated(f0, sample_g_eps(Profile(ProfileKind::box), 0.1, g), TimeGrid(2.0, 512));
  std::vector<double> drift;
  for (std::size_t N : {256u, 512u, 1024u}) {
    const auto tr = solve_trace(d, CouplingMeasure::delta(), TimeGrid(2.0, N));
    const auto rec = reconstruct_nodes(f0, tr, CouplingMeasure::delta(), {});
    double worst = 0.0;
    for (double m : rec.mass) worst = std::max(worst, std::abs(m - rec.mass.front()) / rec.mass.front());
    drift.push_back(worst);
  }
  const bool ok = run.mass_drift() <= 1e-12 && drift[1] <= 1e-3 && drift[0] / drift[1] >= 2.0 && drift[1] / drift[2] >= 2.0;
  return {ok, fmt("concentrated %.2e; reconstruction h=1/128,1/256,1/512: %.3e %.3e %.3e", run.mass_drift(), drift[0],
                  drift[1], drift[2])};
}

struct ScatteringOutcome {
  Outcome criterion;
  double formula_gap;
};

ScatteringOutcome scattering() {
  const SpatialGrid g(204.8, 8192);
  const auto mu = CouplingMeasure::delta();
  const auto d = GaussianData::gaussian(2.0, 1.0);
  const auto f0 = d.sample(g);
  const auto tr = solve_trace(d, mu, TimeGrid::with_step(32.0, 1.0 / 64));
  std::vector<double> defects;
  double gap = 0.0;
  for (double T : {4.0, 8.0, 16.0}) {
    const auto s = scattering_state(f0, tr, mu, T);
    defects.push_back(s.defect);
    gap = std::max(gap, s.formula_gap);
  }
  std::vector<double> dist;
  for (double A : {1e-3, 2e-3}) {
    const auto dA = GaussianData::gaussian(A, 1.0);
    const auto fA = dA.sample(g);
    const auto trA = solve_trace(dA, mu, TimeGrid::with_step(16.0, 1.0 / 64));
    dist.push_back(l2_distance(scattering_state(fA, trA, mu, 8.0).state, fA));
  }
  const double cubic = dist[1] / dist[0] / 8.0;
  const double rel = defects.back() / l2_norm(f0);
  const bool ok = strictly_decreasing(defects) && rel <= 0.05 && std::abs(cubic - 1.0) <= 0.1;
  return {{ok, fmt("defects %.3e %.3e %.3e (final %.4f of norm), A^3 ratio/8 = %.4f", defects[0], defects[1],
                   defects[2], rel, cubic)},
          gap};
}

Outcome epsilon_convergence() {
  const SpatialGrid g(25.6, 4096);
  const TimeGrid t(2.0, 512);
  const auto d = GaussianData::gaussian(2.0, 1.0);
  const auto f0 = d.sample(g);
  const auto mu = CouplingMeasure::delta();
  const auto ref = reconstruct_trajectory(f0, solve_trace(d, mu, t), mu, 32, false);
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  bool ok = true;
  std::string detail;
  for (auto kind : {ProfileKind::box, ProfileKind::signed_two_bump}) {
    const auto rows = eps_convergence_study(f0, Profile(kind), eps, t, ref.nodes, ref.fields);
    std::vector<double> D;
    for (const auto& r : rows) D.push_back(r.sup_l2_distance);
    ok = ok && strictly_decreasing(D);
    if (kind == ProfileKind::box) ok = ok && D.back() <= D.front() / 3.0;
    detail += fmt(" %s: %.3e %.3e %.3e %.3e", to_string(kind).c_str(), D[0], D[1], D[2], D[3]);
  }
  return {ok, "D(eps)" + detail};
}

Outcome forcing_decay() {
  const SpatialGrid g(25.6, 4096);
  const auto d = GaussianData::gaussian(1.0, 1.0);
  const auto mu = CouplingMeasure::delta();
  const auto tr = solve_trace(d, mu, TimeGrid(2.0, 1024));
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  bool ok = true;
  std::string detail;
  for (auto kind : {ProfileKind::box, ProfileKind::signed_two_bump}) {
    const auto rows = forcing_difference_decay(d.sample(g), tr, mu, Profile(kind), eps, 8.0);
    std::vector<double> a, b;
    for (const auto& r : rows) {
      a.push_back(r.sup_l2);
      b.push_back(r.l4_weighted);
    }
    ok = ok && strictly_decreasing(a) && strictly_decreasing(b);
    detail += fmt(" %s: sup %.2e..%.2e, L4 %.2e..%.2e", to_string(kind).c_str(), a.front(), a.back(), b.front(),
                  b.back());
  }
  return {ok, detail.substr(1)};
}

Outcome symmetries() {
  TraceProblem p;
  p.data = GaussianData::gaussian(2.0, 1.0);
  p.times = TimeGrid(2.0, 512);
  const auto scale = check_scaling_symmetry(p, 2.0);
  const auto rev = check_trace_time_reversal(p);
  const auto uniq = check_uniqueness(p);
  const SpatialGrid g(25.6, 4096);
  const auto conc = check_concentrated_time_reversal(p.data.sample(g), sample_g_eps(Profile(ProfileKind::box), 0.1, g),
                                                     TimeGrid(2.0, 512));
  return {scale.pass && rev.pass && uniq.pass && conc.pass,
          fmt("scaling %.2e, trace reversal %.2e, concentrated reversal %.2e, two-tolerance %.2e", scale.lhs, rev.lhs,
              conc.lhs, uniq.lhs)};
}

Outcome cross_paths(double formula_gap) {
  TraceProblem p;
  p.data = GaussianData::gaussian(2.0, 1.0);
  p.times = TimeGrid(2.0, 512);
  const auto fast = check_fast_history(p);
  return {formula_gap <= 1e-10 && fast.pass,
          fmt("scattering formula gap %.2e, fast history %.2e", formula_gap, fast.lhs)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* title, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  };
  report(1, "kernel exactness", kernel_exactness);
  report(2, "linear unitarity and group law", linear_unitarity);
  report(3, "trace solver order", volterra_order);
  report(4, "spacetime inequality", spacetime_inequality);
  report(5, "amplitude ratio study", ratio_study);
  report(6, "mass conservation", mass_conservation);
  double gap = INFINITY;
  report(7, "scattering", [&] {
    auto s = scattering();
    gap = s.formula_gap;
    return s.criterion;
  });
  report(8, "epsilon convergence", epsilon_convergence);
  report(9, "forcing difference decay", forcing_decay);
  report(10, "symmetries", symmetries);
  report(11, "cross-path agreement", [&] { return cross_paths(gap); });
  return failures == 0 ? 0 : 1;
}
