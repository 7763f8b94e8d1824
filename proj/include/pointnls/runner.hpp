#pragma once

// Subcommand orchestration: every run reads one config, writes CSV/JSON
// artifacts into the output directory and a manifest carrying the config hash.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "pointnls/concentrated.hpp"
#include "pointnls/config.hpp"
#include "pointnls/diagnostics.hpp"
#include "pointnls/record.hpp"
#include "pointnls/reconstruction.hpp"
#include "pointnls/trace_solver.hpp"

namespace pointnls {

inline constexpr const char* version_string = "pointnls 1.0.0";

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_numerical = 3, exit_checks_failed = 4 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::step_size_too_large:
    case ErrorKind::truncation_domain:
    case ErrorKind::singular_kernel:
    case ErrorKind::invalid_field:
      return exit_numerical;
    default:
      return exit_validation;
  }
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; results keep index order.
template <class R>
std::vector<R> parallel_map(std::size_t count, std::size_t jobs, const std::function<R(std::size_t)>& fn) {
  std::vector<std::optional<R>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs <= 1 || count <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(jobs, count); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(count);
  for (auto& r : slots) out.push_back(std::move(*r));
  return out;
}

/// Writes CSV with a fixed header and full double precision.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw Error(ErrorKind::io, "cannot write " + path.string());
    out_ << std::setprecision(17);
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << vals), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct RunContext {
  ExperimentConfig cfg;
  std::filesystem::path out;
  std::size_t jobs = 1;
  std::string subcommand;
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::array();
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::ostream* log = &std::cout;

  std::filesystem::path artifact(const std::string& name, const std::string& columns) {
    artifacts.push_back({{"file", name}, {"columns", columns}});
    return out / name;
  }

  void write_manifest() const {
    nlohmann::ordered_json m;
    m["subcommand"] = subcommand;
    m["version"] = version_string;
    m["config_hash"] = config_hash(cfg);
    m["config"] = cfg.to_json();
    m["derived"] = cfg.derived();
    m["artifacts"] = artifacts;
    m["summary"] = summary;
    std::ofstream f(out / "manifest.json");
    if (!f) throw Error(ErrorKind::io, "cannot write manifest");
    f << m.dump(2) << '\n';
  }
};

namespace run {

inline const char* trace_columns = "t [time], atom_index, re_phi, im_phi [amplitude]";

inline void write_series(RunContext& ctx, const std::string& name, const TimeGrid& times, double origin,
                         const std::vector<double>& mass, const std::vector<double>& sup) {
  CsvWriter w(ctx.artifact(name, "t [time], mass [amplitude^2 length], sup_abs [amplitude]"), {"t", "mass", "sup_abs"});
  for (std::size_t n = 0; n < mass.size(); ++n) w.row(origin + times.t(n), mass[n], sup.empty() ? 0.0 : sup[n]);
}

inline void write_field(RunContext& ctx, const std::string& stem, const WaveField& f, double t) {
  write_field_csv(ctx.artifact(stem + ".csv", "x [length], re, im [amplitude]").string(), f);
  write_field_binary(ctx.artifact(stem + ".bin", "uint64 n, f64 L, f64 t, n x (f64 re, f64 im)").string(), f, t);
}

inline void require_boundary(const WaveField& f, double threshold, double t) {
  const double b = boundary_mass_fraction(f);
  if (b > threshold)
    throw Error(ErrorKind::truncation_domain, "boundary mass fraction " + std::to_string(b) + " at t = " +
                                                  std::to_string(t) + " exceeds " + std::to_string(threshold));
}

inline std::size_t sample_stride(std::size_t n_steps) { return std::max<std::size_t>(1, n_steps / 16); }

inline int solve_delta(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto data = c.data.build();
  const auto mu = c.atom_measure();
  const auto times = c.times();
  const auto f0 = data.sample(c.grid());
  const auto tr = solve_trace(data, mu, times, c.solver);
  write_trace_csv(ctx.artifact("trace.csv", trace_columns).string(), tr);
  const auto traj = reconstruct_trajectory(f0, tr, mu, sample_stride(times.n_steps()));
  write_series(ctx, "series.csv", times, 0.0, traj.mass, traj.sup);
  for (std::size_t i = 0; i < traj.nodes.size(); ++i) require_boundary(traj.fields[i], c.boundary_threshold, times.t(traj.nodes[i]));
  write_field(ctx, "field_final", traj.fields.back(), times.t_final());
  TrajectoryRecord rec;
  rec.config = c.to_json();
  rec.trace = tr;
  for (std::size_t n = 0; n < times.n_nodes(); ++n) rec.times.push_back(times.t(n));
  rec.mass = traj.mass;
  rec.sup = traj.sup;
  for (std::size_t i = 0; i < traj.nodes.size(); ++i) {
    rec.sample_times.push_back(times.t(traj.nodes[i]));
    rec.samples.push_back(traj.fields[i]);
  }
  std::ofstream(ctx.artifact("trajectory.json", "TrajectoryRecord JSON")) << rec.to_json().dump() << '\n';
  double drift = 0.0;
  for (double m : traj.mass) drift = std::max(drift, std::abs(m - traj.mass.front()));
  ctx.summary["spacetime_l4"] = tr.n_atoms() ? spacetime_l4(tr, 0) : 0.0;
  ctx.summary["mass_drift"] = traj.mass.front() > 0.0 ? drift / traj.mass.front() : drift;
  ctx.summary["picard_iterations"] = tr.total_iterations;
  *ctx.log << "solve-delta: " << times.n_steps() << " steps, relative mass drift "
           << ctx.summary["mass_drift"].get<double>() << '\n';
  return exit_ok;
}

inline int solve_concentrated_cmd(RunContext& ctx) {
  const auto& c = ctx.cfg;
  if (c.coupling.kind != "profile")
    throw Error(ErrorKind::validation, "coupling.kind: solve-concentrated needs a profile coupling");
  const auto grid = c.grid();
  const auto times = c.times();
  const auto f0 = c.data.build().sample(grid);
  const auto g = sample_g_eps(c.profile(c.coupling.profile), c.coupling.epsilon, grid);
  SplitStepConfig sc;
  sc.dealias = c.dealias;
  sc.boundary_threshold = c.boundary_threshold;
  sc.sample_stride = sample_stride(times.n_steps());
  const auto run = solve_concentrated(f0, g, times, sc);
  {
    CsvWriter w(ctx.artifact("origin_trace.csv", "t [time], re, im [amplitude]"), {"t", "re", "im"});
    for (std::size_t n = 0; n < run.origin_trace.size(); ++n)
      w.row(times.t(n), run.origin_trace[n].real(), run.origin_trace[n].imag());
  }
  write_series(ctx, "series.csv", times, 0.0, run.mass, run.sup);
  write_field(ctx, "field_final", run.samples.back(), times.t_final());
  TrajectoryRecord rec;
  rec.config = c.to_json();
  for (std::size_t n = 0; n < times.n_nodes(); ++n) rec.times.push_back(times.t(n));
  rec.mass = run.mass;
  rec.sup = run.sup;
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    rec.sample_times.push_back(times.t(run.sample_nodes[i]));
    rec.samples.push_back(run.samples[i]);
  }
  std::ofstream(ctx.artifact("trajectory.json", "TrajectoryRecord JSON")) << rec.to_json().dump() << '\n';
  ctx.summary["mass_drift"] = run.mass_drift();
  ctx.summary["weighted_l4"] = run.weighted_l4;
  ctx.summary["weighted_l4_abs"] = run.weighted_l4_abs;
  ctx.summary["discrete_integral"] = g.discrete_integral;
  *ctx.log << "solve-concentrated: eps " << g.epsilon << ", relative mass drift " << run.mass_drift() << '\n';
  return exit_ok;
}

/// Delta-coupling reference fields at every stride-th node.
inline SampledTrajectory delta_reference(const ExperimentConfig& c, const GaussianData& data, std::size_t stride) {
  const auto mu = CouplingMeasure::delta();
  const auto tr = solve_trace(data, mu, c.times(), c.solver);
  return reconstruct_trajectory(data.sample(c.grid()), tr, mu, stride, false);
}

inline int converge_eps(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto data = c.data.build();
  const auto grid = c.grid();
  const auto times = c.times();
  const auto ref = delta_reference(c, data, sample_stride(times.n_steps()));
  SplitStepConfig sc;
  sc.dealias = c.dealias;
  sc.boundary_threshold = c.boundary_threshold;
  const auto f0 = data.sample(grid);
  for (const auto& name : c.studies.profiles) {
    const auto rows = eps_convergence_study(f0, c.profile(name), c.studies.eps_list, times, ref.nodes, ref.fields, sc,
                                            c.studies.perturbation, ctx.jobs);
    CsvWriter w(ctx.artifact("eps_study_" + name + ".csv",
                             "epsilon [length], sup_t_L2_distance [amplitude length^1/2], mass_drift [relative], "
                             "boundary_mass [fraction]"),
                {"epsilon", "sup_t_L2_distance", "mass_drift", "boundary_mass"});
    std::vector<double> D;
    for (const auto& r : rows) {
      w.row(r.epsilon, r.sup_l2_distance, r.mass_drift, r.boundary_mass);
      D.push_back(r.sup_l2_distance);
      *ctx.log << "converge-eps " << name << ": eps " << r.epsilon << "  D " << r.sup_l2_distance << '\n';
    }
    ctx.summary[name] = {{"distances", D}, {"strictly_decreasing", strictly_decreasing(D)}};
  }
  return exit_ok;
}

inline int self_converge(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto data = c.data.build();
  const auto mu = c.atom_measure();
  const auto& hs = c.studies.h_list;
  const auto traces = parallel_map<BoundaryTrace>(hs.size(), ctx.jobs, [&](std::size_t i) {
    return solve_trace(data, mu, TimeGrid::with_step(c.t_final, hs[i]), c.solver);
  });
  CsvWriter w(ctx.artifact("trace_self_convergence.csv",
                           "h [time], sup_diff_to_next [amplitude], observed_order [dimensionless]"),
              {"h", "sup_diff_to_next", "observed_order"});
  std::vector<double> diffs;
  for (std::size_t i = 0; i + 1 < traces.size(); ++i) {
    const auto ratio = static_cast<std::size_t>(std::llround(hs[i] / hs[i + 1]));
    diffs.push_back(trace_sup_distance(traces[i], traces[i + 1], 1, ratio));
  }
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double d = i < diffs.size() ? diffs[i] : NAN;
    const double p = i + 1 < diffs.size() ? std::log(diffs[i] / diffs[i + 1]) / std::log(hs[i] / hs[i + 1]) : NAN;
    w.row(hs[i], d, p);
    if (!std::isnan(p)) ctx.summary["trace_orders"].push_back(p);
  }
  if (c.coupling.kind == "profile") {
    const auto grid = c.grid();
    const auto f0 = data.sample(grid);
    const auto g = sample_g_eps(c.profile(c.coupling.profile), c.coupling.epsilon, grid);
    SplitStepConfig sc;
    sc.dealias = c.dealias;
    sc.boundary_threshold = c.boundary_threshold;
    const auto finals = parallel_map<WaveField>(hs.size(), ctx.jobs, [&](std::size_t i) {
      return solve_concentrated(f0, g, TimeGrid::with_step(c.t_final, hs[i]), sc).samples.back();
    });
    CsvWriter s(ctx.artifact("split_step_self_convergence.csv",
                             "dt [time], l2_diff_to_next [amplitude length^1/2], observed_order [dimensionless]"),
                {"dt", "l2_diff_to_next", "observed_order"});
    std::vector<double> sd;
    for (std::size_t i = 0; i + 1 < finals.size(); ++i) sd.push_back(l2_distance(finals[i], finals[i + 1]));
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double d = i < sd.size() ? sd[i] : NAN;
      const double p = i + 1 < sd.size() ? std::log(sd[i] / sd[i + 1]) / std::log(hs[i] / hs[i + 1]) : NAN;
      s.row(hs[i], d, p);
      if (!std::isnan(p)) ctx.summary["split_step_orders"].push_back(p);
    }
  }
  *ctx.log << "self-converge: " << ctx.summary.dump() << '\n';
  return exit_ok;
}

inline int scattering(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto data = c.data.build();
  const auto mu = c.atom_measure();
  const auto grid = c.grid();
  const double h = c.times().dt();
  double tmax = 0.0;
  for (double T : c.studies.scattering_times) tmax = std::max(tmax, T);
  const auto times = TimeGrid::with_step(2.0 * tmax, h);
  const auto f0 = data.sample(grid);
  const auto tr = solve_trace(data, mu, times, c.solver);
  const auto states = parallel_map<ScatteringState>(c.studies.scattering_times.size(), ctx.jobs, [&](std::size_t i) {
    return scattering_state(f0, tr, mu, c.studies.scattering_times[i]);
  });
  CsvWriter w(ctx.artifact("scattering.csv",
                           "T [time], cauchy_defect, formula_gap, distance_to_initial [amplitude length^1/2], "
                           "boundary_mass [fraction], mass [amplitude^2 length]"),
              {"T", "cauchy_defect", "formula_gap", "distance_to_initial", "boundary_mass", "mass"});
  std::vector<double> defects;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    w.row(s.extraction_time, s.defect, s.formula_gap, l2_distance(s.state, f0), s.boundary_mass, s.mass);
    defects.push_back(s.defect);
  }
  write_field(ctx, "scattering_state", states.back().state, 0.0);
  ctx.summary["defects"] = defects;
  ctx.summary["initial_norm"] = l2_norm(f0);
  *ctx.log << "scattering: defects " << ctx.summary["defects"].dump() << '\n';
  return exit_ok;
}

struct SweepRow {
  double amplitude = 0.0, mass = 0.0, lhs = 0.0, rhs = 0.0;
};

inline int sweep(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto mu = c.atom_measure();
  const auto times = c.times();
  const auto grid = c.grid();
  const auto rows = parallel_map<SweepRow>(c.studies.amplitudes.size(), ctx.jobs, [&](std::size_t i) {
    const double A = c.studies.amplitudes[i];
    const auto data = c.data.build(A);
    const auto tr = solve_trace(data, mu, times, c.solver);
    const auto f0 = data.sample(grid);
    return SweepRow{A, mass(f0), spacetime_l4(tr, 0), linear_l4c_norm(f0, times).window_integral};
  });
  CsvWriter w(ctx.artifact("amplitude_sweep.csv",
                           "amplitude, mass, spacetime_l4, linear_l4c_pow4, ratio, spacetime_over_mass2, "
                           "linear_over_mass2 (dimensionless ratios)"),
              {"amplitude", "mass", "spacetime_l4", "linear_l4c_pow4", "ratio", "spacetime_over_mass2",
               "linear_over_mass2"});
  bool bounded = true;
  for (const auto& r : rows) {
    const double m2 = r.mass * r.mass;
    const double ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
    w.row(r.amplitude, r.mass, r.lhs, r.rhs, ratio, m2 > 0 ? r.lhs / m2 : 0.0, m2 > 0 ? r.rhs / m2 : 0.0);
    bounded = bounded && r.lhs <= r.rhs * (1.0 + c.studies.slack);
  }
  ctx.summary["bounded_by_linear_side"] = bounded;
  *ctx.log << "sweep: " << rows.size() << " amplitudes, bounded " << (bounded ? "yes" : "no") << '\n';
  return exit_ok;
}

/// Every diagnostic at the configured resolution.
inline std::vector<CheckReport> check_suite(const ExperimentConfig& c, std::size_t jobs) {
  const auto data = c.data.build();
  const auto mu = c.atom_measure();
  const auto grid = c.grid();
  const auto times = c.times();
  const auto f0 = data.sample(grid);
  TraceProblem prob{data, mu, times, c.solver};
  const double slack = c.studies.slack;

  std::vector<std::function<CheckReport()>> checks;
  checks.push_back([&] {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<double> ts;
    while (ts.size() < 100) {
      const double t = u(rng);
      if (t != 0.0) ts.push_back(t);
    }
    return check_kernel_identities(ts);
  });
  checks.push_back([] {
    const cplx k = kernel_at(1.0, 0.0);
    return make_report("kernel_reference_value", std::abs(k - cplx(0.19947114, -0.19947114)), 1e-8);
  });
  checks.push_back([&] {
    double drift = 0.0, group = 0.0;
    for (double t : {0.5, 1.0, c.t_final}) {
      const auto ft = evolve_free(f0, t);
      drift = std::max(drift, std::abs(mass(ft) - mass(f0)) / mass(f0));
      group = std::max(group, l2_distance(evolve_free(ft, -t), f0) / l2_norm(f0));
    }
    auto r = make_report("linear_unitarity", drift, 1e-13);
    r.details["group_law"] = group;
    r.pass = r.pass && group <= 1e-12;
    return r;
  });
  checks.push_back([&] {
    const auto tr = solve_trace(data, mu, times, c.solver);
    auto r = check_spacetime_bound(f0, tr, slack);
    const TimeGrid fine(times.t_final(), 2 * times.n_steps());
    const auto trf = solve_trace(data, mu, fine, c.solver);
    const auto rf = check_spacetime_bound(f0, trf, slack);
    r.trend = {r.margin() / r.rhs, rf.margin() / rf.rhs};
    r.pass = r.pass && rf.pass && (r.rhs == 0.0 || rf.margin() / rf.rhs >= r.margin() / r.rhs - slack);
    return r;
  });
  checks.push_back([&] {
    const auto tr = solve_trace(data, mu, times, c.solver);
    const auto rec = reconstruct_nodes(f0, tr, mu, {});
    return check_mass_conservation(rec.mass, 1e-3, "mass_conservation_reconstruction");
  });
  checks.push_back([&] {
    const CouplingMeasure none({Atom{0.0, 0.0}});
    const auto tr = solve_trace(data, none, times, c.solver);
    const auto rec = reconstruct_nodes(f0, tr, none, {});
    return check_mass_conservation(rec.mass, 1e-13, "mass_conservation_linear");
  });
  const double eps = c.coupling.kind == "profile" ? c.coupling.epsilon : c.studies.eps_list.back();
  const auto profile = c.profile(c.coupling.kind == "profile" ? c.coupling.profile : c.studies.profiles.front());
  checks.push_back([&] {
    SplitStepConfig sc;
    sc.dealias = c.dealias;
    sc.boundary_threshold = c.boundary_threshold;
    const auto run = solve_concentrated(f0, sample_g_eps(profile, eps, grid), times, sc);
    return check_mass_conservation(run.mass, 1e-12, "mass_conservation_concentrated");
  });
  checks.push_back([&] { return check_phase_covariance(prob); });
  checks.push_back([&] { return check_lipschitz_dependence(prob, c.studies.lipschitz_scales, c.seed); });
  checks.push_back([&] { return check_scaling_symmetry(prob, 2.0); });
  checks.push_back([&] { return check_uniqueness(prob); });
  checks.push_back([&] { return check_trace_time_reversal(prob); });
  checks.push_back([&] {
    return check_concentrated_time_reversal(f0, sample_g_eps(profile, eps, grid), times);
  });
  checks.push_back([&] { return check_fast_history(prob); });
  checks.push_back([&] {
    const auto tr = solve_trace(data, mu, times, c.solver);
    const double T = times.t(times.n_steps() / 2);
    return check_scattering_formulas(scattering_state(f0, tr, mu, T));
  });
  checks.push_back([&] {
    const auto tr = solve_trace(data, mu, times, c.solver);
    const auto traj = reconstruct_trajectory(f0, tr, mu, sample_stride(times.n_steps()), false);
    std::size_t violations = 0;
    double worst_top = 0.0;
    for (const auto& f : traj.fields) {
      double prev = INFINITY;
      for (double N = 0.0; N <= grid.nyquist(); N += grid.nyquist() / 32.0) {
        const double t = high_freq_tail(f, N);
        if (t > prev) ++violations;
        prev = t;
      }
      worst_top = std::max(worst_top, high_freq_tail(f, grid.nyquist() * 0.9) / l2_norm(f));
    }
    auto r = make_report("high_frequency_tail_monotone", static_cast<double>(violations), 0.0);
    r.details["relative_tail_at_0.9_nyquist"] = worst_top;
    return r;
  });
  checks.push_back([&] {
    const auto tr = solve_trace(data, mu, times, c.solver);
    const auto traj = reconstruct_trajectory(f0, tr, mu, sample_stride(times.n_steps()), false);
    std::map<std::size_t, WaveField> fields;
    for (std::size_t i = 0; i < traj.nodes.size(); ++i) fields.emplace(traj.nodes[i], traj.fields[i]);
    const std::size_t N = times.n_steps();
    const std::size_t mid = traj.nodes[traj.nodes.size() / 2];
    return make_report("duhamel_residual", verify_duhamel_residual(fields, tr, mu, {{0, N}, {mid, N}, {N, N}}), 1e-10);
  });
  checks.push_back([&] {
    const auto delta = CouplingMeasure::delta();
    const auto tr = solve_trace(data, delta, times, c.solver);
    std::size_t bad = 0;
    CheckReport r;
    r.name = "forcing_difference_decay";
    for (const auto& name : c.studies.profiles) {
      const auto rows = forcing_difference_decay(f0, tr, delta, c.profile(name), c.studies.eps_list, c.studies.cutoff);
      std::vector<double> a, b;
      for (const auto& row : rows) {
        a.push_back(row.sup_l2);
        b.push_back(row.l4_weighted);
        r.trend.push_back(row.sup_l2);
      }
      bad += !strictly_decreasing(a);
      bad += !strictly_decreasing(b);
    }
    r.lhs = static_cast<double>(bad);
    r.rhs = 0.0;
    return r.decide();
  });
  checks.push_back([&] {
    SplitStepConfig sc;
    sc.dealias = c.dealias;
    sc.boundary_threshold = c.boundary_threshold;
    const auto ref = delta_reference(c, data, sample_stride(times.n_steps()));
    std::size_t bad = 0;
    CheckReport r;
    r.name = "epsilon_convergence_monotone";
    for (const auto& name : c.studies.profiles) {
      const auto rows = eps_convergence_study(f0, c.profile(name), c.studies.eps_list, times, ref.nodes, ref.fields, sc,
                                              c.studies.perturbation);
      std::vector<double> D;
      for (const auto& row : rows) D.push_back(row.sup_l2_distance);
      r.trend.insert(r.trend.end(), D.begin(), D.end());
      bad += !strictly_decreasing(D);
    }
    r.lhs = static_cast<double>(bad);
    r.rhs = 0.0;
    return r.decide();
  });
  return parallel_map<CheckReport>(checks.size(), jobs, [&](std::size_t i) { return checks[i](); });
}

inline int check_suite_cmd(RunContext& ctx) {
  const auto reports = check_suite(ctx.cfg, ctx.jobs);
  {
    std::ofstream f(ctx.artifact("reports.jsonl", "one CheckReport JSON object per line"));
    write_reports_jsonl(f, reports);
  }
  std::ostringstream table;
  table << std::left << std::setw(36) << "check" << std::setw(6) << "pass" << std::setw(16) << "lhs" << "rhs\n";
  bool all = true;
  for (const auto& r : reports) {
    table << std::setw(36) << r.name << std::setw(6) << (r.pass ? "yes" : "NO") << std::setw(16) << std::setprecision(6)
          << r.lhs << r.rhs << '\n';
    all = all && r.pass;
  }
  std::ofstream(ctx.artifact("summary.txt", "human-readable table")) << table.str();
  *ctx.log << table.str();
  ctx.summary["all_pass"] = all;
  return all ? exit_ok : exit_checks_failed;
}

}  // namespace run

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"solve-delta", "solve-concentrated", "converge-eps", "self-converge",
                                              "check-suite", "scattering",         "sweep",        "validate"};
  return names;
}

/// Error report printed on failure.
inline std::string error_json(const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  return j.dump();
}

/// Runs a subcommand and maps failures to exit codes. Errors go to `err` as JSON.
inline int run_subcommand(const std::string& name, const std::string& config_path,
                          const std::optional<std::string>& out_dir, std::size_t jobs, std::ostream& log,
                          std::ostream& err) {
  try {
    RunContext ctx;
    ctx.subcommand = name;
    ctx.cfg = load_config(config_path);
    ctx.jobs = std::max<std::size_t>(1, jobs);
    ctx.log = &log;
    if (name == "validate") {
      nlohmann::ordered_json j;
      j["ok"] = true;
      j["config_hash"] = config_hash(ctx.cfg);
      j["config"] = ctx.cfg.to_json();
      j["derived"] = ctx.cfg.derived();
      log << j.dump(2) << '\n';
      return exit_ok;
    }
    ctx.out = out_dir ? *out_dir : ctx.cfg.output_directory;
    std::filesystem::create_directories(ctx.out);
    int code = exit_ok;
    if (name == "solve-delta") code = run::solve_delta(ctx);
    else if (name == "solve-concentrated") code = run::solve_concentrated_cmd(ctx);
    else if (name == "converge-eps") code = run::converge_eps(ctx);
    else if (name == "self-converge") code = run::self_converge(ctx);
    else if (name == "check-suite") code = run::check_suite_cmd(ctx);
    else if (name == "scattering") code = run::scattering(ctx);
    else if (name == "sweep") code = run::sweep(ctx);
    else throw Error(ErrorKind::validation, "unknown subcommand '" + name + "'");
    ctx.write_manifest();
    return code;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << error_json(std::string(to_string(e.kind())), e.what(), code) << '\n';
    return code;
  } catch (const std::filesystem::filesystem_error& e) {
    err << error_json("io", e.what(), exit_validation) << '\n';
    return exit_validation;
  }
}

}  // namespace pointnls
