#pragma once

// Experiment configuration: JSON with nested sections. Unknown keys are
// rejected; every effective value, defaults included, is echoed by to_json().

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pointnls/data.hpp"
#include "pointnls/error.hpp"
#include "pointnls/grid.hpp"
#include "pointnls/measure.hpp"
#include "pointnls/trace_solver.hpp"

namespace pointnls {

struct DataSpec {
  std::string family = "gaussian";  ///< gaussian | pair | odd-pair
  double amplitude = 2.0;
  double width = 1.0;               ///< psi0 = A exp(-x^2 / width^2)
  double offset = 0.0;              ///< packet centre (gaussian) or half separation (pairs)
  double velocity = 0.0;

  GaussianData build(double amplitude_override = NAN) const {
    const double A = std::isnan(amplitude_override) ? amplitude : amplitude_override;
    if (family == "gaussian") {
      GaussianPacket p;
      p.amplitude = A;
      p.a = width * width / 4.0;
      p.center = offset;
      p.velocity = velocity;
      return GaussianData({p});
    }
    if (family == "pair" || family == "odd-pair") return GaussianData::pair(A, width, offset, family == "odd-pair");
    throw Error(ErrorKind::validation, "data.family: unknown family '" + family + "'");
  }
};

struct CouplingSpec {
  std::string kind = "atoms";  ///< atoms | profile | zero
  std::vector<Atom> atoms{Atom{0.0, 1.0}};
  std::string profile = "box";
  std::string profile_file;
  double epsilon = 0.1;
};

struct StudySpec {
  std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
  std::vector<std::string> profiles{"box", "signed-two-bump"};
  std::vector<double> h_list{1.0 / 128, 1.0 / 256, 1.0 / 512};
  std::vector<double> amplitudes{1e-3, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> scattering_times{4.0, 8.0, 16.0};
  std::vector<double> lipschitz_scales{1e-3, 1e-4, 1e-5};
  double cutoff = 8.0;
  double perturbation = 0.0;
  double slack = 1e-2;
};

struct ExperimentConfig {
  double half_width = 25.6;
  std::size_t n_points = 4096;
  double t_final = 2.0;
  std::size_t n_steps = 512;
  DataSpec data;
  CouplingSpec coupling;
  SolverOptions solver;
  double dealias = 2.0 / 3.0;
  double boundary_threshold = 1e-2;
  StudySpec studies;
  std::string output_directory = "out";
  std::uint64_t seed = 20240611;

  SpatialGrid grid() const { return SpatialGrid(half_width, n_points); }
  TimeGrid times() const { return TimeGrid(t_final, n_steps); }

  Profile profile(const std::string& name) const {
    const auto kind = profile_kind_from_string(name);
    if (kind == ProfileKind::tabulated) {
      if (coupling.profile_file.empty())
        throw Error(ErrorKind::validation, "coupling.profile_file: required for the tabulated profile");
      return Profile::from_file(coupling.profile_file);
    }
    return Profile(kind);
  }

  CouplingMeasure atom_measure() const {
    if (coupling.kind == "zero") return CouplingMeasure({Atom{0.0, 0.0}});
    if (coupling.kind == "atoms") return CouplingMeasure(coupling.atoms);
    return CouplingMeasure::delta();
  }

  /// Re-runs every guard of the solver modules; throws naming the field.
  void validate() const {
    const auto field = [](const std::string& name, const std::string& msg) {
      return Error(ErrorKind::validation, name + ": " + msg);
    };
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw field("grid.half_width", "must be positive");
    if (n_points < 8 || !is_power_of_two(n_points))
      throw field("grid.n_points", "must be a power of two >= 8, got " + std::to_string(n_points));
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw field("time.t_final", "must be positive");
    if (n_steps < 1) throw field("time.n_steps", "must be >= 1");
    if (!std::isfinite(data.amplitude)) throw field("data.amplitude", "must be finite");
    if (!(data.width > 0.0)) throw field("data.width", "must be positive");
    if (data.family != "gaussian" && data.family != "pair" && data.family != "odd-pair")
      throw field("data.family", "must be gaussian, pair or odd-pair");
    if (!(solver.tol > 0.0)) throw field("solver.tol", "must be positive");
    if (solver.max_iter < 1) throw field("solver.max_iter", "must be >= 1");
    if (solver.start_order < 0) throw field("solver.start_order", "must be >= 0");
    if (!(dealias > 0.0 && dealias <= 1.0)) throw field("solver.dealias", "must lie in (0, 1]");
    if (!(boundary_threshold > 0.0)) throw field("solver.boundary_threshold", "must be positive");
    const auto g = grid();
    const auto measure = atom_measure();
    for (const auto& a : measure.atoms())
      if (!g.contains(a.location)) throw field("coupling.atoms", "atom outside [-L, L)");
    const double min_eps = 4.0 * g.dx() * (1.0 - 1e-12);
    const auto check_eps = [&](const std::string& name, double e) {
      if (!(e > 0.0)) throw field(name, "epsilon must be positive");
      if (e < min_eps)
        throw Error(ErrorKind::under_resolved_profile, name + ": epsilon " + std::to_string(e) +
                                                           " is below 4 dx = " + std::to_string(4.0 * g.dx()));
    };
    if (coupling.kind == "profile") {
      check_eps("coupling.epsilon", coupling.epsilon);
      profile(coupling.profile);
    } else if (coupling.kind != "atoms" && coupling.kind != "zero") {
      throw field("coupling.kind", "must be atoms, profile or zero");
    }
    for (double e : studies.eps_list) check_eps("studies.eps_list", e);
    for (const auto& p : studies.profiles) profile(p);
    for (double h : studies.h_list) {
      if (!(h > 0.0)) throw field("studies.h_list", "steps must be positive");
      TimeGrid::with_step(t_final, h);
    }
    for (double T : studies.scattering_times) {
      if (!(T > 0.0)) throw field("studies.scattering_times", "must be positive");
      TimeGrid::with_step(T, t_final / static_cast<double>(n_steps));
    }
    if (!(studies.cutoff >= 0.0) || studies.cutoff > g.nyquist())
      throw field("studies.cutoff", "must lie in [0, Nyquist]");
    if (!(studies.slack >= 0.0)) throw field("studies.slack", "must be nonnegative");
    for (double s : studies.lipschitz_scales)
      if (!(s > 0.0)) throw field("studies.lipschitz_scales", "must be positive");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["grid"] = {{"half_width", half_width}, {"n_points", n_points}};
    j["time"] = {{"t_final", t_final}, {"n_steps", n_steps}};
    j["data"] = {{"family", data.family},
                 {"amplitude", data.amplitude},
                 {"width", data.width},
                 {"offset", data.offset},
                 {"velocity", data.velocity}};
    auto atoms = nlohmann::ordered_json::array();
    for (const auto& a : coupling.atoms) atoms.push_back({{"location", a.location}, {"weight", a.weight}});
    j["coupling"] = {{"kind", coupling.kind},
                     {"atoms", atoms},
                     {"profile", coupling.profile},
                     {"profile_file", coupling.profile_file},
                     {"epsilon", coupling.epsilon}};
    j["solver"] = {{"tol", solver.tol},
                   {"max_iter", solver.max_iter},
                   {"max_halvings", solver.max_halvings},
                   {"fast_history", solver.fast_history},
                   {"start_order", solver.start_order},
                   {"dealias", dealias},
                   {"boundary_threshold", boundary_threshold}};
    j["studies"] = {{"eps_list", studies.eps_list},
                    {"profiles", studies.profiles},
                    {"h_list", studies.h_list},
                    {"amplitudes", studies.amplitudes},
                    {"scattering_times", studies.scattering_times},
                    {"lipschitz_scales", studies.lipschitz_scales},
                    {"cutoff", studies.cutoff},
                    {"perturbation", studies.perturbation},
                    {"slack", studies.slack}};
    j["output"] = {{"directory", output_directory}};
    j["seed"] = seed;
    return j;
  }

  /// Derived quantities reported by `validate`.
  nlohmann::ordered_json derived() const {
    const auto g = grid();
    const auto t = times();
    return {{"dx", g.dx()},
            {"dt", t.dt()},
            {"nyquist", g.nyquist()},
            {"min_epsilon", 4.0 * g.dx()},
            {"n_nodes", t.n_nodes()},
            {"atoms", atom_measure().atoms().size()},
            {"total_variation", atom_measure().total_variation()}};
  }
};

namespace detail {

using json = nlohmann::ordered_json;

inline void reject_unknown(const json& obj, const std::string& where, std::set<std::string> known) {
  if (!obj.is_object()) throw Error(ErrorKind::validation, where + ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (!known.count(k)) throw Error(ErrorKind::validation, where + "." + k + ": unknown key");
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::ordered_json& j) {
  using detail::read;
  ExperimentConfig c;
  detail::reject_unknown(j, "config", {"grid", "time", "data", "coupling", "solver", "studies", "output", "seed"});
  if (j.contains("grid")) {
    const auto& s = j["grid"];
    detail::reject_unknown(s, "grid", {"half_width", "n_points"});
    read(s, "grid", "half_width", c.half_width);
    read(s, "grid", "n_points", c.n_points);
  }
  if (j.contains("time")) {
    const auto& s = j["time"];
    detail::reject_unknown(s, "time", {"t_final", "n_steps"});
    read(s, "time", "t_final", c.t_final);
    read(s, "time", "n_steps", c.n_steps);
  }
  if (j.contains("data")) {
    const auto& s = j["data"];
    detail::reject_unknown(s, "data", {"family", "amplitude", "width", "offset", "velocity"});
    read(s, "data", "family", c.data.family);
    read(s, "data", "amplitude", c.data.amplitude);
    read(s, "data", "width", c.data.width);
    read(s, "data", "offset", c.data.offset);
    read(s, "data", "velocity", c.data.velocity);
  }
  if (j.contains("coupling")) {
    const auto& s = j["coupling"];
    detail::reject_unknown(s, "coupling", {"kind", "atoms", "profile", "profile_file", "epsilon"});
    read(s, "coupling", "kind", c.coupling.kind);
    read(s, "coupling", "profile", c.coupling.profile);
    read(s, "coupling", "profile_file", c.coupling.profile_file);
    read(s, "coupling", "epsilon", c.coupling.epsilon);
    if (s.contains("atoms")) {
      c.coupling.atoms.clear();
      for (std::size_t i = 0; i < s["atoms"].size(); ++i) {
        const auto& a = s["atoms"][i];
        const std::string where = "coupling.atoms[" + std::to_string(i) + "]";
        detail::reject_unknown(a, where, {"location", "weight"});
        Atom atom;
        read(a, where, "location", atom.location);
        read(a, where, "weight", atom.weight);
        c.coupling.atoms.push_back(atom);
      }
    }
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    detail::reject_unknown(s, "solver", {"tol", "max_iter", "max_halvings", "fast_history", "start_order", "dealias",
                                         "boundary_threshold"});
    read(s, "solver", "tol", c.solver.tol);
    read(s, "solver", "max_iter", c.solver.max_iter);
    read(s, "solver", "max_halvings", c.solver.max_halvings);
    read(s, "solver", "fast_history", c.solver.fast_history);
    read(s, "solver", "start_order", c.solver.start_order);
    read(s, "solver", "dealias", c.dealias);
    read(s, "solver", "boundary_threshold", c.boundary_threshold);
  }
  if (j.contains("studies")) {
    const auto& s = j["studies"];
    detail::reject_unknown(s, "studies", {"eps_list", "profiles", "h_list", "amplitudes", "scattering_times",
                                          "lipschitz_scales", "cutoff", "perturbation", "slack"});
    read(s, "studies", "eps_list", c.studies.eps_list);
    read(s, "studies", "profiles", c.studies.profiles);
    read(s, "studies", "h_list", c.studies.h_list);
    read(s, "studies", "amplitudes", c.studies.amplitudes);
    read(s, "studies", "scattering_times", c.studies.scattering_times);
    read(s, "studies", "lipschitz_scales", c.studies.lipschitz_scales);
    read(s, "studies", "cutoff", c.studies.cutoff);
    read(s, "studies", "perturbation", c.studies.perturbation);
    read(s, "studies", "slack", c.studies.slack);
  }
  if (j.contains("output")) {
    const auto& s = j["output"];
    detail::reject_unknown(s, "output", {"directory"});
    read(s, "output", "directory", c.output_directory);
  }
  read(j, "config", "seed", c.seed);
  c.validate();
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::validation, std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// 64-bit FNV-1a over the bytes of a string.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(c.to_json().dump());
  return os.str();
}

}  // namespace pointnls
