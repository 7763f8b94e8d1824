#pragma once

// Serialization of fields and trajectories.
//
// Binary snapshot layout, little-endian:
//   uint64 n_points, float64 half_width, float64 t,
//   then n_points pairs (float64 re, float64 im).

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pointnls/error.hpp"
#include "pointnls/field.hpp"
#include "pointnls/trace_solver.hpp"

namespace pointnls {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");

inline void write_field_csv(const std::string& path, const WaveField& f) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.precision(17);
  out << "x,re,im\n";
  for (std::size_t j = 0; j < f.size(); ++j) out << f.grid().x(j) << ',' << f[j].real() << ',' << f[j].imag() << '\n';
}

inline void write_field_binary(const std::string& path, const WaveField& f, double t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  const std::uint64_t n = f.size();
  const double L = f.grid().half_width();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&L), sizeof L);
  out.write(reinterpret_cast<const char*>(&t), sizeof t);
  static_assert(sizeof(cplx) == 2 * sizeof(double));
  out.write(reinterpret_cast<const char*>(f.values().data()), static_cast<std::streamsize>(n * sizeof(cplx)));
}

struct Snapshot {
  WaveField field;
  double time;
};

inline Snapshot read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  std::uint64_t n = 0;
  double L = 0.0, t = 0.0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&L), sizeof L);
  in.read(reinterpret_cast<char*>(&t), sizeof t);
  if (!in || n == 0 || n > (std::uint64_t{1} << 32)) throw Error(ErrorKind::io, "malformed snapshot header in " + path);
  std::vector<cplx> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(cplx)));
  if (!in) throw Error(ErrorKind::io, "truncated snapshot " + path);
  return {WaveField(SpatialGrid(L, n), std::move(v)), t};
}

/// Sampled fields, traces and per-node diagnostics of one run.
struct TrajectoryRecord {
  nlohmann::ordered_json config;
  std::vector<double> sample_times;
  std::vector<WaveField> samples;
  std::optional<BoundaryTrace> trace;
  std::vector<double> times;  ///< node times of the per-node series
  std::vector<double> mass;
  std::vector<double> sup;

  void validate() const {
    if (sample_times.size() != samples.size()) throw Error(ErrorKind::validation, "sample times and fields differ in count");
    if (!sup.empty() && sup.size() != mass.size()) throw Error(ErrorKind::validation, "sup and mass series differ");
    if (times.size() != mass.size()) throw Error(ErrorKind::validation, "time and mass series differ");
    for (double t : sample_times)
      if (std::find(times.begin(), times.end(), t) == times.end())
        throw Error(ErrorKind::validation, "sample time " + std::to_string(t) + " is not a node");
  }

  /// Schema: {config, times, mass, sup, samples: [{t, half_width, n_points, re, im}],
  /// trace: {origin, direction, t_final, n_steps, locations, re: [[..]], im: [[..]]}}.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["config"] = config;
    j["times"] = times;
    j["mass"] = mass;
    j["sup"] = sup;
    j["samples"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::vector<double> re, im;
      for (const auto& v : samples[i].values()) {
        re.push_back(v.real());
        im.push_back(v.imag());
      }
      j["samples"].push_back({{"t", sample_times[i]},
                              {"half_width", samples[i].grid().half_width()},
                              {"n_points", samples[i].size()},
                              {"re", re},
                              {"im", im}});
    }
    if (trace) {
      nlohmann::ordered_json t;
      t["origin"] = trace->origin;
      t["direction"] = trace->direction;
      t["t_final"] = trace->grid.t_final();
      t["n_steps"] = trace->grid.n_steps();
      t["locations"] = trace->locations;
      auto& re = t["re"] = nlohmann::ordered_json::array();
      auto& im = t["im"] = nlohmann::ordered_json::array();
      for (const auto& s : trace->values) {
        std::vector<double> r, i;
        for (const auto& v : s) {
          r.push_back(v.real());
          i.push_back(v.imag());
        }
        re.push_back(r);
        im.push_back(i);
      }
      j["trace"] = t;
    }
    return j;
  }

  static TrajectoryRecord from_json(const nlohmann::ordered_json& j) {
    TrajectoryRecord r;
    r.config = j.at("config");
    r.times = j.at("times").get<std::vector<double>>();
    r.mass = j.at("mass").get<std::vector<double>>();
    r.sup = j.at("sup").get<std::vector<double>>();
    for (const auto& s : j.at("samples")) {
      const auto re = s.at("re").get<std::vector<double>>();
      const auto im = s.at("im").get<std::vector<double>>();
      std::vector<cplx> v(re.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = {re[k], im.at(k)};
      r.sample_times.push_back(s.at("t").get<double>());
      r.samples.emplace_back(SpatialGrid(s.at("half_width").get<double>(), s.at("n_points").get<std::size_t>()),
                             std::move(v));
    }
    if (j.contains("trace")) {
      const auto& t = j.at("trace");
      const auto n_steps = t.at("n_steps").get<std::size_t>();
      BoundaryTrace tr;
      tr.grid = TimeGrid(t.at("t_final").get<double>(), n_steps);
      tr.origin = t.at("origin").get<double>();
      tr.direction = t.at("direction").get<int>();
      tr.locations = t.at("locations").get<std::vector<double>>();
      for (std::size_t a = 0; a < t.at("re").size(); ++a) {
        const auto re = t.at("re")[a].get<std::vector<double>>();
        const auto im = t.at("im")[a].get<std::vector<double>>();
        std::vector<cplx> v(re.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = {re[k], im.at(k)};
        tr.values.push_back(std::move(v));
      }
      r.trace = std::move(tr);
    }
    r.validate();
    return r;
  }
};

}  // namespace pointnls
