#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pointnls/error.hpp"
#include "pointnls/grid.hpp"

namespace pointnls {

enum class ProfileKind { box, gaussian, signed_two_bump, tabulated };

inline std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::box: return "box";
    case ProfileKind::gaussian: return "gaussian";
    case ProfileKind::signed_two_bump: return "signed-two-bump";
    case ProfileKind::tabulated: return "tabulated";
  }
  return "unknown";
}

inline ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "box") return ProfileKind::box;
  if (s == "gaussian") return ProfileKind::gaussian;
  if (s == "signed-two-bump") return ProfileKind::signed_two_bump;
  if (s == "tabulated") return ProfileKind::tabulated;
  throw Error(ErrorKind::validation, "unknown profile '" + s + "'");
}

/// Base coupling profile g with integral 1.
///
///  box:             1 on (-1/2, 1/2), 1/2 at the two edges
///  gaussian:        pi^{-1/2} exp(-x^2)
///  signed-two-bump: 2 G(x; 1/2) - G(x; 1), G(x; s) = exp(-x^2/s^2) / (s sqrt(pi));
///                   a positive core and a negative shoulder, negative for |x| > 0.68
///  tabulated:       piecewise-linear table, zero outside its range
class Profile {
 public:
  explicit Profile(ProfileKind kind) : kind_(kind) {
    if (kind == ProfileKind::tabulated)
      throw Error(ErrorKind::validation, "tabulated profiles are built with Profile::tabulated");
  }

  static Profile tabulated(std::vector<double> xs, std::vector<double> gs) {
    if (xs.size() < 2 || xs.size() != gs.size())
      throw Error(ErrorKind::validation, "tabulated profile needs >= 2 (x, g) rows");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1])) throw Error(ErrorKind::validation, "tabulated profile x values must increase");
    Profile p;
    p.kind_ = ProfileKind::tabulated;
    p.xs_ = std::move(xs);
    p.gs_ = std::move(gs);
    return p;
  }

  /// Two whitespace-separated columns (x, g(x)); '#' starts a comment.
  static Profile from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open profile file " + path);
    std::vector<double> xs, gs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream row(line);
      double x, g;
      if (!(row >> x)) continue;
      std::string extra;
      if (!(row >> g) || (row >> extra))
        throw Error(ErrorKind::validation, path + ":" + std::to_string(lineno) + ": expected two columns");
      xs.push_back(x);
      gs.push_back(g);
    }
    return tabulated(std::move(xs), std::move(gs));
  }

  ProfileKind kind() const noexcept { return kind_; }
  std::string name() const { return to_string(kind_); }

  double operator()(double x) const {
    switch (kind_) {
      case ProfileKind::box: {
        const double ax = std::abs(x);
        if (std::abs(ax - 0.5) <= 1e-12) return 0.5;
        return ax < 0.5 ? 1.0 : 0.0;
      }
      case ProfileKind::gaussian:
        return std::exp(-x * x) / std::sqrt(pi);
      case ProfileKind::signed_two_bump:
        return 2.0 * bump(x, 0.5) - bump(x, 1.0);
      case ProfileKind::tabulated: {
        if (x < xs_.front() || x > xs_.back()) return 0.0;
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        if (it == xs_.end()) return gs_.back();
        const auto i = static_cast<std::size_t>(it - xs_.begin());
        const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
        return (1.0 - w) * gs_[i - 1] + w * gs_[i];
      }
    }
    return 0.0;
  }

  /// Half-width of the region outside which |g| < 1e-16 (or exactly 0).
  double support_radius() const {
    switch (kind_) {
      case ProfileKind::box: return 0.5;
      case ProfileKind::gaussian: return 6.1;
      case ProfileKind::signed_two_bump: return 6.1;
      case ProfileKind::tabulated: return std::max(std::abs(xs_.front()), std::abs(xs_.back()));
    }
    return 0.0;
  }

  /// ||g||_{L^1}, by composite Simpson on the support for the smooth families.
  double l1_norm() const {
    if (kind_ == ProfileKind::box || kind_ == ProfileKind::gaussian) return 1.0;
    const double r = support_radius();
    const std::size_t n = 200000;
    const double h = 2.0 * r / static_cast<double>(n);
    double s = std::abs((*this)(-r)) + std::abs((*this)(r));
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * std::abs((*this)(-r + h * static_cast<double>(i)));
    return s * h / 3.0;
  }

 private:
  Profile() = default;

  static double bump(double x, double s) { return std::exp(-(x * x) / (s * s)) / (s * std::sqrt(pi)); }

  ProfileKind kind_ = ProfileKind::box;
  std::vector<double> xs_, gs_;
};

/// Samples of g_eps(x) = g(x/eps)/eps on a grid.
struct Density {
  std::string profile;
  double epsilon = 0.0;
  SpatialGrid grid;
  std::vector<double> values;
  double discrete_integral = 0.0;  ///< dx * sum g_eps
  double discrete_l1 = 0.0;        ///< dx * sum |g_eps|
};

inline Density sample_g_eps(const Profile& g, double eps, const SpatialGrid& grid) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw Error(ErrorKind::domain, "epsilon must be positive, got " + std::to_string(eps));
  if (eps < 4.0 * grid.dx() * (1.0 - 1e-12))
    throw Error(ErrorKind::under_resolved_profile, "epsilon " + std::to_string(eps) + " < 4 dx = " +
                                                       std::to_string(4.0 * grid.dx()));
  if (g.support_radius() * eps >= grid.half_width())
    throw Error(ErrorKind::domain, "profile support at epsilon " + std::to_string(eps) + " exceeds the domain");
  Density d{g.name(), eps, grid, std::vector<double>(grid.size()), 0.0, 0.0};
  for (std::size_t j = 0; j < grid.size(); ++j) d.values[j] = g(grid.x(j) / eps) / eps;
  const auto integrate = [&] {
    double s = 0.0, a = 0.0;
    for (double v : d.values) {
      s += v;
      a += std::abs(v);
    }
    d.discrete_integral = grid.dx() * s;
    d.discrete_l1 = grid.dx() * a;
  };
  integrate();
  if (g.kind() == ProfileKind::tabulated) {
    if (!(std::abs(d.discrete_integral) > 0.0))
      throw Error(ErrorKind::validation, "tabulated profile has zero discrete integral");
    for (double& v : d.values) v /= d.discrete_integral;
    integrate();
  }
  return d;
}

struct Atom {
  double location = 0.0;
  double weight = 1.0;
};

/// Finitely many weighted atoms plus an optional sampled density.
class CouplingMeasure {
 public:
  CouplingMeasure() = default;

  explicit CouplingMeasure(std::vector<Atom> atoms, std::optional<Density> density = std::nullopt)
      : atoms_(std::move(atoms)), density_(std::move(density)) {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!std::isfinite(atoms_[i].location) || !std::isfinite(atoms_[i].weight))
        throw Error(ErrorKind::validation, "atom " + std::to_string(i) + " is not finite");
      for (std::size_t j = 0; j < i; ++j)
        if (atoms_[i].location == atoms_[j].location)
          throw Error(ErrorKind::validation, "atom locations must be distinct");
    }
  }

  /// The point coupling delta(x).
  static CouplingMeasure delta() { return CouplingMeasure({Atom{0.0, 1.0}}); }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::optional<Density>& density() const noexcept { return density_; }
  bool atoms_only() const noexcept { return !density_.has_value(); }

  std::vector<double> locations() const {
    std::vector<double> x;
    for (const auto& a : atoms_) x.push_back(a.location);
    return x;
  }

  double total_variation() const {
    double tv = 0.0;
    for (const auto& a : atoms_) tv += std::abs(a.weight);
    if (density_) tv += density_->discrete_l1;
    return tv;
  }

 private:
  std::vector<Atom> atoms_;
  std::optional<Density> density_;
};

}  // namespace pointnls
