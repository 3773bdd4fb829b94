#pragma once

// Compact domains N in a 2-dimensional ambient: an intersection of sublevel
// sets {g_i <= 0} whose boundary components are given as C^2 parametrized
// closed curves. Mean convexity is certified by sampling geodesic curvature.

#include "isovar/ambient.hpp"
#include "isovar/expression.hpp"

#include <string>
#include <vector>

namespace isovar {

/// Closed chart curve t -> (u(t), v(t)), t in [t0, t1). Periodic chart
/// coordinates may drift by whole periods over one traversal.
struct ParamCurve {
  std::string u_text;
  std::string v_text;
  double t0 = 0.0;
  double t1 = 2 * kPi;

  ParamCurve() = default;
  ParamCurve(std::string u, std::string v, double from = 0.0, double to = 2 * kPi)
      : u_text(std::move(u)), v_text(std::move(v)), t0(from), t1(to) {
    u_ = Expr::parse(u_text, {"t"});
    v_ = Expr::parse(v_text, {"t"});
    du_ = u_.derivative(0);
    dv_ = v_.derivative(0);
    ddu_ = du_.derivative(0);
    ddv_ = dv_.derivative(0);
  }

  Vec point(double t) const { return make_vec(u_(t), v_(t)); }
  Vec d1(double t) const { return make_vec(du_(t), dv_(t)); }
  Vec d2(double t) const { return make_vec(ddu_(t), ddv_(t)); }
  double param(int i, int n) const { return t0 + (t1 - t0) * i / n; }

  /// Same curve traversed backwards and starting at a shifted parameter.
  ParamCurve reparametrized(double shift, bool reverse) const {
    const std::string s = "(" + format_double(t0 + shift) + (reverse ? " - t" : " + t") + ")";
    auto sub = [&](const std::string& e) {
      std::string out;
      for (std::size_t i = 0; i < e.size(); ++i) {
        const bool ident_before = i > 0 && (std::isalnum(static_cast<unsigned char>(e[i - 1])) || e[i - 1] == '_');
        const bool ident_after =
            i + 1 < e.size() && (std::isalnum(static_cast<unsigned char>(e[i + 1])) || e[i + 1] == '_');
        if (e[i] == 't' && !ident_before && !ident_after) {
          out += s;
        } else {
          out += e[i];
        }
      }
      return out;
    };
    return ParamCurve(sub(u_text), sub(v_text), 0.0, t1 - t0);
  }

 private:
  Expr u_, v_, du_, dv_, ddu_, ddv_;
};

class Domain {
 public:
  Domain(AmbientPtr ambient, std::vector<std::string> constraints, std::vector<ParamCurve> boundary,
         std::string name = "domain")
      : ambient_(std::move(ambient)), constraint_text_(std::move(constraints)),
        boundary_(std::move(boundary)), name_(std::move(name)) {
    if (ambient_->dim() != 2) throw Error(ErrorKind::unsupported_dimension, "domains live in dim-2 ambients");
    const auto& names = coordinate_names();
    for (const auto& c : constraint_text_) constraints_.push_back(Expr::parse(c, names));
  }

  const Ambient& ambient() const { return *ambient_; }
  const AmbientPtr& ambient_ptr() const { return ambient_; }
  const std::vector<ParamCurve>& boundary() const { return boundary_; }
  const std::vector<std::string>& constraint_text() const { return constraint_text_; }
  const std::string& name() const { return name_; }

  /// Coordinate names usable in constraint expressions for this ambient's chart.
  std::vector<std::string> coordinate_names() const { return chart_coordinate_names(*ambient_); }

  static std::vector<std::string> chart_coordinate_names(const Ambient& a) {
    switch (a.family()) {
      case MetricFamily::round_sphere: return {"theta", "phi"};
      case MetricFamily::hyperbolic: return {"r", "phi"};
      case MetricFamily::revolution: return {"z", "theta"};
      case MetricFamily::product: return {"s", "z"};
      default: return a.dim() == 3 ? std::vector<std::string>{"x", "y", "z"} : std::vector<std::string>{"x", "y"};
    }
  }

  /// max_i g_i(p); the region is where this is <= 0.
  double level(const Vec& p) const {
    double m = -kInf;
    const double args[2] = {p(0), p(1)};
    for (const auto& c : constraints_) m = std::max(m, c.eval(args));
    return m;
  }

  bool contains(const Vec& p, double tol = 1e-9) const {
    if (!ambient_->in_chart(p)) return false;
    return level(p) <= tol;
  }

  /// Axis-aligned chart bounding box of the boundary samples.
  std::pair<Vec, Vec> bounding_box(int samples = 512) const {
    Vec lo = Vec::Constant(2, kInf), hi = Vec::Constant(2, -kInf);
    for (const auto& c : boundary_) {
      for (int i = 0; i < samples; ++i) {
        const Vec p = c.point(c.param(i, samples));
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
    const Chart& ch = ambient_->chart();
    for (int i = 0; i < 2; ++i) {
      if (ch.periodic[static_cast<std::size_t>(i)] && hi(i) - lo(i) > 0.5 * ch.period(i)) {
        lo(i) = ch.lo(i);
        hi(i) = ch.hi(i);
      }
    }
    return {lo, hi};
  }

 private:
  AmbientPtr ambient_;
  std::vector<std::string> constraint_text_;
  std::vector<Expr> constraints_;
  std::vector<ParamCurve> boundary_;
  std::string name_;
};

enum class Convexity { strictly_convex, convex, not_convex, minimal };

inline const char* to_string(Convexity c) {
  switch (c) {
    case Convexity::strictly_convex: return "strictly-convex";
    case Convexity::convex: return "convex";
    case Convexity::not_convex: return "not-convex";
    case Convexity::minimal: return "minimal";
  }
  return "?";
}

struct ComponentReport {
  double min_kappa = kInf;  // inward geodesic curvature
  double max_kappa = -kInf;
  double max_abs_kappa = 0.0;
  Convexity flag = Convexity::not_convex;
};

/// Geodesic curvature of the curve at parameter t, signed positive toward the
/// side `normal` points to. Returns {kappa, left unit normal}.
inline std::pair<double, Vec> geodesic_curvature(const Ambient& m, const ParamCurve& c, double t) {
  const Vec p = c.point(t);
  const Vec v = c.d1(t);
  const Vec acc = c.d2(t) + m.christoffel_contract(p, v, v);
  const Mat g = m.metric_raw(p);
  const double speed2 = v.dot(g * v);
  const Vec n = left_normal(g, v);
  return {acc.dot(g * n) / speed2, n};
}

namespace detail {

inline bool segments_cross(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  auto orient = [](const Vec& p, const Vec& q, const Vec& r) {
    return (q(0) - p(0)) * (r(1) - p(1)) - (q(1) - p(1)) * (r(0) - p(0));
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
}

}  // namespace detail

/// True if the sampled chart polyline of a closed curve crosses itself,
/// accounting for periodic copies.
inline bool self_intersects(const Ambient& m, const std::vector<Vec>& pts) {
  const std::size_t n = pts.size();
  if (n < 4) return false;
  std::vector<Vec> un(n + 1);
  un[0] = pts[0];
  for (std::size_t i = 1; i <= n; ++i) un[i] = un[i - 1] + m.delta(pts[i - 1], pts[i % n]);
  const Vec drift = un[n] - un[0];
  std::vector<Vec> shifts{Vec::Zero(2)};
  const Chart& ch = m.chart();
  for (int i = 0; i < 2; ++i) {
    if (!ch.periodic[static_cast<std::size_t>(i)]) continue;
    Vec s = Vec::Zero(2);
    s(i) = ch.period(i);
    shifts.push_back(s);
    shifts.push_back(-s);
  }
  // A winding curve is compared against its translate by the drift too.
  if (drift.norm() > 1e-9) {
    shifts.push_back(drift);
    shifts.push_back(-drift);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (const Vec& s : shifts) {
        const bool is_zero = s.norm() == 0.0;
        if (is_zero && (j == i + 1 || (i == 0 && j == n - 1))) continue;
        if (detail::segments_cross(un[i], un[i + 1], un[j] + s, un[j + 1] + s)) return true;
      }
    }
  }
  return false;
}

/// Per-component min/max inward geodesic curvature and the resulting convexity flag.
inline std::vector<ComponentReport> classify_domain(const Domain& domain, int samples = 512) {
  if (samples < 16) throw Error(ErrorKind::validation, "classify_domain needs at least 16 samples");
  const Ambient& m = domain.ambient();
  std::vector<ComponentReport> out;
  for (const auto& c : domain.boundary()) {
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) pts.push_back(c.point(c.param(i, samples)));
    if (self_intersects(m, pts)) throw Error(ErrorKind::invalid_domain, "self-intersecting boundary component");
    ComponentReport rep;
    for (int i = 0; i < samples; ++i) {
      const double t = c.param(i, samples);
      auto [kappa, n] = geodesic_curvature(m, c, t);
      const Vec p = c.point(t);
      const double eta = 1e-6;
      const double in_left = domain.level(p + eta * n);
      const double in_right = domain.level(p - eta * n);
      const double sign = in_left <= in_right ? 1.0 : -1.0;
      const double k = sign * kappa;
      rep.min_kappa = std::min(rep.min_kappa, k);
      rep.max_kappa = std::max(rep.max_kappa, k);
      rep.max_abs_kappa = std::max(rep.max_abs_kappa, std::abs(k));
    }
    constexpr double tol = 1e-6;
    if (rep.max_abs_kappa < tol) {
      rep.flag = Convexity::minimal;
    } else if (rep.min_kappa > tol) {
      rep.flag = Convexity::strictly_convex;
    } else if (rep.min_kappa >= -tol) {
      rep.flag = Convexity::convex;
    } else {
      rep.flag = Convexity::not_convex;
    }
    out.push_back(rep);
  }
  return out;
}

}  // namespace isovar
