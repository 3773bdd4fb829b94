#pragma once

// Curve-shortening flow of closed polylines in Riemannian surfaces. Forward
// Euler with a CFL step and arc-length remeshing; extinction and stall
// detection, Jacobi stability of the limit, the avoidance monitor.

#include "isovar/domain.hpp"
#include "isovar/mesh.hpp"
#include "isovar/test_family.hpp"
#include "isovar/varifold.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace isovar {

struct FlowConfig {
  double beta = 0.2;             // dt = beta h^2 / max(1, speed h)
  double delta = 0.0;            // velocity H - delta nu
  double epsilon = 0.1;          // tube half-width for the perturbed variant
  double split_ratio = 2.0;      // remesh when a segment exceeds split_ratio * target spacing
  double collapse_ratio = 0.5;   // or falls below collapse_ratio * target spacing
  int min_vertices = 12;
  double extinction_fraction = 1e-3;  // extinct when length < fraction * initial length
  double stall_tol = 1e-6;       // |dL| / L per window
  double tol_H = 1e-4;
  int window = 50;               // steps per plateau window
  int plateau_windows = 3;
  double t_max = 50.0;
  double horizon = 0.0;          // > 0: run to this time, ignoring stalls
  int vertices = 128;            // initial vertices per boundary component
  int snapshot_stride = 10;      // steps between recorded snapshots (0: none)
  std::size_t history_capacity = 4096;
  int residual_degree = 4;

  void validate() const {
    if (!(beta > 0)) throw Error(ErrorKind::validation, "beta must be positive");
    if (!(delta >= 0)) throw Error(ErrorKind::validation, "delta must be nonnegative");
    if (!(epsilon > 0)) throw Error(ErrorKind::validation, "epsilon must be positive");
    if (!(split_ratio > 1) || !(collapse_ratio > 0) || !(collapse_ratio < 1))
      throw Error(ErrorKind::validation, "remesh ratios out of range");
    if (min_vertices < 4 || vertices < min_vertices) throw Error(ErrorKind::validation, "too few vertices");
    if (window < 1 || plateau_windows < 1) throw Error(ErrorKind::validation, "window sizes must be positive");
    if (!(t_max > 0) || !(horizon >= 0)) throw Error(ErrorKind::validation, "time limits must be positive");
  }
};

/// One closed curve of M_t. `side` is +1 when the region K_t lies to the
/// left of the traversal, -1 when it lies to the right.
struct FlowCurve {
  std::vector<Vec> pts;
  int side = 1;
  double initial_length = 0.0;
  double h_ref = 0.0;
};

struct HistoryEntry {
  double t = 0.0;
  double length = 0.0;
  double max_H = 0.0;
  double min_spacing = 0.0;
};

struct FlowState {
  AmbientPtr ambient;
  double t = 0.0;
  std::vector<FlowCurve> curves;
  std::deque<HistoryEntry> history;
  std::vector<double> extinction_times;  // one per curve that has vanished
  long steps = 0;
  double last_dt = 0.0;
  int rejected_steps = 0;
  bool nesting_ok = true;
};

struct Snapshot {
  double t = 0.0;
  std::vector<std::vector<Vec>> curves;
};

namespace detail {

inline MeshSurface curve_mesh(const AmbientPtr& m, const std::vector<Vec>& pts) {
  std::vector<MeshSurface::Element> el;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) el.push_back({i, (i + 1) % n, 0});
  return MeshSurface(1, m, pts, std::move(el));
}

inline double curve_length(const Ambient& m, const std::vector<Vec>& pts) {
  CompensatedSum s;
  for (std::size_t i = 0; i < pts.size(); ++i) s.add(MeshSurface::chord_length(m, pts[i], pts[(i + 1) % pts.size()]));
  return s.value();
}

inline double min_spacing(const Ambient& m, const std::vector<Vec>& pts) {
  double h = kInf;
  for (std::size_t i = 0; i < pts.size(); ++i)
    h = std::min(h, MeshSurface::chord_length(m, pts[i], pts[(i + 1) % pts.size()]));
  return h;
}

/// Uniform arc-length resampling when a segment leaves
/// [collapse_ratio, split_ratio] times the target spacing L / n*, with
/// n* = max(min_vertices, L / h_ref).
inline std::vector<Vec> remesh(const Ambient& m, const std::vector<Vec>& pts, double h_ref, const FlowConfig& cfg) {
  const std::size_t n = pts.size();
  std::vector<double> len(n);
  double L = 0;
  for (std::size_t i = 0; i < n; ++i) L += len[i] = MeshSurface::chord_length(m, pts[i], pts[(i + 1) % n]);
  const auto target = static_cast<std::size_t>(std::max<double>(cfg.min_vertices, std::round(L / h_ref)));
  const double h = L / static_cast<double>(target);
  const auto [lo, hi] = std::minmax_element(len.begin(), len.end());
  if (*lo >= cfg.collapse_ratio * h && *hi <= cfg.split_ratio * h) return pts;
  std::vector<Vec> out;
  out.reserve(target);
  std::size_t seg = 0;
  double acc = 0;  // arc length at the start of `seg`
  for (std::size_t j = 0; j < target; ++j) {
    const double s = h * static_cast<double>(j);
    while (seg + 1 < n && acc + len[seg] <= s) acc += len[seg++];
    const double u = len[seg] > 0 ? std::clamp((s - acc) / len[seg], 0.0, 1.0) : 0.0;
    out.push_back(m.wrap(pts[seg] + u * m.delta(pts[seg], pts[(seg + 1) % n])));
  }
  return out;
}

/// True if any two chart segments of the closed curves cross, periodic
/// copies included. Sort-and-sweep along the axis of largest extent.
inline bool any_crossing(const Ambient& m, const std::vector<const std::vector<Vec>*>& curves) {
  struct Seg {
    Vec a, b;
    double lo0, hi0, lo1, hi1;
  };
  std::vector<Seg> segs;
  auto add = [&](const Vec& a, const Vec& b) {
    segs.push_back({a, b, std::min(a(0), b(0)), std::max(a(0), b(0)), std::min(a(1), b(1)), std::max(a(1), b(1))});
  };
  std::vector<Vec> shifts{Vec::Zero(2)};
  const Chart& ch = m.chart();
  for (int i = 0; i < 2; ++i) {
    if (!ch.periodic[static_cast<std::size_t>(i)]) continue;
    Vec s = Vec::Zero(2);
    s(i) = ch.period(i);
    shifts.push_back(s);
    shifts.push_back(-s);
  }
  for (const auto* c : curves) {
    const std::size_t n = c->size();
    Vec a = (*c)[0];
    for (std::size_t i = 0; i < n; ++i) {
      const Vec b = a + m.delta((*c)[i], (*c)[(i + 1) % n]);
      for (const Vec& s : shifts) add(a + s, b + s);
      a = b;
    }
  }
  double ext[2] = {0, 0};
  for (int axis = 0; axis < 2; ++axis) {
    double lo = kInf, hi = -kInf;
    for (const auto& s : segs) {
      lo = std::min(lo, axis ? s.lo1 : s.lo0);
      hi = std::max(hi, axis ? s.hi1 : s.hi0);
    }
    ext[axis] = hi - lo;
  }
  const bool ax1 = ext[1] > ext[0];
  auto lo_of = [&](const Seg& s) { return ax1 ? s.lo1 : s.lo0; };
  auto hi_of = [&](const Seg& s) { return ax1 ? s.hi1 : s.hi0; };
  std::sort(segs.begin(), segs.end(), [&](const Seg& x, const Seg& y) { return lo_of(x) < lo_of(y); });
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Seg& s = segs[i];
    std::erase_if(active, [&](std::size_t j) { return hi_of(segs[j]) < lo_of(s); });
    for (std::size_t j : active) {
      const Seg& o = segs[j];
      const bool overlap = ax1 ? (o.lo0 <= s.hi0 && s.lo0 <= o.hi0) : (o.lo1 <= s.hi1 && s.lo1 <= o.hi1);
      if (overlap && segments_cross(s.a, s.b, o.a, o.b)) return true;
    }
    active.push_back(i);
  }
  return false;
}

inline bool curves_cross(const Ambient& m, const std::vector<Vec>& a, const std::vector<Vec>& b) {
  return any_crossing(m, {&a, &b});
}

/// Region side of a closed curve: +1 if points just left of it lie in the domain.
inline int region_side(const Domain& domain, const std::vector<Vec>& pts) {
  const Ambient& m = domain.ambient();
  int votes = 0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 16)) {
    const Vec t = m.delta(pts[(i + n - 1) % n], pts[(i + 1) % n]);
    const Vec nl = left_normal(m.metric_raw(pts[i]), t);
    const double h = 1e-4 * std::max(1.0, t.norm());
    votes += domain.contains(m.wrap(pts[i] + h * nl), 0.0) ? 1 : -1;
  }
  return votes >= 0 ? 1 : -1;
}

}  // namespace detail

inline FlowCurve make_flow_curve(const Ambient& m, std::vector<Vec> pts, int side) {
  FlowCurve c;
  c.pts = std::move(pts);
  c.side = side;
  c.initial_length = detail::curve_length(m, c.pts);
  c.h_ref = c.initial_length / static_cast<double>(c.pts.size());
  return c;
}

inline double total_length(const FlowState& s) {
  double l = 0;
  for (const auto& c : s.curves) l += detail::curve_length(*s.ambient, c.pts);
  return l;
}

/// One forward Euler step with velocity H - delta nu (nu the outward normal of
/// K_t). Self-intersection halves dt up to 10 times before a topology error.
inline FlowState step(const FlowState& state, const FlowConfig& cfg) {
  const Ambient& m = *state.ambient;
  std::vector<std::vector<Vec>> velocity(state.curves.size());
  std::vector<std::vector<Vec>> outward(state.curves.size());
  double max_speed = 0, max_H = 0, h = kInf;
  for (std::size_t c = 0; c < state.curves.size(); ++c) {
    const auto& curve = state.curves[c];
    const MeshSurface mesh = detail::curve_mesh(state.ambient, curve.pts);
    const CurvatureField f = mean_curvature(mesh);
    const std::size_t n = curve.pts.size();
    velocity[c].resize(n);
    outward[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec& p = curve.pts[i];
      const Vec t = m.delta(curve.pts[(i + n - 1) % n], curve.pts[(i + 1) % n]);
      const Vec nu = -curve.side * left_normal(m.metric_raw(p), t);
      outward[c][i] = nu;
      velocity[c][i] = f.H[i] - cfg.delta * nu;
      const double hn = norm(m, p, f.H[i]);
      max_H = std::max(max_H, hn);
      max_speed = std::max(max_speed, hn + cfg.delta);
    }
    h = std::min(h, detail::min_spacing(m, curve.pts));
  }
  double dt = cfg.beta * h * h / std::max(1.0, max_speed * h);
  for (int attempt = 0; attempt <= 10; ++attempt, dt *= 0.5) {
    FlowState next = state;
    bool ok = true;
    for (std::size_t c = 0; c < state.curves.size() && ok; ++c) {
      auto& pts = next.curves[c].pts;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec d = dt * velocity[c][i];
        if (cfg.delta == 0 && inner(m, pts[i], d, outward[c][i]) > 1e-12 * dt) next.nesting_ok = false;
        pts[i] = m.wrap(pts[i] + d);
      }
    }
    std::vector<const std::vector<Vec>*> all;
    for (const auto& c : next.curves) all.push_back(&c.pts);
    if (ok && detail::any_crossing(m, all)) ok = false;
    if (!ok) {
      ++next.rejected_steps;
      continue;
    }
    for (auto& c : next.curves) c.pts = detail::remesh(m, c.pts, c.h_ref, cfg);
    next.t = state.t + dt;
    next.last_dt = dt;
    ++next.steps;
    // extinction
    std::vector<FlowCurve> alive;
    double length = 0;
    for (auto& c : next.curves) {
      const double l = detail::curve_length(m, c.pts);
      if (l < cfg.extinction_fraction * c.initial_length) {
        next.extinction_times.push_back(next.t);
      } else {
        length += l;
        alive.push_back(std::move(c));
      }
    }
    next.curves = std::move(alive);
    next.history.push_back({next.t, length, max_H, h});
    while (next.history.size() > cfg.history_capacity) next.history.pop_front();
    return next;
  }
  throw Error(ErrorKind::topology, "self-intersection persists after 10 step halvings at t = " + format_double(state.t));
}

// ---- stability -------------------------------------------------------------

struct StabilityProblem {
  double length = 0.0;
  std::vector<double> q;  // Ric(nu, nu) + |A|^2 at uniform arc-length samples
};

struct StabilityResult {
  double eigenvalue = 0.0;
  std::vector<double> eigenfunction;
  bool stable() const { return eigenvalue >= -1e-6; }
};

/// Smallest eigenpair of -f'' - q f with periodic central differences.
inline StabilityResult stability_spectrum(const StabilityProblem& p) {
  const int n = static_cast<int>(p.q.size());
  if (n < 64) throw Error(ErrorKind::validation, "stability grid must have at least 64 points");
  if (!(p.length > 0)) throw Error(ErrorKind::validation, "geodesic length must be positive");
  const double h = p.length / n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2 / (h * h) - p.q[static_cast<std::size_t>(i)];
    a(i, (i + 1) % n) -= 1 / (h * h);
    a(i, (i + n - 1) % n) -= 1 / (h * h);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  StabilityResult r;
  r.eigenvalue = es.eigenvalues()(0);
  Eigen::VectorXd f = es.eigenvectors().col(0);
  if (f.sum() < 0) f = -f;
  r.eigenfunction.assign(f.data(), f.data() + n);
  return r;
}

/// q = K + kappa^2 sampled at `grid` arc-length positions of a closed polyline.
inline StabilityProblem stability_problem(const MeshSurface& curve, int grid = 256) {
  if (curve.k() != 1 || !curve.closed()) throw Error(ErrorKind::validation, "stability needs a closed curve");
  const Ambient& m = curve.ambient();
  const CurvatureField f = mean_curvature(curve);
  const auto& V = curve.vertices();
  const std::size_t n = V.size();
  std::vector<double> s(n + 1, 0.0), qv(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i + 1] = s[i] + MeshSurface::chord_length(m, V[i], V[(i + 1) % n]);
    qv[i] = m.gauss_curvature(V[i]) + f.signed_kappa[i] * f.signed_kappa[i];
  }
  StabilityProblem p;
  p.length = s[n];
  p.q.resize(static_cast<std::size_t>(grid));
  std::size_t seg = 0;
  for (int j = 0; j < grid; ++j) {
    const double x = p.length * j / grid;
    while (seg + 1 < n && s[seg + 1] <= x) ++seg;
    const double u = (x - s[seg]) / (s[seg + 1] - s[seg]);
    p.q[static_cast<std::size_t>(j)] = (1 - u) * qv[seg] + u * qv[(seg + 1) % n];
  }
  return p;
}

// ---- dichotomy -------------------------------------------------------------

enum class OutcomeKind { extinct, converged };

struct DichotomyOutcome {
  OutcomeKind kind = OutcomeKind::extinct;
  double t_ext = 0.0;
  std::optional<MeshSurface> geodesic;
  double limit_length = 0.0;
  double residual = 0.0;
  double stability_eigenvalue = 0.0;
  double max_H = 0.0;
  std::size_t final_curves = 0;
  bool coincident_pair = false;  // two limit curves within 1e-3 (possible double cover)
  double symmetry_defect = 0.0;  // spread of the non-periodic coordinate along each curve
  double t_final = 0.0;
  long steps = 0;
  bool nesting_ok = true;
  std::vector<HistoryEntry> trail;
  std::vector<Snapshot> snapshots;
};

inline FlowState initial_state(const Domain& domain, const FlowConfig& cfg) {
  FlowState s;
  s.ambient = domain.ambient_ptr();
  for (const auto& b : domain.boundary()) {
    const MeshSurface mesh = polyline_from_curve(s.ambient, b, cfg.vertices, true);
    s.curves.push_back(make_flow_curve(*s.ambient, mesh.vertices(), detail::region_side(domain, mesh.vertices())));
  }
  return s;
}

namespace detail {

inline double symmetry_defect(const Ambient& m, const std::vector<FlowCurve>& curves) {
  if (!m.chart().periodic[1] || m.chart().periodic[0]) return 0.0;
  double d = 0;
  for (const auto& c : curves) {
    double lo = kInf, hi = -kInf;
    for (const Vec& p : c.pts) {
      lo = std::min(lo, p(0));
      hi = std::max(hi, p(0));
    }
    d = std::max(d, hi - lo);
  }
  return d;
}

inline double chart_hausdorff(const Ambient& m, const std::vector<Vec>& a, const std::vector<Vec>& b) {
  auto one = [&](const std::vector<Vec>& x, const std::vector<Vec>& y) {
    double worst = 0;
    for (const Vec& p : x) {
      double best = kInf;
      for (const Vec& q : y) best = std::min(best, m.delta(p, q).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one(a, b), one(b, a));
}

}  // namespace detail

/// Flow a state until extinction, stall, or the configured horizon. The
/// observer sees every accepted state.
inline FlowState run_flow(FlowState state, const FlowConfig& cfg, std::vector<Snapshot>* snapshots = nullptr,
                          const std::function<bool(const FlowState&)>& stop = {}) {
  cfg.validate();
  auto record = [&](const FlowState& s, bool force = false) {
    if (!snapshots || cfg.snapshot_stride <= 0) return;
    if (!force && s.steps % cfg.snapshot_stride != 0) return;
    if (!snapshots->empty() && snapshots->back().t == s.t) return;
    Snapshot snap;
    snap.t = s.t;
    for (const auto& c : s.curves) snap.curves.push_back(c.pts);
    snapshots->push_back(std::move(snap));
  };
  record(state);
  const double t_end = cfg.horizon > 0 ? cfg.horizon : cfg.t_max;
  while (!state.curves.empty() && state.t < t_end) {
    state = step(state, cfg);
    record(state);
    if (stop && stop(state)) break;
  }
  record(state, true);  // the stopping state, whatever the stride
  return state;
}

/// Flow dN inward with delta = 0 until it vanishes or stalls at a geodesic.
inline DichotomyOutcome run_dichotomy(const Domain& domain, FlowConfig cfg) {
  cfg.delta = 0;
  cfg.horizon = 0;
  cfg.validate();
  for (const auto& comp : classify_domain(domain)) {
    if (comp.flag == Convexity::minimal)
      throw Error(ErrorKind::rejected_input, "a boundary component is minimal");
    if (comp.flag == Convexity::not_convex)
      throw Error(ErrorKind::precondition, "boundary is not mean convex");
  }
  FlowState state = initial_state(domain, cfg);
  const Ambient& m = *state.ambient;
  DichotomyOutcome out;
  std::vector<double> window_lengths{total_length(state)};
  int plateau = 0;
  bool converged = false;
  auto stop = [&](const FlowState& s) {
    if (s.curves.empty()) return true;
    if (s.steps % cfg.window != 0) return false;
    const double l = total_length(s);
    const double prev = window_lengths.back();
    window_lengths.push_back(l);
    const bool flat = std::abs(prev - l) / l < cfg.stall_tol;
    plateau = flat ? plateau + 1 : 0;
    if (plateau >= cfg.plateau_windows && s.history.back().max_H < cfg.tol_H) {
      converged = true;
      return true;
    }
    return false;
  };
  std::vector<Snapshot>* snaps = cfg.snapshot_stride > 0 ? &out.snapshots : nullptr;
  state = run_flow(std::move(state), cfg, snaps, stop);
  out.t_final = state.t;
  out.steps = state.steps;
  out.nesting_ok = state.nesting_ok;
  out.trail.assign(state.history.begin(), state.history.end());
  out.final_curves = state.curves.size();
  if (state.curves.empty()) {
    out.kind = OutcomeKind::extinct;
    out.t_ext = *std::max_element(state.extinction_times.begin(), state.extinction_times.end());
    return out;
  }
  if (!converged)
    throw Error(ErrorKind::inconclusive, "flow neither vanished nor converged by t = " + format_double(state.t) +
                                             " (max|H| = " + format_double(state.history.back().max_H) + ")");
  out.kind = OutcomeKind::converged;
  out.max_H = state.history.back().max_H;
  for (std::size_t a = 0; a < state.curves.size(); ++a)
    for (std::size_t b = a + 1; b < state.curves.size(); ++b)
      if (detail::chart_hausdorff(m, state.curves[a].pts, state.curves[b].pts) < 1e-3) out.coincident_pair = true;
  out.symmetry_defect = detail::symmetry_defect(m, state.curves);
  out.geodesic.emplace(detail::curve_mesh(state.ambient, state.curves.front().pts));
  out.limit_length = measure(*out.geodesic);
  out.residual = stationarity_residual(from_mesh(*out.geodesic), cfg.residual_degree);
  out.stability_eigenvalue = stability_spectrum(stability_problem(*out.geodesic)).eigenvalue;
  if (!(out.residual < 1e-3))
    throw Error(ErrorKind::inconclusive, "limit curve has stationarity residual " + format_double(out.residual));
  return out;
}

// ---- avoidance -------------------------------------------------------------

struct AvoidanceReport {
  std::vector<double> times;
  std::vector<double> distances;
  double min_distance = kInf;
  bool pass = true;
  bool monotone_approach = true;  // distances never increase
};

namespace detail {

/// Approximate g-distance from a set of closed curves to S: brute force over
/// (S point, segment) pairs in the metric frozen at the S point, then the
/// best few pairs are re-measured along the chart chord.
inline double curves_to_set_distance(const Ambient& m, const std::vector<std::vector<Vec>>& curves,
                                     const std::vector<Vec>& S, const std::vector<Mat>& gS) {
  struct Cand {
    double d2;
    Vec s, q;
  };
  std::vector<Cand> best;
  for (std::size_t k = 0; k < S.size(); ++k) {
    const Mat& g = gS[k];
    for (const auto& pts : curves) {
      const std::size_t n = pts.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec a = S[k] + m.delta(S[k], pts[i]);
        const Vec e = m.delta(pts[i], pts[(i + 1) % n]);
        const Vec w = a - S[k];
        const double ee = e.dot(g * e);
        const double u = ee > 0 ? std::clamp(-w.dot(g * e) / ee, 0.0, 1.0) : 0.0;
        const Vec d = w + u * e;
        const double d2 = d.dot(g * d);
        if (best.size() < 8 || d2 < best.back().d2) {
          best.push_back({d2, S[k], Vec(S[k] + d)});
          std::sort(best.begin(), best.end(), [](const Cand& x, const Cand& y) { return x.d2 < y.d2; });
          if (best.size() > 8) best.pop_back();
        }
      }
    }
  }
  double dist = kInf;
  for (const auto& c : best) dist = std::min(dist, MeshSurface::chord_length(m, c.s, c.q));
  return dist;
}

}  // namespace detail

inline AvoidanceReport avoidance_monitor(const Ambient& m, const std::vector<Snapshot>& trajectory,
                                         const std::vector<Vec>& S) {
  AvoidanceReport r;
  if (S.empty()) return r;  // vacuous
  std::vector<Mat> gS;
  for (const Vec& p : S) gS.push_back(m.metric_raw(p));
  for (const auto& snap : trajectory) {
    if (snap.curves.empty()) continue;
    const double d = detail::curves_to_set_distance(m, snap.curves, S, gS);
    if (r.distances.empty() && !(d > 1e-12)) throw Error(ErrorKind::precondition, "flow starts in contact with S");
    if (!r.distances.empty() && d > r.distances.back() + 1e-12) r.monotone_approach = false;
    r.times.push_back(snap.t);
    r.distances.push_back(d);
    r.min_distance = std::min(r.min_distance, d);
    if (!(d > 0)) r.pass = false;
  }
  return r;
}

/// Support of a stationary varifold as the obstacle set.
inline AvoidanceReport avoidance_monitor(const Ambient& m, const std::vector<Snapshot>& trajectory,
                                         const DiscreteVarifold& v, int degree = 4) {
  if (!v.empty() && !(stationarity_residual(v, degree) < 1e-3))
    throw Error(ErrorKind::precondition, "obstacle varifold is not stationary (residual >= 1e-3)");
  return avoidance_monitor(m, trajectory, spatial_support(v));
}

struct TubeTrajectory {
  std::vector<Snapshot> snapshots;
  std::optional<double> first_contact;  // with S, if given
  FlowState final_state;
};

/// Flow the boundary of the epsilon-tube around a closed polyline with
/// velocity H - delta nu, nu the outward normal of the tube.
inline TubeTrajectory perturbed_tube_flow(const MeshSurface& m0, const FlowConfig& cfg,
                                          const std::vector<Vec>& S = {}, double contact_tol = 1e-6) {
  cfg.validate();
  if (m0.k() != 1 || !m0.closed()) throw Error(ErrorKind::validation, "tube flow needs a closed polyline");
  const Ambient& m = m0.ambient();
  const auto& V = m0.vertices();
  const std::size_t n = V.size();
  if (cfg.epsilon * mean_curvature(m0).max_norm(m0) >= 1)
    throw Error(ErrorKind::epsilon_too_large, "epsilon exceeds the curvature radius");
  std::vector<Vec> plus, minus;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec t = m.delta(V[(i + n - 1) % n], V[(i + 1) % n]);
    const Vec nl = left_normal(m.metric_raw(V[i]), t);
    plus.push_back(m.wrap(V[i] + cfg.epsilon * nl));
    minus.push_back(m.wrap(V[i] - cfg.epsilon * nl));
  }
  if (detail::any_crossing(m, {&plus, &minus}))
    throw Error(ErrorKind::epsilon_too_large, "tube boundary is not simple");
  for (const auto& c : {plus, minus})
    for (const Vec& p : c)
      if (!m.in_chart(p)) throw Error(ErrorKind::epsilon_too_large, "tube leaves the chart");
  FlowState s;
  s.ambient = m0.ambient_ptr();
  // the tube lies to the right of the left offset and to the left of the right one
  s.curves.push_back(make_flow_curve(m, plus, -1));
  s.curves.push_back(make_flow_curve(m, minus, 1));
  TubeTrajectory out;
  std::vector<Mat> gS;
  for (const Vec& p : S) gS.push_back(m.metric_raw(p));
  auto stop = [&](const FlowState& st) {
    if (S.empty() || out.first_contact || st.curves.empty()) return false;
    if (cfg.snapshot_stride > 0 && st.steps % cfg.snapshot_stride != 0) return false;
    std::vector<std::vector<Vec>> cs;
    for (const auto& c : st.curves) cs.push_back(c.pts);
    if (detail::curves_to_set_distance(m, cs, S, gS) < contact_tol) out.first_contact = st.t;
    return false;
  };
  out.final_state = run_flow(std::move(s), cfg, &out.snapshots, stop);
  return out;
}

}  // namespace isovar
