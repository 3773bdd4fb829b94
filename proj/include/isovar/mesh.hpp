#pragma once

// Discrete k-surfaces: polylines (k = 1) in a 2-dimensional ambient and
// triangle meshes (k = 2) in Euclidean 3-space, with their measures, boundary
// terms, discrete mean curvature and the discrete divergence identity.

#include "isovar/ambient.hpp"
#include "isovar/domain.hpp"
#include "isovar/field.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace isovar {

/// How refine() places new vertices.
struct Reprojection {
  enum class Kind { none, curve, sphere, disk_boundary };
  Kind kind = Kind::none;
  std::optional<ParamCurve> curve;  // k = 1: vertices carry curve parameters
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

class MeshSurface {
 public:
  using Element = std::array<int, 3>;

  MeshSurface(int k, AmbientPtr ambient, std::vector<Vec> vertices, std::vector<Element> elements,
              Reprojection reprojection = {}, std::vector<double> params = {})
      : k_(k), ambient_(std::move(ambient)), vertices_(std::move(vertices)), elements_(std::move(elements)),
        reprojection_(std::move(reprojection)), params_(std::move(params)) {
    validate();
  }

  int k() const { return k_; }
  const Ambient& ambient() const { return *ambient_; }
  const AmbientPtr& ambient_ptr() const { return ambient_; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }
  const Reprojection& reprojection() const { return reprojection_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t element_count() const { return elements_.size(); }

  /// k = 1: endpoint vertices. k = 2: vertices on boundary edges.
  const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
  /// k = 2 boundary edges, oriented as in their triangle.
  const std::vector<std::array<int, 3>>& boundary_edges() const { return boundary_edges_; }
  bool closed() const { return boundary_vertices_.empty(); }

  /// k = 1 neighbours along the oriented polyline (-1 at an endpoint).
  int prev(int v) const { return prev_[static_cast<std::size_t>(v)]; }
  int next(int v) const { return next_[static_cast<std::size_t>(v)]; }

  /// g-length (k = 1, 3-point Gauss along the chart chord) or Euclidean area (k = 2).
  double element_measure(std::size_t e) const {
    const Element& el = elements_[e];
    if (k_ == 1) return chord_length(*ambient_, vertices_[static_cast<std::size_t>(el[0])],
                                     vertices_[static_cast<std::size_t>(el[1])]);
    const Eigen::Vector3d a = v3(el[0]), b = v3(el[1]), c = v3(el[2]);
    return 0.5 * (b - a).cross(c - a).norm();
  }

  Eigen::Vector3d v3(int i) const {
    const Vec& v = vertices_[static_cast<std::size_t>(i)];
    return Eigen::Vector3d(v(0), v(1), v.size() > 2 ? v(2) : 0.0);
  }

  static double chord_length(const Ambient& m, const Vec& a, const Vec& b) {
    const Vec d = m.delta(a, b);
    static constexpr double nodes[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
    static constexpr double weights[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
    if (m.is_euclidean() || m.family() == MetricFamily::product) return d.norm();
    double s = 0;
    for (int q = 0; q < 3; ++q) {
      const Vec p = a + nodes[q] * d;
      s += weights[q] * std::sqrt(d.dot(m.metric_raw(p) * d));
    }
    return s;
  }

 private:
  void validate() {
    if (k_ != 1 && k_ != 2) throw Error(ErrorKind::invalid_mesh, "k must be 1 or 2");
    if (k_ == 1 && ambient_->dim() != 2) throw Error(ErrorKind::invalid_mesh, "polylines live in dim-2 ambients");
    if (k_ == 2 && !(ambient_->is_euclidean() && ambient_->dim() == 3))
      throw Error(ErrorKind::invalid_mesh, "triangle meshes live in Euclidean 3-space");
    const int n = static_cast<int>(vertices_.size());
    for (const Vec& v : vertices_)
      if (v.size() != ambient_->dim()) throw Error(ErrorKind::invalid_mesh, "vertex dimension mismatch");
    for (std::size_t e = 0; e < elements_.size(); ++e) {
      for (int j = 0; j < k_ + 1; ++j)
        if (elements_[e][static_cast<std::size_t>(j)] < 0 || elements_[e][static_cast<std::size_t>(j)] >= n)
          throw Error(ErrorKind::invalid_mesh, "element index out of range");
      if (!(element_measure(e) > 1e-12)) throw Error(ErrorKind::invalid_mesh, "degenerate element");
    }
    if (k_ == 1) {
      prev_.assign(static_cast<std::size_t>(n), -1);
      next_.assign(static_cast<std::size_t>(n), -1);
      for (const Element& el : elements_) {
        const auto a = static_cast<std::size_t>(el[0]), b = static_cast<std::size_t>(el[1]);
        if (next_[a] != -1 || prev_[b] != -1)
          throw Error(ErrorKind::invalid_mesh, "polyline is branched or inconsistently oriented");
        next_[a] = el[1];
        prev_[b] = el[0];
      }
      for (int v = 0; v < n; ++v) {
        const bool p = prev_[static_cast<std::size_t>(v)] != -1, q = next_[static_cast<std::size_t>(v)] != -1;
        if (!p && !q) throw Error(ErrorKind::invalid_mesh, "isolated vertex");
        if (p != q) boundary_vertices_.push_back(v);
      }
    } else {
      std::map<std::pair<int, int>, int> count;
      std::map<std::pair<int, int>, int> opposite;
      for (const Element& el : elements_) {
        for (int j = 0; j < 3; ++j) {
          const int a = el[static_cast<std::size_t>(j)], b = el[static_cast<std::size_t>((j + 1) % 3)];
          auto key = std::minmax(a, b);
          ++count[{key.first, key.second}];
          opposite[{a, b}] = el[static_cast<std::size_t>((j + 2) % 3)];
        }
      }
      std::vector<char> on_boundary(static_cast<std::size_t>(n), 0);
      for (const auto& [ab, opp] : opposite) {
        auto key = std::minmax(ab.first, ab.second);
        const int c = count[{key.first, key.second}];
        if (c > 2) throw Error(ErrorKind::invalid_mesh, "non-manifold edge");
        if (c == 1) {
          boundary_edges_.push_back({ab.first, ab.second, opp});
          on_boundary[static_cast<std::size_t>(ab.first)] = on_boundary[static_cast<std::size_t>(ab.second)] = 1;
        }
      }
      for (int v = 0; v < n; ++v)
        if (on_boundary[static_cast<std::size_t>(v)]) boundary_vertices_.push_back(v);
    }
  }

  int k_;
  AmbientPtr ambient_;
  std::vector<Vec> vertices_;
  std::vector<Element> elements_;
  Reprojection reprojection_;
  std::vector<double> params_;
  std::vector<int> prev_, next_;
  std::vector<int> boundary_vertices_;
  std::vector<std::array<int, 3>> boundary_edges_;
};

// ---- generators ----------------------------------------------------------

/// Polyline sampling a parametrized curve at n + (closed ? 0 : 1) vertices.
inline MeshSurface polyline_from_curve(AmbientPtr m, const ParamCurve& c, int n, bool closed = true) {
  if (n < 1 || (closed && n < 3)) throw Error(ErrorKind::invalid_mesh, "too few segments");
  std::vector<Vec> verts;
  std::vector<double> params;
  const int count = closed ? n : n + 1;
  for (int i = 0; i < count; ++i) {
    const double t = c.param(i, n);
    params.push_back(t);
    verts.push_back(m->wrap(c.point(t)));
  }
  std::vector<MeshSurface::Element> el;
  for (int i = 0; i < n; ++i) el.push_back({i, (i + 1) % count, 0});
  Reprojection r;
  r.kind = Reprojection::Kind::curve;
  r.curve = c;
  return MeshSurface(1, std::move(m), std::move(verts), std::move(el), std::move(r), std::move(params));
}

inline MeshSurface circle_polyline(AmbientPtr m, const Vec& center, double radius, int n) {
  if (!(radius > 0)) throw Error(ErrorKind::invalid_mesh, "circle radius must be positive");
  const ParamCurve c(format_double(center(0)) + " + " + format_double(radius) + "*cos(t)",
                     format_double(center(1)) + " + " + format_double(radius) + "*sin(t)");
  return polyline_from_curve(std::move(m), c, n);
}

inline MeshSurface segment_polyline(AmbientPtr m, const Vec& a, const Vec& b, int n = 1) {
  auto lin = [](double x0, double x1) {
    return "(" + format_double(x0) + ") + t*(" + format_double(x1 - x0) + ")";
  };
  const ParamCurve c(lin(a(0), b(0)), lin(a(1), b(1)), 0.0, 1.0);
  return polyline_from_curve(std::move(m), c, n, false);
}

/// Latitude {first chart coordinate = level}, traversed in the periodic coordinate.
inline MeshSurface latitude_polyline(AmbientPtr m, double level, int n) {
  const ParamCurve c(format_double(level), "t");
  return polyline_from_curve(std::move(m), c, n);
}

inline AmbientPtr euclidean3() { return make_ambient(Ambient::euclidean(3)); }
inline AmbientPtr euclidean2() { return make_ambient(Ambient::euclidean(2)); }

/// Flat unit disk in the plane z = 0 of E^3: a hexagonal fan refined `level` times
/// with boundary midpoints pushed onto the unit circle.
inline MeshSurface disk_mesh(int level, double radius = 1.0);

/// Icosahedron refined `level` times, vertices on the sphere of given radius.
inline MeshSurface icosphere(int level, double radius = 1.0);

/// Two-triangle unit square in the plane z = 0.
inline MeshSurface unit_square_mesh() {
  std::vector<Vec> v{make_vec(0, 0, 0), make_vec(1, 0, 0), make_vec(1, 1, 0), make_vec(0, 1, 0)};
  return MeshSurface(2, euclidean3(), v, {{0, 1, 2}, {0, 2, 3}});
}

// ---- refinement ----------------------------------------------------------

inline MeshSurface refine(const MeshSurface& mesh) {
  const Ambient& m = mesh.ambient();
  const Reprojection& rp = mesh.reprojection();
  std::vector<Vec> verts = mesh.vertices();
  std::vector<MeshSurface::Element> el;
  if (mesh.k() == 1) {
    std::vector<double> params = mesh.params();
    const bool use_curve = rp.kind == Reprojection::Kind::curve && rp.curve && params.size() == verts.size();
    for (const auto& e : mesh.elements()) {
      const Vec& a = mesh.vertices()[static_cast<std::size_t>(e[0])];
      const Vec& b = mesh.vertices()[static_cast<std::size_t>(e[1])];
      Vec mid;
      if (use_curve) {
        double ta = params[static_cast<std::size_t>(e[0])], tb = params[static_cast<std::size_t>(e[1])];
        if (tb <= ta) tb += rp.curve->t1 - rp.curve->t0;  // closing segment
        const double tm = 0.5 * (ta + tb);
        mid = m.wrap(rp.curve->point(tm));
        params.push_back(tm);
      } else {
        mid = m.wrap(a + 0.5 * m.delta(a, b));
        if (!params.empty()) params.push_back(0.0);
      }
      const int idx = static_cast<int>(verts.size());
      verts.push_back(mid);
      el.push_back({e[0], idx, 0});
      el.push_back({idx, e[1], 0});
    }
    return MeshSurface(1, mesh.ambient_ptr(), std::move(verts), std::move(el), rp, std::move(params));
  }
  std::map<std::pair<int, int>, int> mids;
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& e : mesh.elements())
    for (int j = 0; j < 3; ++j) {
      auto key = std::minmax(e[static_cast<std::size_t>(j)], e[static_cast<std::size_t>((j + 1) % 3)]);
      ++edge_count[{key.first, key.second}];
    }
  auto midpoint = [&](int a, int b) {
    auto key = std::minmax(a, b);
    std::pair<int, int> k{key.first, key.second};
    auto it = mids.find(k);
    if (it != mids.end()) return it->second;
    Eigen::Vector3d p = 0.5 * (mesh.v3(a) + mesh.v3(b));
    if (rp.kind == Reprojection::Kind::sphere) {
      p = rp.center + rp.radius * (p - rp.center).normalized();
    } else if (rp.kind == Reprojection::Kind::disk_boundary && edge_count[k] == 1) {
      Eigen::Vector3d d = p - rp.center;
      d(2) = 0;
      p = rp.center + rp.radius * d.normalized();
    }
    const int idx = static_cast<int>(verts.size());
    verts.push_back(make_vec(p(0), p(1), p(2)));
    mids[k] = idx;
    return idx;
  };
  for (const auto& e : mesh.elements()) {
    const int a = e[0], b = e[1], c = e[2];
    const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    el.push_back({a, ab, ca});
    el.push_back({ab, b, bc});
    el.push_back({ca, bc, c});
    el.push_back({ab, bc, ca});
  }
  return MeshSurface(2, mesh.ambient_ptr(), std::move(verts), std::move(el), rp);
}

inline MeshSurface refine(const MeshSurface& mesh, int times) {
  MeshSurface out = mesh;
  for (int i = 0; i < times; ++i) out = refine(out);
  return out;
}

inline MeshSurface disk_mesh(int level, double radius) {
  if (!(radius > 0) || level < 0) throw Error(ErrorKind::invalid_mesh, "disk needs radius > 0 and level >= 0");
  std::vector<Vec> v{make_vec(0, 0, 0)};
  std::vector<MeshSurface::Element> el;
  for (int i = 0; i < 6; ++i) {
    const double a = kPi * i / 3;
    v.push_back(make_vec(radius * std::cos(a), radius * std::sin(a), 0));
    el.push_back({0, 1 + i, 1 + (i + 1) % 6});
  }
  Reprojection r;
  r.kind = Reprojection::Kind::disk_boundary;
  r.radius = radius;
  return refine(MeshSurface(2, euclidean3(), v, el, r), level);
}

inline MeshSurface icosphere(int level, double radius) {
  if (!(radius > 0) || level < 0) throw Error(ErrorKind::invalid_mesh, "icosphere needs radius > 0 and level >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> raw{{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                   {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Vec> v;
  for (auto& p : raw) {
    p = radius * p.normalized();
    v.push_back(make_vec(p(0), p(1), p(2)));
  }
  std::vector<MeshSurface::Element> el{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  Reprojection r;
  r.kind = Reprojection::Kind::sphere;
  r.radius = radius;
  return refine(MeshSurface(2, euclidean3(), v, el, r), level);
}

// ---- measures ------------------------------------------------------------

inline double measure(const MeshSurface& mesh) {
  CompensatedSum s;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) s.add(mesh.element_measure(e));
  return s.value();
}

/// k = 1: number of endpoints. k = 2: boundary length.
inline double boundary_measure(const MeshSurface& mesh) {
  if (mesh.k() == 1) return static_cast<double>(mesh.boundary_vertices().size());
  CompensatedSum s;
  for (const auto& e : mesh.boundary_edges()) s.add((mesh.v3(e[1]) - mesh.v3(e[0])).norm());
  return s.value();
}

// ---- curvature -----------------------------------------------------------

struct CurvatureField {
  std::vector<Vec> H;          // mean curvature vector (chart components); zero where absent
  std::vector<char> has_H;     // false on boundary vertices
  std::vector<double> dual;    // dual measure per vertex
  std::vector<Vec> conormal;   // outward unit conormal at k = 1 endpoints (zero elsewhere)
  std::vector<double> signed_kappa;  // k = 1: signed curvature along the left normal

  double max_norm(const MeshSurface& mesh) const {
    double m = 0;
    for (std::size_t i = 0; i < H.size(); ++i)
      if (has_H[i]) m = std::max(m, norm(mesh.ambient(), mesh.vertices()[i], H[i]));
    return m;
  }
};

namespace detail {

/// Geodesic tangent estimates at both ends of the chart chord a -> b.
inline std::pair<Vec, Vec> chord_tangents(const Ambient& m, const Vec& a, const Vec& b) {
  const Vec d = m.delta(a, b);
  const Vec mid = a + 0.5 * d;
  const Vec corr = 0.5 * m.christoffel_contract(mid, d, d);
  return {Vec(d + corr), Vec(d - corr)};
}

}  // namespace detail

inline CurvatureField mean_curvature(const MeshSurface& mesh) {
  const Ambient& m = mesh.ambient();
  const std::size_t n = mesh.vertices().size();
  const int dim = m.dim();
  CurvatureField f;
  f.H.assign(n, Vec::Zero(dim));
  f.has_H.assign(n, 0);
  f.dual.assign(n, 0.0);
  f.conormal.assign(n, Vec::Zero(dim));
  f.signed_kappa.assign(n, 0.0);
  const auto& V = mesh.vertices();
  if (mesh.k() == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const int pv = mesh.prev(static_cast<int>(i)), nx = mesh.next(static_cast<int>(i));
      const Mat g = m.metric_raw(V[i]);
      const double l_in = pv >= 0 ? MeshSurface::chord_length(m, V[static_cast<std::size_t>(pv)], V[i]) : 0.0;
      const double l_out = nx >= 0 ? MeshSurface::chord_length(m, V[i], V[static_cast<std::size_t>(nx)]) : 0.0;
      f.dual[i] = 0.5 * (l_in + l_out);
      if (pv < 0 || nx < 0) {
        if (pv < 0) {
          const Vec t = detail::chord_tangents(m, V[i], V[static_cast<std::size_t>(nx)]).first;
          f.conormal[i] = -t / std::sqrt(t.dot(g * t));
        } else {
          const Vec t = detail::chord_tangents(m, V[static_cast<std::size_t>(pv)], V[i]).second;
          f.conormal[i] = t / std::sqrt(t.dot(g * t));
        }
        continue;
      }
      Vec e_in = detail::chord_tangents(m, V[static_cast<std::size_t>(pv)], V[i]).second;
      Vec e_out = detail::chord_tangents(m, V[i], V[static_cast<std::size_t>(nx)]).first;
      e_in /= std::sqrt(e_in.dot(g * e_in));
      e_out /= std::sqrt(e_out.dot(g * e_out));
      const Vec n_in = left_normal(g, e_in);
      const double angle = std::atan2(n_in.dot(g * e_out), e_in.dot(g * e_out));
      const Vec tangent = e_in + e_out;
      const Vec normal = left_normal(g, tangent);
      const double kappa = angle / f.dual[i];
      f.signed_kappa[i] = kappa;
      f.H[i] = kappa * normal;
      f.has_H[i] = 1;
    }
    return f;
  }
  // k = 2: cotangent Laplacian of the position over mixed Voronoi dual areas.
  std::vector<Eigen::Vector3d> lap(n, Eigen::Vector3d::Zero());
  for (const auto& e : mesh.elements()) {
    const Eigen::Vector3d p[3] = {mesh.v3(e[0]), mesh.v3(e[1]), mesh.v3(e[2])};
    const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
    double cot[3];  // cot of the angle at corner j
    bool obtuse = false;
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector3d u = p[(j + 1) % 3] - p[j], w = p[(j + 2) % 3] - p[j];
      cot[j] = u.dot(w) / u.cross(w).norm();
      if (u.dot(w) < 0) obtuse = true;
    }
    for (int j = 0; j < 3; ++j) {
      const auto a = static_cast<std::size_t>(e[static_cast<std::size_t>(j)]);
      const int jb = (j + 1) % 3, jc = (j + 2) % 3;
      const auto b = static_cast<std::size_t>(e[static_cast<std::size_t>(jb)]);
      // edge (a, b) is opposite corner jc
      lap[a] += 0.5 * cot[jc] * (p[jb] - p[j]);
      lap[b] += 0.5 * cot[jc] * (p[j] - p[jb]);
      if (!obtuse) {
        const double lab = (p[jb] - p[j]).squaredNorm(), lac = (p[jc] - p[j]).squaredNorm();
        f.dual[a] += (lab * cot[jc] + lac * cot[jb]) / 8;
      } else {
        const Eigen::Vector3d u = p[jb] - p[j], w = p[jc] - p[j];
        f.dual[a] += u.dot(w) < 0 ? area / 2 : area / 4;
      }
    }
  }
  std::vector<char> boundary(n, 0);
  for (int v : mesh.boundary_vertices()) boundary[static_cast<std::size_t>(v)] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (boundary[i] || f.dual[i] <= 0) continue;
    const Eigen::Vector3d h = lap[i] / f.dual[i];
    f.H[i] = make_vec(h(0), h(1), h(2));
    f.has_H[i] = 1;
  }
  return f;
}

/// Integral of |H| with vertex values times dual measures.
inline double total_abs_curvature(const MeshSurface& mesh, const CurvatureField& f) {
  CompensatedSum s;
  for (std::size_t i = 0; i < f.H.size(); ++i)
    if (f.has_H[i]) s.add(norm(mesh.ambient(), mesh.vertices()[i], f.H[i]) * f.dual[i]);
  return s.value();
}

inline double total_abs_curvature(const MeshSurface& mesh) { return total_abs_curvature(mesh, mean_curvature(mesh)); }

// ---- divergence identity -------------------------------------------------

struct DivergenceTerms {
  double divergence = 0.0;  // integral of div^M X
  double boundary = 0.0;    // integral over the boundary of X . nu
  double curvature = 0.0;   // integral of H . X
  double residual() const { return std::abs(divergence - (boundary - curvature)); }
};

inline DivergenceTerms divergence_terms(const MeshSurface& mesh, const VectorField& x) {
  const Ambient& m = mesh.ambient();
  x.check(m);
  const auto& V = mesh.vertices();
  const CurvatureField f = mean_curvature(mesh);
  DivergenceTerms t;
  CompensatedSum div, bdy, curv;
  if (mesh.k() == 1) {
    static constexpr double nodes[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
    static constexpr double weights[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
    for (const auto& e : mesh.elements()) {
      const Vec& a = V[static_cast<std::size_t>(e[0])];
      const Vec d = m.delta(a, V[static_cast<std::size_t>(e[1])]);
      const Vec corr = m.christoffel_contract(a + 0.5 * d, d, d);
      for (int q = 0; q < 3; ++q) {
        const Vec p = a + nodes[q] * d;
        const Mat g = m.metric_raw(p);
        const Vec tan = d + (0.5 - nodes[q]) * corr;
        const double speed = std::sqrt(tan.dot(g * tan));
        Mat basis = tan / speed;
        div.add(weights[q] * std::sqrt(d.dot(g * d)) * tangential_divergence(m, p, basis, x));
      }
    }
    for (int v : mesh.boundary_vertices()) {
      const Vec& p = V[static_cast<std::size_t>(v)];
      bdy.add(inner(m, p, x(p), f.conormal[static_cast<std::size_t>(v)]));
    }
  } else {
    for (const auto& e : mesh.elements()) {
      const Eigen::Vector3d a = mesh.v3(e[0]), b = mesh.v3(e[1]), c = mesh.v3(e[2]);
      const Eigen::Vector3d n = (b - a).cross(c - a);
      const double area = 0.5 * n.norm();
      const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - n.normalized() * n.normalized().transpose();
      const Eigen::Vector3d q[3] = {0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)};
      for (const auto& qp : q) {
        const Vec p = make_vec(qp(0), qp(1), qp(2));
        const Eigen::Matrix3d jac = Eigen::Matrix3d(x.jacobian(p));
        div.add(area / 3 * (proj * jac).trace());
      }
    }
    for (const auto& be : mesh.boundary_edges()) {
      const Eigen::Vector3d a = mesh.v3(be[0]), b = mesh.v3(be[1]), c = mesh.v3(be[2]);
      const Eigen::Vector3d edge = b - a;
      const Eigen::Vector3d n = edge.cross(c - a);
      Eigen::Vector3d nu = edge.cross(n).normalized();  // in-plane, away from c
      if (nu.dot(c - a) > 0) nu = -nu;
      auto val = [&](const Eigen::Vector3d& qp) {
        const Vec xv = x(make_vec(qp(0), qp(1), qp(2)));
        return Eigen::Vector3d(xv(0), xv(1), xv(2)).dot(nu);
      };
      // Simpson on the edge
      bdy.add(edge.norm() * (val(a) + 4 * val(0.5 * (a + b)) + val(b)) / 6);
    }
  }
  for (std::size_t i = 0; i < V.size(); ++i)
    if (f.has_H[i]) curv.add(inner(m, V[i], f.H[i], x(V[i])) * f.dual[i]);
  t.divergence = div.value();
  t.boundary = bdy.value();
  t.curvature = curv.value();
  return t;
}

inline double divergence_identity_residual(const MeshSurface& mesh, const VectorField& x) {
  return divergence_terms(mesh, x).residual();
}

/// Exact first-variation norm of the piecewise-flat (k = 2) or piecewise
/// chart-straight (k = 1) surface itself: |dM| plus the singular curvature
/// concentrated on interior edges / vertices, plus for k = 1 the geodesic
/// curvature of each chart segment.
inline double polyhedral_variation(const MeshSurface& mesh) {
  const Ambient& m = mesh.ambient();
  const auto& V = mesh.vertices();
  CompensatedSum s;
  s.add(boundary_measure(mesh));
  if (mesh.k() == 1) {
    auto unit = [&](const Vec& p, const Vec& d) { return Vec(d / std::sqrt(d.dot(m.metric_raw(p) * d))); };
    for (int v = 0; v < static_cast<int>(V.size()); ++v) {
      const int pv = mesh.prev(v), nx = mesh.next(v);
      if (pv < 0 || nx < 0) continue;
      const Vec& p = V[static_cast<std::size_t>(v)];
      const Vec jump = unit(p, m.delta(p, V[static_cast<std::size_t>(nx)])) -
                       unit(p, m.delta(V[static_cast<std::size_t>(pv)], p));
      s.add(std::sqrt(jump.dot(m.metric_raw(p) * jump)));
    }
    if (m.family() != MetricFamily::euclidean && m.family() != MetricFamily::product) {
      static constexpr double x[5] = {0.0469100770306680, 0.2307653449471585, 0.5, 0.7692346550528415,
                                      0.9530899229693320};
      static constexpr double w[5] = {0.1184634425280945, 0.2393143352496832, 0.2844444444444444,
                                      0.2393143352496832, 0.1184634425280945};
      for (const auto& e : mesh.elements()) {
        const Vec& a = V[static_cast<std::size_t>(e[0])];
        const Vec d = m.delta(a, V[static_cast<std::size_t>(e[1])]);
        for (int q = 0; q < 5; ++q) {
          const Vec p = a + x[q] * d;
          const Mat g = m.metric_raw(p);
          const double speed = std::sqrt(d.dot(g * d));
          const Vec n = left_normal(g, d);
          // |kappa| ds with kappa = g(Gamma(d, d), n) / |d|^2 and ds = |d| dt
          s.add(w[q] * std::abs(m.christoffel_contract(p, d, d).dot(g * n)) / speed);
        }
      }
    }
    return s.value();
  }
  std::map<std::pair<int, int>, Eigen::Vector3d> conormal_sum;
  for (const auto& el : mesh.elements()) {
    const Eigen::Vector3d n = (mesh.v3(el[1]) - mesh.v3(el[0])).cross(mesh.v3(el[2]) - mesh.v3(el[0])).normalized();
    for (int j = 0; j < 3; ++j) {
      const int a = el[static_cast<std::size_t>(j)], b = el[static_cast<std::size_t>((j + 1) % 3)];
      const Eigen::Vector3d edge = mesh.v3(b) - mesh.v3(a);
      const Eigen::Vector3d nu = edge.cross(n).normalized();  // outward for counter-clockwise triangles
      auto key = std::minmax(a, b);
      auto [it, fresh] = conormal_sum.try_emplace({key.first, key.second}, Eigen::Vector3d::Zero());
      it->second += nu * edge.norm();
    }
  }
  std::set<std::pair<int, int>> boundary;
  for (const auto& be : mesh.boundary_edges()) {
    auto key = std::minmax(be[0], be[1]);
    boundary.insert({key.first, key.second});
  }
  for (const auto& [key, v] : conormal_sum)
    if (!boundary.count(key)) s.add(v.norm());
  return s.value();
}

// ---- text I/O ------------------------------------------------------------

inline void write_mesh(std::ostream& os, const MeshSurface& mesh) {
  os << "# isovar mesh v1\n";
  os << "k " << mesh.k() << "\n";
  os << "ambient " << mesh.ambient().id() << "\n";
  os << "vertices " << mesh.vertices().size() << "\n";
  for (const Vec& v : mesh.vertices()) {
    os << "v";
    for (int i = 0; i < v.size(); ++i) os << ' ' << format_double(v(i));
    os << "\n";
  }
  os << "elements " << mesh.elements().size() << "\n";
  for (const auto& e : mesh.elements()) {
    os << "e";
    for (int j = 0; j <= mesh.k(); ++j) os << ' ' << e[static_cast<std::size_t>(j)];
    os << "\n";
  }
  os << "boundary " << mesh.boundary_vertices().size() << "\n";
  for (int b : mesh.boundary_vertices()) os << "b " << b << "\n";
}

/// Reads the text format written by write_mesh. The ambient must match the
/// recorded id.
inline MeshSurface read_mesh(std::istream& is, AmbientPtr ambient) {
  std::string line;
  int k = 0;
  std::vector<Vec> verts;
  std::vector<MeshSurface::Element> el;
  std::vector<int> boundary;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "k") {
      ss >> k;
    } else if (tag == "ambient") {
      std::string id;
      std::getline(ss >> std::ws, id);
      if (id != ambient->id()) throw Error(ErrorKind::parse, "mesh ambient '" + id + "' != '" + ambient->id() + "'");
    } else if (tag == "v") {
      std::vector<double> c;
      std::string tok;
      while (ss >> tok) c.push_back(parse_double(tok));
      Vec v(static_cast<int>(c.size()));
      for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<int>(i)) = c[i];
      verts.push_back(v);
    } else if (tag == "e") {
      MeshSurface::Element e{0, 0, 0};
      for (int j = 0; j <= k; ++j) ss >> e[static_cast<std::size_t>(j)];
      if (!ss) throw Error(ErrorKind::parse, "bad element line: " + line);
      el.push_back(e);
    } else if (tag == "b") {
      int b = 0;
      ss >> b;
      boundary.push_back(b);
    } else if (tag == "vertices" || tag == "elements" || tag == "boundary") {
      continue;
    } else {
      throw Error(ErrorKind::parse, "unknown mesh line: " + line);
    }
  }
  MeshSurface mesh(k, std::move(ambient), std::move(verts), std::move(el));
  std::vector<int> expect = mesh.boundary_vertices();
  std::sort(boundary.begin(), boundary.end());
  std::sort(expect.begin(), expect.end());
  if (boundary != expect) throw Error(ErrorKind::invalid_mesh, "boundary lines disagree with topology");
  return mesh;
}

/// OFF triangle mesh import into Euclidean 3-space.
inline MeshSurface read_off(std::istream& is) {
  std::string header;
  is >> header;
  if (header != "OFF") throw Error(ErrorKind::parse, "missing OFF header");
  std::size_t nv = 0, nf = 0, ne = 0;
  is >> nv >> nf >> ne;
  std::vector<Vec> verts(nv);
  for (auto& v : verts) {
    double x = 0, y = 0, z = 0;
    is >> x >> y >> z;
    v = make_vec(x, y, z);
  }
  std::vector<MeshSurface::Element> el;
  for (std::size_t f = 0; f < nf; ++f) {
    int cnt = 0;
    is >> cnt;
    std::vector<int> idx(static_cast<std::size_t>(cnt));
    for (auto& i : idx) is >> i;
    for (int j = 1; j + 1 < cnt; ++j) el.push_back({idx[0], idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(j + 1)]});
  }
  if (!is) throw Error(ErrorKind::parse, "truncated OFF file");
  return MeshSurface(2, euclidean3(), std::move(verts), std::move(el));
}

}  // namespace isovar
