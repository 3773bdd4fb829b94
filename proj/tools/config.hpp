#pragma once

// YAML scenario configs: key validation and construction of ambients,
// domains, meshes, fields and flow settings.

#include "isovar/domain.hpp"
#include "isovar/field.hpp"
#include "isovar/flow.hpp"
#include "isovar/inequality.hpp"
#include "isovar/mesh.hpp"
#include "isovar/varifold.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace isovar::cli {

enum ExitCode { exit_ok = 0, exit_assertion = 1, exit_parse = 2, exit_validation = 3, exit_numeric = 4 };

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

[[noreturn]] inline void invalid(const std::string& where, const std::string& what) {
  throw CliError(exit_validation, where + ": " + what);
}

inline void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& where) {
  if (!n.IsMap()) invalid(where, "expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) invalid(where, "unknown key '" + key + "'");
  }
}

template <class T>
T get(const YAML::Node& n, const std::string& key, const std::string& where) {
  if (!n[key]) invalid(where, "missing '" + key + "'");
  try {
    return n[key].as<T>();
  } catch (const YAML::Exception&) {
    invalid(where, "bad value for '" + key + "'");
  }
}

template <class T>
T get_or(const YAML::Node& n, const std::string& key, T fallback, const std::string& where) {
  if (!n[key]) return fallback;
  return get<T>(n, key, where);
}

inline Vec get_vec(const YAML::Node& n, const std::string& key, const std::string& where) {
  const auto v = get<std::vector<double>>(n, key, where);
  if (v.empty() || v.size() > 3) invalid(where, "'" + key + "' must have 1 to 3 entries");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

// ---- ambient ---------------------------------------------------------------

inline AmbientPtr build_ambient(const YAML::Node& n, const std::string& where) {
  const auto family = get<std::string>(n, "family", where);
  if (family == "euclidean") {
    check_keys(n, {"family", "dim", "lo", "hi"}, where);
    const int dim = get_or<int>(n, "dim", 2, where);
    std::optional<Chart> bounds;
    if (n["lo"] || n["hi"]) {
      Chart c;
      c.lo = get_vec(n, "lo", where);
      c.hi = get_vec(n, "hi", where);
      if (c.lo.size() != dim || c.hi.size() != dim) invalid(where, "bounds do not match dim");
      bounds = c;
    }
    return make_ambient(Ambient::euclidean(dim, bounds));
  }
  if (family == "round-sphere") {
    check_keys(n, {"family", "radius"}, where);
    return make_ambient(Ambient::round_sphere(get_or<double>(n, "radius", 1.0, where)));
  }
  if (family == "hyperbolic") {
    check_keys(n, {"family", "curvature", "r_max"}, where);
    return make_ambient(Ambient::hyperbolic(get_or<double>(n, "curvature", -1.0, where),
                                            get_or<double>(n, "r_max", 3.0, where)));
  }
  if (family == "conformal") {
    check_keys(n, {"family", "factor", "lo", "hi"}, where);
    Chart c;
    c.lo = get_vec(n, "lo", where);
    c.hi = get_vec(n, "hi", where);
    if (c.lo.size() != 2 || c.hi.size() != 2) invalid(where, "conformal charts are 2-dimensional");
    return make_ambient(Ambient::conformal(get<std::string>(n, "factor", where), c));
  }
  if (family == "revolution") {
    check_keys(n, {"family", "profile", "z_range"}, where);
    const Vec z = get_vec(n, "z_range", where);
    if (z.size() != 2) invalid(where, "z_range needs two entries");
    return make_ambient(Ambient::revolution(get<std::string>(n, "profile", where), z(0), z(1)));
  }
  if (family == "product") {
    check_keys(n, {"family", "circumference", "z_range"}, where);
    const Vec z = get_vec(n, "z_range", where);
    if (z.size() != 2) invalid(where, "z_range needs two entries");
    return make_ambient(Ambient::product(get<double>(n, "circumference", where), z(0), z(1)));
  }
  invalid(where, "unknown ambient family '" + family + "'");
}

// ---- domain ----------------------------------------------------------------

inline ParamCurve build_curve(const YAML::Node& n, const std::string& where) {
  check_keys(n, {"u", "v", "t0", "t1"}, where);
  return ParamCurve(get<std::string>(n, "u", where), get<std::string>(n, "v", where),
                    get_or<double>(n, "t0", 0.0, where), get_or<double>(n, "t1", 2 * kPi, where));
}

inline Domain build_domain(const YAML::Node& n, AmbientPtr ambient, const std::string& where) {
  check_keys(n, {"name", "constraints", "boundary"}, where);
  if (!ambient) invalid(where, "a domain needs an ambient");
  std::vector<ParamCurve> boundary;
  const YAML::Node b = n["boundary"];
  if (!b || !b.IsSequence() || b.size() == 0) invalid(where, "boundary must be a non-empty list");
  for (std::size_t i = 0; i < b.size(); ++i) boundary.push_back(build_curve(b[i], where + ".boundary[" + std::to_string(i) + "]"));
  return Domain(std::move(ambient), get<std::vector<std::string>>(n, "constraints", where), std::move(boundary),
                get_or<std::string>(n, "name", "domain", where));
}

// ---- meshes ----------------------------------------------------------------

inline MeshQuadrature parse_quadrature(const std::string& s, const std::string& where) {
  if (s == "centroid") return MeshQuadrature::centroid;
  if (s == "high-order") return MeshQuadrature::high_order;
  invalid(where, "quadrature must be 'centroid' or 'high-order'");
}

/// Mesh from a generator node. Curves default to the plane, surfaces to E^3;
/// a scenario ambient overrides the curve default.
inline MeshSurface build_mesh(const YAML::Node& n, const AmbientPtr& ambient, const std::string& where) {
  const auto gen = get<std::string>(n, "generator", where);
  const std::set<std::string> common{"generator", "label", "quadrature", "expect"};
  auto keys = [&](std::set<std::string> extra) {
    extra.insert(common.begin(), common.end());
    check_keys(n, extra, where);
  };
  auto plane = [&]() { return ambient && ambient->dim() == 2 ? ambient : euclidean2(); };
  auto space = [&]() { return ambient && ambient->dim() == 3 ? ambient : euclidean3(); };
  if (gen == "circle") {
    keys({"center", "radius", "segments"});
    return circle_polyline(plane(), n["center"] ? get_vec(n, "center", where) : make_vec(0, 0),
                           get_or<double>(n, "radius", 1.0, where), get_or<int>(n, "segments", 256, where));
  }
  if (gen == "segment") {
    keys({"a", "b", "segments"});
    return segment_polyline(plane(), get_vec(n, "a", where), get_vec(n, "b", where), get_or<int>(n, "segments", 1, where));
  }
  if (gen == "latitude") {
    keys({"level", "segments"});
    if (!ambient || ambient->dim() != 2) invalid(where, "latitude needs a 2-dimensional scenario ambient");
    return latitude_polyline(ambient, get<double>(n, "level", where), get_or<int>(n, "segments", 256, where));
  }
  if (gen == "curve") {
    keys({"u", "v", "t0", "t1", "segments", "closed"});
    const bool closed = get_or<bool>(n, "closed", true, where);
    const ParamCurve c(get<std::string>(n, "u", where), get<std::string>(n, "v", where),
                       get_or<double>(n, "t0", 0.0, where), get_or<double>(n, "t1", 2 * kPi, where));
    return polyline_from_curve(plane(), c, get_or<int>(n, "segments", 256, where), closed);
  }
  if (gen == "disk") {
    keys({"level", "radius"});
    return disk_mesh(get_or<int>(n, "level", 4, where), get_or<double>(n, "radius", 1.0, where));
  }
  if (gen == "icosphere") {
    keys({"level", "radius"});
    return icosphere(get_or<int>(n, "level", 3, where), get_or<double>(n, "radius", 1.0, where));
  }
  if (gen == "square") {
    keys({});
    return unit_square_mesh();
  }
  if (gen == "file") {
    keys({"path", "k"});
    std::ifstream is(get<std::string>(n, "path", where));
    if (!is) invalid(where, "cannot open mesh file");
    const int k = get_or<int>(n, "k", 1, where);
    return read_mesh(is, k == 2 ? space() : plane());
  }
  invalid(where, "unknown generator '" + gen + "'");
}

inline std::string mesh_label(const YAML::Node& n) {
  if (n["label"]) return n["label"].as<std::string>();
  std::string s = n["generator"].as<std::string>();
  for (const char* key : {"level", "radius", "segments"})
    if (n[key]) s += "-" + std::string(key).substr(0, 1) + n[key].as<std::string>();
  return s;
}

inline DiscreteVarifold build_varifold(const YAML::Node& n, const AmbientPtr& ambient, const std::string& where) {
  const auto q = parse_quadrature(get_or<std::string>(n, "quadrature", "centroid", where), where);
  return from_mesh(build_mesh(n, ambient, where), q);
}

// ---- fields and flow ---------------------------------------------------------

inline VectorField build_field(const YAML::Node& n, const Ambient& m, const std::string& where) {
  if (n.IsScalar()) {
    const auto s = n.as<std::string>();
    if (s == "position") return VectorField::position(m.dim());
    invalid(where, "unknown field '" + s + "'");
  }
  const auto comps = n.as<std::vector<std::string>>();
  return VectorField::from_expressions(comps, Domain::chart_coordinate_names(m));
}

inline FlowConfig build_flow(const YAML::Node& n, const std::string& where) {
  FlowConfig c;
  if (!n) return c;
  check_keys(n,
             {"beta", "delta", "epsilon", "vertices", "horizon", "t_max", "tol_H", "stall_tol", "window",
              "snapshot_stride", "residual_degree"},
             where);
  c.beta = get_or(n, "beta", c.beta, where);
  c.delta = get_or(n, "delta", c.delta, where);
  c.epsilon = get_or(n, "epsilon", c.epsilon, where);
  c.vertices = get_or(n, "vertices", c.vertices, where);
  c.horizon = get_or(n, "horizon", c.horizon, where);
  c.t_max = get_or(n, "t_max", c.t_max, where);
  c.tol_H = get_or(n, "tol_H", c.tol_H, where);
  c.stall_tol = get_or(n, "stall_tol", c.stall_tol, where);
  c.window = get_or(n, "window", c.window, where);
  c.snapshot_stride = get_or(n, "snapshot_stride", c.snapshot_stride, where);
  c.residual_degree = get_or(n, "residual_degree", c.residual_degree, where);
  try {
    c.validate();
  } catch (const Error& e) {
    invalid(where, e.what());
  }
  return c;
}

// ---- normalization -------------------------------------------------------------

/// Emit a node with mapping keys sorted; block style throughout.
inline void emit_sorted(YAML::Emitter& out, const YAML::Node& n) {
  if (n.IsMap()) {
    std::vector<std::string> keys;
    for (const auto& kv : n) keys.push_back(kv.first.as<std::string>());
    std::sort(keys.begin(), keys.end());
    out << YAML::BeginMap;
    for (const auto& k : keys) {
      out << YAML::Key << k << YAML::Value;
      emit_sorted(out, n[k]);
    }
    out << YAML::EndMap;
  } else if (n.IsSequence()) {
    out << YAML::BeginSeq;
    for (const auto& e : n) emit_sorted(out, e);
    out << YAML::EndSeq;
  } else if (n.IsNull()) {
    out << YAML::Null;
  } else {
    const auto s = n.as<std::string>();
    if (n.Tag() == "!") out << YAML::DoubleQuoted << s;  // quoted in the source
    else out << s;
  }
}

inline std::string normalize_config(const YAML::Node& n) {
  YAML::Emitter out;
  emit_sorted(out, n);
  return std::string(out.c_str()) + "\n";
}

}  // namespace isovar::cli
