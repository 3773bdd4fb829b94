#pragma once

// Scenario kinds. Each is prepared (inputs built and validated) before any
// runs, then executed into records, assertions and data files.

#include "config.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <sstream>

namespace isovar::cli {

using Json = nlohmann::ordered_json;

inline Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline std::string text(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return format_double(x);
}

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioResult {
  std::string id;
  std::string kind;
  std::vector<Json> records;
  std::vector<Assertion> assertions;
  std::vector<std::array<std::string, 4>> rows;  // item, metric, value, status
  std::vector<std::pair<std::string, std::string>> files;
  int error_code = 0;
  std::string error;

  bool pass() const {
    if (error_code) return false;
    for (const auto& a : assertions)
      if (!a.pass) return false;
    return true;
  }
  void expect(const std::string& name, bool ok, const std::string& detail) {
    assertions.push_back({name, ok, detail});
    rows.push_back({name, "assert", detail, ok ? "PASS" : "FAIL"});
  }
  void row(const std::string& item, const std::string& metric, double value, const std::string& status = "") {
    rows.push_back({item, metric, text(value), status});
  }
};

using Runner = std::function<void(ScenarioResult&)>;

struct Prepared {
  std::string id;
  std::string kind;
  Runner run;
};

inline Json report_json(const IsoperimetricReport& r) {
  Json j;
  j["check"] = r.check;
  j["lhs"] = num(r.lhs);
  j["boundary"] = num(r.boundary);
  j["curvature"] = num(r.curvature);
  if (!std::isnan(r.variation_lb)) j["variation_lb"] = num(r.variation_lb);
  if (!std::isnan(r.geometric)) j["geometric"] = num(r.geometric);
  j["rhs"] = num(r.rhs);
  j["ratio"] = num(r.ratio);
  j["constant"] = num(r.constant);
  j["verdict"] = to_string(r.verdict);
  if (r.verdict == Verdict::inconclusive) j["gap"] = num(r.gap);
  if (!std::isnan(r.alpha)) j["alpha"] = num(r.alpha);
  if (!std::isnan(r.c_prime)) j["c_prime"] = num(r.c_prime);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json tagged(Json head, const Json& body) {
  head.update(body, true);
  return head;
}

inline std::string series(const std::vector<std::pair<double, double>>& xy) {
  std::string s;
  for (const auto& [x, y] : xy) s += text(x) + " " + text(y) + "\n";
  return s;
}

struct MeshItem {
  std::string label;
  MeshSurface mesh;
  YAML::Node expect;
};

inline std::vector<MeshItem> build_meshes(const YAML::Node& sc, const AmbientPtr& ambient, const std::string& where) {
  const YAML::Node list = sc["meshes"];
  if (!list || !list.IsSequence()) invalid(where, "'meshes' must be a list");
  std::vector<MeshItem> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string w = where + ".meshes[" + std::to_string(i) + "]";
    out.push_back({mesh_label(list[i]), build_mesh(list[i], ambient, w), list[i]["expect"]});
  }
  return out;
}

inline MeshSurface dilate(const MeshSurface& m, double lambda) {
  if (!m.ambient().is_euclidean()) throw Error(ErrorKind::unsupported, "dilation needs a Euclidean ambient");
  std::vector<Vec> v;
  for (const Vec& p : m.vertices()) v.push_back(lambda * p);
  return MeshSurface(m.k(), m.ambient_ptr(), std::move(v), m.elements());
}

// ---- kinds -----------------------------------------------------------------------

inline Runner prepare_check_ball(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  auto meshes = build_meshes(sc, amb, where);
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"ratio_tolerance"}, where + ".expect");
  const double tol = ex ? get_or<double>(ex, "ratio_tolerance", -1.0, where) : -1.0;
  return [meshes, tol](ScenarioResult& res) {
    for (const auto& m : meshes) {
      const auto r = check_ball_bound(m.mesh);
      res.records.push_back(tagged({{"record", "check"}, {"scenario", res.id}, {"item", m.label}}, report_json(r)));
      res.row(m.label, "ratio/(r/k)", r.ratio / r.constant, to_string(r.verdict));
      double t = tol;
      if (m.expect && m.expect["ratio_tolerance"]) t = m.expect["ratio_tolerance"].as<double>();
      if (t >= 0)
        res.expect(m.label + " equality", std::abs(r.ratio / r.constant - 1) <= t,
                   "|ratio/(r/k) - 1| = " + text(std::abs(r.ratio / r.constant - 1)) + " <= " + text(t));
    }
  };
}

inline Runner prepare_check_linear(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  auto meshes = build_meshes(sc, amb, where);
  const double c = get<double>(sc, "constant", where);
  if (!(c > 0)) invalid(where, "constant must be positive");
  std::optional<Domain> domain;
  if (sc["domain"]) domain.emplace(build_domain(sc["domain"], amb, where + ".domain"));
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"verdict"}, where + ".expect");
  const std::string verdict = ex ? get_or<std::string>(ex, "verdict", "", where) : "";
  return [meshes, c, domain, verdict](ScenarioResult& res) {
    for (const auto& m : meshes) {
      const auto r = check_linear(m.mesh, c, domain ? &*domain : nullptr);
      res.records.push_back(tagged({{"record", "check"}, {"scenario", res.id}, {"item", m.label}}, report_json(r)));
      res.row(m.label, "ratio", r.ratio, to_string(r.verdict));
      std::string want = verdict;
      if (m.expect && m.expect["verdict"]) want = m.expect["verdict"].as<std::string>();
      if (!want.empty()) res.expect(m.label + " verdict", want == to_string(r.verdict), std::string(to_string(r.verdict)) + " (want " + want + ")");
    }
  };
}

inline Runner prepare_check_nonlinear(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  auto meshes = build_meshes(sc, amb, where);
  const double c = get<double>(sc, "constant", where);
  const double K = get_or<double>(sc, "K", 0.0, where);
  std::optional<double> c_lin;
  if (sc["linear_constant"]) c_lin = get<double>(sc, "linear_constant", where);
  const auto dil = get_or<std::vector<double>>(sc, "dilations", {1.0}, where);
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"verdict", "dilation_invariant"}, where + ".expect");
  const std::string verdict = ex ? get_or<std::string>(ex, "verdict", "", where) : "";
  const bool invariant = ex ? get_or<bool>(ex, "dilation_invariant", false, where) : false;
  return [=](ScenarioResult& res) {
    for (const auto& m : meshes) {
      std::vector<std::string> seen;
      for (double lam : dil) {
        // K scales like 1 / length, a linear constant like length
        std::optional<double> cl;
        if (c_lin) cl = *c_lin * lam;
        const auto r = check_nonlinear(dilate(m.mesh, lam), c, K / lam, cl);
        const std::string item = m.label + "@" + text(lam);
        Json j{{"record", "check"}, {"scenario", res.id}, {"item", item}, {"dilation", num(lam)}};
        j.update(report_json(r), true);
        res.records.push_back(j);
        res.row(item, "ratio", r.ratio, to_string(r.verdict));
        seen.push_back(to_string(r.verdict));
        if (!verdict.empty()) res.expect(item + " verdict", verdict == to_string(r.verdict), seen.back() + " (want " + verdict + ")");
      }
      if (invariant) {
        const bool same = std::all_of(seen.begin(), seen.end(), [&](const std::string& s) { return s == seen.front(); });
        res.expect(m.label + " dilation invariance", same, same ? "all " + seen.front() : "verdicts differ");
      }
    }
  };
}

inline Runner prepare_estimate(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where, unsigned seed) {
  if (!sc["domain"]) invalid(where, "estimate-constant needs a domain");
  const Domain domain = build_domain(sc["domain"], amb, where + ".domain");
  SamplerConfig cfg;
  cfg.seed = seed;
  if (const YAML::Node s = sc["sampler"]) {
    const std::string w = where + ".sampler";
    check_keys(s, {"chords", "circles", "segments", "grid", "degree", "fields"}, w);
    cfg.chords = get_or(s, "chords", cfg.chords, w);
    cfg.circles = get_or(s, "circles", cfg.circles, w);
    cfg.segments = get_or(s, "segments", cfg.segments, w);
    cfg.certificate_grid = get_or(s, "grid", cfg.certificate_grid, w);
    cfg.polynomial_degree = get_or(s, "degree", cfg.polynomial_degree, w);
    if (s["fields"])
      for (const auto& f : s["fields"]) cfg.extra_fields.push_back(build_field(f, *amb, w));
  }
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"lower", "upper", "tolerance", "lower_infinite", "upper_infinite"}, where + ".expect");
  return [domain, cfg, ex](ScenarioResult& res) {
    const auto e = estimate_constant(domain, 1, cfg);
    res.records.push_back(Json{{"record", "estimate"},
                               {"scenario", res.id},
                               {"domain", e.domain},
                               {"lower", num(e.lower)},
                               {"lower_witness", e.lower_witness},
                               {"lower_diverges", e.lower_diverges},
                               {"upper", num(e.upper)},
                               {"upper_witness", e.upper_witness},
                               {"seed", cfg.seed}});
    for (const auto& c : e.certificates)
      res.records.push_back(Json{{"record", "certificate"},
                                 {"scenario", res.id},
                                 {"field", c.field},
                                 {"sup", num(c.sup_norm)},
                                 {"mu", num(c.mu)},
                                 {"bound", num(c.bound())},
                                 {"grid", c.grid}});
    res.row(e.domain, "lower", e.lower, e.lower_witness);
    res.row(e.domain, "upper", e.upper, e.upper_witness);
    if (!ex) return;
    const double tol = get_or<double>(ex, "tolerance", 1e-6, "expect");
    if (ex["lower"]) {
      const double want = ex["lower"].as<double>();
      res.expect("lower", std::abs(e.lower - want) <= tol * std::max(1.0, std::abs(want)), text(e.lower) + " vs " + text(want));
    }
    if (ex["upper"]) {
      const double want = ex["upper"].as<double>();
      res.expect("upper", std::abs(e.upper - want) <= tol * std::max(1.0, std::abs(want)), text(e.upper) + " vs " + text(want));
    }
    if (ex["lower_infinite"])
      res.expect("lower infinite", std::isinf(e.lower) == ex["lower_infinite"].as<bool>(), text(e.lower));
    if (ex["upper_infinite"])
      res.expect("upper infinite", std::isinf(e.upper) == ex["upper_infinite"].as<bool>(), text(e.upper));
  };
}

inline Runner prepare_dichotomy(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  if (!sc["domain"]) invalid(where, "dichotomy needs a domain");
  const Domain domain = build_domain(sc["domain"], amb, where + ".domain");
  FlowConfig cfg = build_flow(sc["flow"], where + ".flow");
  cfg.snapshot_stride = 0;
  const YAML::Node ex = sc["expect"];
  if (ex)
    check_keys(ex, {"outcome", "t_ext", "length", "tolerance", "eigenvalue", "eigenvalue_tolerance", "residual_max"},
               where + ".expect");
  return [domain, cfg, ex](ScenarioResult& res) {
    const auto o = run_dichotomy(domain, cfg);
    const bool conv = o.kind == OutcomeKind::converged;
    Json j{{"record", "dichotomy"}, {"scenario", res.id}, {"outcome", conv ? "converged" : "extinct"}};
    if (conv) {
      j["limit_length"] = num(o.limit_length);
      j["residual"] = num(o.residual);
      j["stability_eigenvalue"] = num(o.stability_eigenvalue);
      j["max_H"] = num(o.max_H);
      j["final_curves"] = o.final_curves;
      j["coincident_pair"] = o.coincident_pair;
      j["symmetry_defect"] = num(o.symmetry_defect);
    } else {
      j["t_ext"] = num(o.t_ext);
    }
    j["t_final"] = num(o.t_final);
    j["steps"] = o.steps;
    j["nesting_ok"] = o.nesting_ok;
    res.records.push_back(j);
    std::vector<std::pair<double, double>> xy;
    for (const auto& h : o.trail) xy.emplace_back(h.t, h.length);
    res.files.emplace_back(res.id + ".length.dat", series(xy));
    if (conv) {
      std::ostringstream os;
      write_mesh(os, *o.geodesic);
      res.files.emplace_back(res.id + ".limit.mesh", os.str());
      res.row(domain.name(), "limit length", o.limit_length, "converged");
      res.row(domain.name(), "residual", o.residual);
      res.row(domain.name(), "eigenvalue", o.stability_eigenvalue, o.stability_eigenvalue >= -1e-6 ? "stable" : "unstable");
    } else {
      res.row(domain.name(), "t_ext", o.t_ext, "extinct");
    }
    if (!ex) return;
    const double tol = get_or<double>(ex, "tolerance", 1e-2, "expect");
    if (ex["outcome"]) {
      const auto want = ex["outcome"].as<std::string>();
      res.expect("outcome", want == (conv ? "converged" : "extinct"), std::string(conv ? "converged" : "extinct") + " (want " + want + ")");
    }
    if (ex["t_ext"] && !conv) {
      const double want = ex["t_ext"].as<double>();
      res.expect("t_ext", std::abs(o.t_ext - want) <= tol * want, text(o.t_ext) + " vs " + text(want));
    }
    if (ex["length"] && conv) {
      const double want = ex["length"].as<double>();
      res.expect("limit length", std::abs(o.limit_length - want) <= tol * want, text(o.limit_length) + " vs " + text(want));
    }
    if (ex["eigenvalue"] && conv) {
      const double want = ex["eigenvalue"].as<double>();
      const double et = get_or<double>(ex, "eigenvalue_tolerance", 1e-2, "expect");
      res.expect("eigenvalue", std::abs(o.stability_eigenvalue - want) <= et, text(o.stability_eigenvalue) + " vs " + text(want));
    }
    if (ex["residual_max"] && conv) {
      const double want = ex["residual_max"].as<double>();
      res.expect("residual", o.residual < want, text(o.residual) + " < " + text(want));
    }
  };
}

inline Runner prepare_avoidance(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  if (!sc["domain"] || !sc["obstacle"]) invalid(where, "avoidance needs a domain and an obstacle");
  const Domain domain = build_domain(sc["domain"], amb, where + ".domain");
  FlowConfig cfg = build_flow(sc["flow"], where + ".flow");
  if (cfg.horizon <= 0) cfg.horizon = 5.0;
  const DiscreteVarifold obstacle = build_varifold(sc["obstacle"], amb, where + ".obstacle");
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"pass"}, where + ".expect");
  return [domain, cfg, obstacle, ex](ScenarioResult& res) {
    std::vector<Snapshot> traj;
    run_flow(initial_state(domain, cfg), cfg, &traj);
    const auto rep = avoidance_monitor(domain.ambient(), traj, obstacle);
    res.records.push_back(Json{{"record", "avoidance"},
                               {"scenario", res.id},
                               {"pass", rep.pass},
                               {"min_distance", num(rep.min_distance)},
                               {"initial_distance", num(rep.distances.empty() ? kInf : rep.distances.front())},
                               {"final_distance", num(rep.distances.empty() ? kInf : rep.distances.back())},
                               {"monotone_approach", rep.monotone_approach},
                               {"samples", rep.distances.size()},
                               {"horizon", num(cfg.horizon)}});
    std::vector<std::pair<double, double>> xy;
    for (std::size_t i = 0; i < rep.times.size(); ++i) xy.emplace_back(rep.times[i], rep.distances[i]);
    res.files.emplace_back(res.id + ".distance.dat", series(xy));
    res.row(domain.name(), "min distance", rep.min_distance, rep.pass ? "PASS" : "FAIL");
    if (ex && ex["pass"]) res.expect("avoidance", rep.pass == ex["pass"].as<bool>(), "min distance " + text(rep.min_distance));
  };
}

inline Runner prepare_compactness(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  const YAML::Node list = sc["meshes"];
  if (!list || !list.IsSequence() || list.size() == 0) invalid(where, "'meshes' must be a non-empty list");
  std::vector<DiscreteVarifold> seq;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < list.size(); ++i) {
    seq.push_back(build_varifold(list[i], amb, where + ".meshes[" + std::to_string(i) + "]"));
    labels.push_back(mesh_label(list[i]));
  }
  const int degree = get_or<int>(sc, "degree", 4, where);
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"residuals_decreasing", "ratios_increasing", "mass_limit", "mass_tolerance", "final_residual_max"}, where + ".expect");
  return [seq, labels, degree, ex](ScenarioResult& res) {
    const auto t = ratio_sequence_probe(seq, degree);
    std::vector<std::pair<double, double>> xy;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      res.records.push_back(Json{{"record", "probe"},
                                 {"scenario", res.id},
                                 {"item", labels[i]},
                                 {"mass", num(r.mass)},
                                 {"residual", num(r.residual)},
                                 {"ratio_upper", num(r.ratio_upper)},
                                 {"ratio_geometric", num(r.ratio_geometric)},
                                 {"distance_to_last", num(r.distance_to_last)}});
      res.row(labels[i], "residual", r.residual);
      xy.emplace_back(static_cast<double>(i), r.residual);
    }
    res.files.emplace_back(res.id + ".residual.dat", series(xy));
    if (!ex) return;
    if (ex["residuals_decreasing"])
      res.expect("residuals decreasing", t.residuals_decreasing == ex["residuals_decreasing"].as<bool>(), t.residuals_decreasing ? "yes" : "no");
    if (ex["ratios_increasing"])
      res.expect("ratios increasing", t.ratios_increasing == ex["ratios_increasing"].as<bool>(), t.ratios_increasing ? "yes" : "no");
    if (ex["final_residual_max"]) {
      const double want = ex["final_residual_max"].as<double>();
      res.expect("final residual", t.rows.back().residual < want, text(t.rows.back().residual) + " < " + text(want));
    }
    if (ex["mass_limit"]) {
      const double want = ex["mass_limit"].as<double>();
      const double tol = get_or<double>(ex, "mass_tolerance", 1e-3, "expect");
      res.expect("mass limit", std::abs(t.rows.back().mass - want) <= tol, text(t.rows.back().mass) + " vs " + text(want));
    }
  };
}

inline Runner prepare_stability(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  StabilityProblem p;
  if (sc["mesh"]) {
    p = stability_problem(build_mesh(sc["mesh"], amb, where + ".mesh"), get_or<int>(sc, "grid", 256, where));
  } else if (const YAML::Node q = sc["potential"]) {
    check_keys(q, {"length", "q", "grid"}, where + ".potential");
    p.length = get<double>(q, "length", where);
    p.q.assign(static_cast<std::size_t>(get_or<int>(q, "grid", 256, where)), get<double>(q, "q", where));
  } else {
    invalid(where, "stability needs a mesh or a potential");
  }
  if (p.q.size() < 64) invalid(where, "stability grid must have at least 64 points");
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"eigenvalue", "tolerance", "stable"}, where + ".expect");
  return [p, ex](ScenarioResult& res) {
    const auto r = stability_spectrum(p);
    res.records.push_back(Json{{"record", "stability"},
                               {"scenario", res.id},
                               {"length", num(p.length)},
                               {"grid", p.q.size()},
                               {"eigenvalue", num(r.eigenvalue)},
                               {"stable", r.stable()}});
    res.row("geodesic", "eigenvalue", r.eigenvalue, r.stable() ? "stable" : "unstable");
    if (!ex) return;
    if (ex["eigenvalue"]) {
      const double want = ex["eigenvalue"].as<double>();
      const double tol = get_or<double>(ex, "tolerance", 1e-3, "expect");
      res.expect("eigenvalue", std::abs(r.eigenvalue - want) <= tol, text(r.eigenvalue) + " vs " + text(want));
    }
    if (ex["stable"]) res.expect("stable", r.stable() == ex["stable"].as<bool>(), r.stable() ? "stable" : "unstable");
  };
}

/// Sum of embedded chord lengths (k = 1). Unlike `measure`, which integrates
/// the metric along chart segments, this sees the embedding's curvature.
inline double chord_measure(const MeshSurface& m) {
  if (m.k() != 1) throw Error(ErrorKind::unsupported, "chord-measure needs a polyline");
  const Ambient& a = m.ambient();
  const auto& V = m.vertices();
  CompensatedSum s;
  for (const auto& e : m.elements())
    s.add((a.embed(V[static_cast<std::size_t>(e[1])]) - a.embed(V[static_cast<std::size_t>(e[0])])).norm());
  return s.value();
}

struct TableRow {
  double h = 0.0;
  double value = 0.0;
  double error = 0.0;
  double order = std::numeric_limits<double>::quiet_NaN();  // NaN: n/a
};

inline std::vector<TableRow> convergence_rows(const std::vector<double>& h, const std::vector<double>& values,
                                              double exact) {
  if (h.size() < 3) throw Error(ErrorKind::insufficient_data, "a convergence table needs at least 3 levels");
  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < h.size(); ++i) rows.push_back({h[i], values[i], std::abs(values[i] - exact)});
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double a = rows[i].error, b = rows[i + 1].error;
    if (a > 1e-12 && b > 1e-12) rows[i + 1].order = std::log2(a / b);
  }
  return rows;
}

inline std::string format_table(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %-24s %-14s %s\n", "h", "value", "error", "order");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-14.6e %-24.16e %-14.6e %s\n", r.h, r.value, r.error,
                  std::isnan(r.order) ? "n/a" : text(std::round(r.order * 1e4) / 1e4).c_str());
    os << buf;
  }
  return os.str();
}

/// Refinement study: the mesh template is rebuilt per level with
/// segments = 2^level (polylines) or level (disk, icosphere).
inline Runner prepare_convergence(const YAML::Node& sc, const AmbientPtr& amb, const std::string& where) {
  const auto quantity = get<std::string>(sc, "quantity", where);
  static const std::set<std::string> quantities{"divergence-residual", "measure", "chord-measure", "total-curvature"};
  if (!quantities.count(quantity))
    invalid(where, "quantity must be divergence-residual, measure, chord-measure or total-curvature");
  const auto levels = get<std::vector<int>>(sc, "levels", where);
  if (!sc["mesh"]) invalid(where, "convergence needs a mesh template");
  std::vector<MeshSurface> meshes;
  std::vector<double> h;
  for (int l : levels) {
    YAML::Node t = YAML::Clone(sc["mesh"]);
    const auto gen = get<std::string>(t, "generator", where);
    if (gen == "disk" || gen == "icosphere") {
      t["level"] = l;
      h.push_back(std::ldexp(1.0, -l));
    } else {
      t["segments"] = 1 << l;
      h.push_back(1.0 / (1 << l));
    }
    meshes.push_back(build_mesh(t, amb, where + ".mesh"));
  }
  std::optional<VectorField> field;
  if (quantity == "divergence-residual") {
    if (!sc["field"]) invalid(where, "divergence-residual needs a field");
    field = build_field(sc["field"], meshes.front().ambient(), where + ".field");
  }
  const double exact = quantity == "divergence-residual" ? 0.0 : get<double>(sc, "exact", where);
  const YAML::Node ex = sc["expect"];
  if (ex) check_keys(ex, {"min_order"}, where + ".expect");
  return [=](ScenarioResult& res) {
    std::vector<double> values;
    for (const auto& m : meshes) {
      if (quantity == "divergence-residual") values.push_back(divergence_identity_residual(m, *field));
      else if (quantity == "measure") values.push_back(measure(m));
      else if (quantity == "chord-measure") values.push_back(chord_measure(m));
      else values.push_back(total_abs_curvature(m));
    }
    const auto rows = convergence_rows(h, values, exact);
    for (const auto& r : rows) {
      res.records.push_back(Json{{"record", "refinement"},
                                 {"scenario", res.id},
                                 {"quantity", quantity},
                                 {"h", num(r.h)},
                                 {"value", num(r.value)},
                                 {"error", num(r.error)},
                                 {"order", std::isnan(r.order) ? Json("n/a") : num(r.order)}});
      res.row("h=" + text(r.h), "error", r.error, std::isnan(r.order) ? "order n/a" : "order " + text(r.order));
    }
    res.files.emplace_back(res.id + ".table.txt", format_table(rows));
    if (ex && ex["min_order"]) {
      const double want = ex["min_order"].as<double>();
      bool ok = true;
      for (const auto& r : rows)
        if (!std::isnan(r.order) && r.order < want) ok = false;
      res.expect("empirical order", ok, ">= " + text(want));
    }
  };
}

inline const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> keys{"id",     "kind",     "ambient", "domain",   "meshes",   "mesh",
                                          "expect", "constant", "K",       "linear_constant", "dilations",
                                          "sampler", "flow",    "obstacle", "degree",  "grid",     "potential",
                                          "quantity", "levels", "field",   "exact"};
  return keys;
}

inline Prepared prepare(const YAML::Node& sc, std::size_t index, unsigned seed) {
  const std::string where = "scenarios[" + std::to_string(index) + "]";
  check_keys(sc, scenario_keys(), where);
  Prepared p;
  p.id = get<std::string>(sc, "id", where);
  p.kind = get<std::string>(sc, "kind", where);
  if (p.id.empty() || p.id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") != std::string::npos)
    invalid(where, "id must be non-empty and use [A-Za-z0-9_.-]");
  AmbientPtr amb;
  if (sc["ambient"]) amb = build_ambient(sc["ambient"], where + ".ambient");
  const std::string w = where + " (" + p.id + ")";
  if (p.kind == "check-ball") p.run = prepare_check_ball(sc, amb, w);
  else if (p.kind == "check-linear") p.run = prepare_check_linear(sc, amb, w);
  else if (p.kind == "check-nonlinear") p.run = prepare_check_nonlinear(sc, amb, w);
  else if (p.kind == "estimate-constant") p.run = prepare_estimate(sc, amb, w, seed);
  else if (p.kind == "dichotomy") p.run = prepare_dichotomy(sc, amb, w);
  else if (p.kind == "avoidance") p.run = prepare_avoidance(sc, amb, w);
  else if (p.kind == "compactness-probe") p.run = prepare_compactness(sc, amb, w);
  else if (p.kind == "stability") p.run = prepare_stability(sc, amb, w);
  else if (p.kind == "convergence") p.run = prepare_convergence(sc, amb, w);
  else invalid(where, "unknown kind '" + p.kind + "'");
  return p;
}

}  // namespace isovar::cli
