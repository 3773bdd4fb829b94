#pragma once

// Checkers for the linear, ball, nonlinear and varifold isoperimetric
// inequalities, certificate fields bounding c_N from above, and a two-sided
// estimate of c_N.

#include "isovar/domain.hpp"
#include "isovar/enclosing_ball.hpp"
#include "isovar/mesh.hpp"
#include "isovar/test_family.hpp"
#include "isovar/varifold.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace isovar {

enum class Verdict { holds, violated, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct IsoperimetricReport {
  std::string check;
  double lhs = 0.0;
  double boundary = 0.0;    // |dM| (mesh checks)
  double curvature = 0.0;   // int |H| (mesh checks)
  double variation_lb = std::numeric_limits<double>::quiet_NaN();  // certified lower bound for |delta V|
  double geometric = std::numeric_limits<double>::quiet_NaN();     // exact |delta V| of the backing mesh
  double rhs = 0.0;
  double ratio = 0.0;       // lhs / rhs
  double constant = 0.0;
  Verdict verdict = Verdict::inconclusive;
  double gap = 0.0;         // for inconclusive: lhs / (c * lb) - 1
  // nonlinear check
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double c_prime = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

namespace detail {

inline double safe_ratio(double lhs, double rhs) {
  if (rhs > 0) return lhs / rhs;
  return lhs > 0 ? kInf : 0.0;
}

inline Verdict compare(double ratio, double c) {
  return ratio <= c * (1 + 1e-12) ? Verdict::holds : Verdict::violated;
}

inline void require_inside(const MeshSurface& mesh, const Domain* domain) {
  if (!domain) return;
  if (domain->ambient().id() != mesh.ambient().id())
    throw Error(ErrorKind::containment, "mesh and domain live in different ambients");
  for (const Vec& v : mesh.vertices())
    if (!domain->contains(v, 1e-9)) throw Error(ErrorKind::containment, "mesh leaves the domain");
}

}  // namespace detail

/// |M| <= c (|dM| + int |H|).
inline IsoperimetricReport check_linear(const MeshSurface& mesh, double c, const Domain* domain = nullptr) {
  if (!(c > 0)) throw Error(ErrorKind::invalid_constant, "constant must be positive");
  detail::require_inside(mesh, domain);
  IsoperimetricReport r;
  r.check = "linear";
  r.lhs = measure(mesh);
  r.boundary = boundary_measure(mesh);
  r.curvature = total_abs_curvature(mesh);
  r.rhs = r.boundary + r.curvature;
  r.ratio = detail::safe_ratio(r.lhs, r.rhs);
  r.constant = c;
  r.verdict = detail::compare(r.ratio, c);
  return r;
}

/// |M| <= (r / k)(|dM| + int |H|), r the smallest enclosing ball radius.
inline IsoperimetricReport check_ball_bound(const MeshSurface& mesh) {
  if (!mesh.ambient().is_euclidean()) throw Error(ErrorKind::unsupported, "the ball bound needs a Euclidean ambient");
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(mesh.vertices().size());
  for (const Vec& v : mesh.vertices()) pts.push_back(Eigen::VectorXd(v));
  const double radius = min_enclosing_ball(pts).radius;
  IsoperimetricReport r;
  r.check = "ball";
  r.lhs = measure(mesh);
  r.boundary = boundary_measure(mesh);
  r.curvature = total_abs_curvature(mesh);
  r.rhs = r.boundary + r.curvature;
  r.ratio = detail::safe_ratio(r.lhs, r.rhs);
  r.constant = radius / mesh.k();
  r.verdict = detail::compare(r.ratio, r.constant);
  r.note = "radius=" + format_double(radius);
  return r;
}

/// alpha = (2 c K)^(-k); infinite when K = 0.
inline double nonlinear_alpha(double c_euclidean, double K, int k) {
  if (!(c_euclidean > 0) || !(K >= 0)) throw Error(ErrorKind::invalid_constant, "need c > 0 and K >= 0");
  if (K == 0) return kInf;
  return std::pow(2 * c_euclidean * K, -k);
}

/// |M|^(1 - 1/k) <= c' (|dM| + int |H|) with c' = 2 c for |M| <= alpha. Above
/// the threshold a known linear constant gives c' = c_linear alpha^(-1/k).
inline IsoperimetricReport check_nonlinear(const MeshSurface& mesh, double c_euclidean, double K,
                                           std::optional<double> c_linear = std::nullopt) {
  const int k = mesh.k();
  IsoperimetricReport r;
  r.check = "nonlinear";
  r.alpha = nonlinear_alpha(c_euclidean, K, k);
  r.c_prime = 2 * c_euclidean;
  const double m = measure(mesh);
  r.lhs = std::pow(m, 1.0 - 1.0 / k);
  r.boundary = boundary_measure(mesh);
  r.curvature = total_abs_curvature(mesh);
  r.rhs = r.boundary + r.curvature;
  r.ratio = detail::safe_ratio(r.lhs, r.rhs);
  if (m <= r.alpha) {
    r.constant = r.c_prime;
    r.verdict = detail::compare(r.ratio, r.constant);
  } else if (c_linear) {
    if (!(*c_linear > 0)) throw Error(ErrorKind::invalid_constant, "linear constant must be positive");
    r.constant = *c_linear * std::pow(r.alpha, -1.0 / k);
    r.verdict = detail::compare(r.ratio, r.constant);
    r.note = "large mass: c' = c alpha^(-1/k)";
  } else {
    r.constant = r.c_prime;
    r.verdict = Verdict::inconclusive;
    r.gap = m / r.alpha - 1;
    r.note = "mass above alpha and no linear constant given";
  }
  return r;
}

/// |V| <= c |delta V|. Mesh-backed varifolds are judged against the exact
/// norm of the mesh. Otherwise only the certified lower bound lb <= |delta V|
/// is known: |V| <= c lb certifies holding, anything else is inconclusive.
inline IsoperimetricReport check_varifold_linear(const DiscreteVarifold& v, double c, int degree = 4,
                                                 const Domain* domain = nullptr) {
  if (!(c > 0)) throw Error(ErrorKind::invalid_constant, "constant must be positive");
  if (domain) {
    for (const auto& a : v.atoms())
      if (a.w > 0 && !domain->contains(a.p, 1e-9)) throw Error(ErrorKind::containment, "varifold leaves the domain");
  }
  IsoperimetricReport r;
  r.check = "varifold-linear";
  r.constant = c;
  r.lhs = mass(v);
  r.variation_lb = v.empty() ? 0.0 : first_variation_norm_lb(v, degree);
  if (v.geometric_variation()) {
    r.geometric = *v.geometric_variation();
    r.rhs = r.geometric;
    r.ratio = detail::safe_ratio(r.lhs, r.rhs);
    r.verdict = detail::compare(r.ratio, c);
    return r;
  }
  r.rhs = r.variation_lb;
  r.ratio = detail::safe_ratio(r.lhs, r.rhs);
  if (r.lhs == 0 || detail::compare(r.ratio, c) == Verdict::holds) {
    r.verdict = Verdict::holds;
  } else {
    r.verdict = Verdict::inconclusive;
    r.gap = r.ratio / c - 1;
    r.note = "only a lower bound for |delta V| is available";
  }
  return r;
}

// ---- certificates --------------------------------------------------------

struct Certificate {
  std::string field;
  double sup_norm = 0.0;  // sampled sup |X|_g used to normalize
  double mu = 0.0;        // min over samples of div_S (X / sup) over k-planes
  Vec argmin;             // where mu is attained
  int grid = 0;
  int k = 1;
  bool valid() const { return mu > 0; }
  double bound() const { return valid() ? 1.0 / mu : kInf; }
};

namespace detail {

/// Chart box of the region: the boundary box, widened on bounded charts by a
/// scan for interior points (a polar cap has its pole inside).
inline std::pair<Vec, Vec> region_box(const Domain& domain) {
  auto [lo, hi] = domain.bounding_box();
  const Chart& ch = domain.ambient().chart();
  if (!std::isfinite(ch.lo(0)) || !std::isfinite(ch.hi(0)) || !std::isfinite(ch.lo(1)) || !std::isfinite(ch.hi(1)))
    return {lo, hi};
  const int n = 257;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec p = make_vec(ch.lo(0) + ch.period(0) * i / (n - 1), ch.lo(1) + ch.period(1) * j / (n - 1));
      if (!domain.contains(p, 0.0)) continue;
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  return {lo, hi};
}

/// Domain grid points plus boundary samples, all inside the chart.
inline std::vector<Vec> domain_samples(const Domain& domain, int grid) {
  const Ambient& m = domain.ambient();
  auto [lo, hi] = region_box(domain);
  std::vector<Vec> pts;
  const Chart& ch = m.chart();
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      Vec p = make_vec(lo(0) + (hi(0) - lo(0)) * i / (grid - 1), lo(1) + (hi(1) - lo(1)) * j / (grid - 1));
      for (int a = 0; a < 2; ++a) p(a) = std::clamp(p(a), ch.lo(a), ch.hi(a));
      if (!domain.contains(p, 1e-12)) continue;
      pts.push_back(p);
    }
  }
  for (const auto& c : domain.boundary())
    for (int i = 0; i < 4 * grid; ++i) pts.push_back(m.wrap(c.point(c.param(i, 4 * grid))));
  // drop chart singularities (coordinate poles)
  std::vector<Vec> out;
  for (const Vec& p : pts) {
    if (!m.in_chart(p)) continue;
    Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(m.metric_raw(p))};
    if (llt.info() == Eigen::Success && llt.matrixL()(1, 1) > 1e-9) out.push_back(p);
  }
  return out;
}

/// Sum of the k smallest eigenvalues of the g-symmetrized covariant derivative.
inline double min_plane_divergence(const Ambient& m, const Vec& p, const VectorField& x, int k) {
  const Mat g = m.metric_raw(p);
  const Eigen::MatrixXd lt = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(g)).matrixU();
  const Eigen::MatrixXd a = lt * Eigen::MatrixXd(x.covariant(m, p)) * lt.inverse();
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues();
  return ev.head(k).sum();
}

}  // namespace detail

/// mu = min over samples p and k-planes S of div_S X(p), for X normalized by
/// its sampled sup norm over the domain. Never throws on mu <= 0.
inline Certificate evaluate_certificate(const VectorField& x, const Domain& domain, int k = 1, int grid = 65) {
  const Ambient& m = domain.ambient();
  x.check(m);
  if (k < 1 || k >= m.dim()) throw Error(ErrorKind::validation, "certificate dimension out of range");
  Certificate c;
  c.field = x.description();
  c.grid = grid;
  c.k = k;
  const std::vector<Vec> pts = detail::domain_samples(domain, grid);
  if (pts.empty()) throw Error(ErrorKind::invalid_domain, "no sample points inside the domain");
  for (const Vec& p : pts) c.sup_norm = std::max(c.sup_norm, norm(m, p, x(p)));
  if (!(c.sup_norm > 0)) {
    c.mu = 0;
    c.argmin = pts.front();
    return c;
  }
  c.mu = kInf;
  for (const Vec& p : pts) {
    const double d = detail::min_plane_divergence(m, p, x, k) / c.sup_norm;
    if (d < c.mu) {
      c.mu = d;
      c.argmin = p;
    }
  }
  return c;
}

inline Certificate certificate_bound(const VectorField& x, const Domain& domain, int k = 1, int grid = 65) {
  Certificate c = evaluate_certificate(x, domain, k, grid);
  if (!c.valid())
    throw Error(ErrorKind::certificate_invalid, "certificate has mu = " + format_double(c.mu) + " <= 0");
  return c;
}

/// Family-appropriate dilation-type fields: chart dilation about the box
/// center (flat charts), sin(theta) d/dtheta on the sphere, sinh(a r) d/dr in
/// geodesic polar coordinates, z d/dz on surfaces of revolution.
inline std::vector<VectorField> default_certificate_fields(const Domain& domain) {
  const Ambient& m = domain.ambient();
  auto [lo, hi] = detail::region_box(domain);
  const Vec center = 0.5 * (lo + hi);
  const auto names = domain.coordinate_names();
  std::vector<VectorField> out;
  switch (m.family()) {
    case MetricFamily::round_sphere:
      out.push_back(VectorField::from_expressions({"sin(theta)", "0"}, names));
      out.push_back(VectorField::from_expressions({"-sin(theta)", "0"}, names));
      break;
    case MetricFamily::hyperbolic: {
      const std::string a = format_double(std::sqrt(-m.curvature_parameter()));
      out.push_back(VectorField::from_expressions({"sinh(" + a + "*r)", "0"}, names));
      break;
    }
    case MetricFamily::revolution:
      out.push_back(VectorField::from_expressions({"z - " + format_double(center(0)), "0"}, names));
      break;
    case MetricFamily::product:
      out.push_back(VectorField::from_expressions({"0", "z - " + format_double(center(1))}, names));
      break;
    default:
      out.push_back(VectorField::dilation(center));
      break;
  }
  return out;
}

/// Single basis fields of a low-degree test family over the domain box.
inline std::vector<VectorField> polynomial_certificate_fields(const Domain& domain, int degree = 2) {
  auto [lo, hi] = detail::region_box(domain);
  const Chart& ch = domain.ambient().chart();
  for (int i = 0; i < 2; ++i) {
    if (ch.periodic[static_cast<std::size_t>(i)] && hi(i) - lo(i) >= ch.period(i) - 1e-12) continue;
    const double pad = 1e-3 * std::max(hi(i) - lo(i), 1.0);
    lo(i) = std::max(lo(i) - pad, ch.lo(i) + 1e-9);
    hi(i) = std::min(hi(i) + pad, ch.hi(i) - 1e-9);
  }
  const TestFamily fam(domain.ambient_ptr(), lo, hi, degree);
  std::vector<VectorField> out;
  for (int i = 0; i < fam.size(); ++i) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(fam.size());
    c(i) = 1;
    out.push_back(fam.member(c));
  }
  return out;
}

// ---- constant estimation ---------------------------------------------------

struct ConstantEstimate {
  std::string domain;
  int k = 1;
  double lower = 0.0;
  std::string lower_witness;
  bool lower_diverges = false;  // witness ratio beyond 1e6 (or rhs = 0) with a positive trend
  double upper = kInf;
  std::string upper_witness;
  std::vector<Certificate> certificates;
};

struct SamplerConfig {
  int chords = 24;            // random chart chords between boundary points
  int circles = 9;            // closed test curves (concentric / latitude / perturbed)
  int segments = 128;         // polyline resolution
  std::vector<int> refinements{64, 256, 1024};  // witness refinement ladder
  int certificate_grid = 65;
  int polynomial_degree = 2;
  std::vector<VectorField> extra_fields;
  unsigned seed = 1;
};

namespace detail {

struct Witness {
  std::string name;
  std::function<MeshSurface(int)> make;  // by resolution
};

inline std::vector<Witness> witnesses(const Domain& domain, const SamplerConfig& cfg) {
  const AmbientPtr m = domain.ambient_ptr();
  std::vector<Witness> out;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // chords between boundary points of the first component
  if (!domain.boundary().empty()) {
    const ParamCurve& b = domain.boundary().front();
    for (int i = 0; i < cfg.chords; ++i) {
      const double t0 = b.t0 + (b.t1 - b.t0) * u01(rng);
      const double t1 = i == 0 ? t0 + 0.5 * (b.t1 - b.t0) : b.t0 + (b.t1 - b.t0) * u01(rng);
      const Vec a = m->wrap(b.point(t0)), c = m->wrap(b.point(t1));
      if (m->delta(a, c).norm() < 1e-6) continue;
      out.push_back({"chord(" + format_double(t0) + "," + format_double(t1) + ")",
                     [m, a, c](int n) { return segment_polyline(m, a, c, n); }});
    }
  }
  auto [lo, hi] = region_box(domain);
  const Vec center = 0.5 * (lo + hi);
  const Chart& ch = m->chart();
  const bool latitudes = ch.periodic[1] || ch.periodic[0];
  for (int i = 1; i <= cfg.circles; ++i) {
    const double s = static_cast<double>(i) / (cfg.circles + 1);
    if (latitudes) {
      // level sets of the non-periodic coordinate
      const int fixed = ch.periodic[1] ? 0 : 1;
      const double level = lo(fixed) + (hi(fixed) - lo(fixed)) * s;
      std::string u = fixed == 0 ? format_double(level) : "t";
      std::string v = fixed == 0 ? "t" : format_double(level);
      const double per = ch.period(1 - fixed);
      const ParamCurve c(u, v, ch.lo(1 - fixed), ch.lo(1 - fixed) + per);
      out.push_back({"latitude(" + format_double(level) + ")",
                     [m, c](int n) { return polyline_from_curve(m, c, n, true); }});
      // perturbed copy
      const std::string wob = format_double(level) + " + " + format_double(0.05 * (hi(fixed) - lo(fixed)) * s) +
                              "*sin(" + format_double(2 * kPi / per * 3) + "*t)";
      const ParamCurve cp(fixed == 0 ? wob : "t", fixed == 0 ? "t" : wob, ch.lo(1 - fixed), ch.lo(1 - fixed) + per);
      out.push_back({"perturbed-latitude(" + format_double(level) + ")",
                     [m, cp](int n) { return polyline_from_curve(m, cp, n, true); }});
    } else {
      const double rad = 0.5 * std::min(hi(0) - lo(0), hi(1) - lo(1)) * s;
      const ParamCurve c(format_double(center(0)) + " + " + format_double(rad) + "*cos(t)",
                         format_double(center(1)) + " + " + format_double(rad) + "*sin(t)");
      out.push_back({"circle(" + format_double(rad) + ")", [m, c](int n) { return polyline_from_curve(m, c, n, true); }});
      const ParamCurve cp(format_double(center(0)) + " + " + format_double(rad) + "*(1 + 0.1*sin(3*t))*cos(t)",
                          format_double(center(1)) + " + " + format_double(rad) + "*(1 + 0.1*sin(3*t))*sin(t)");
      out.push_back({"perturbed-circle(" + format_double(rad) + ")",
                     [m, cp](int n) { return polyline_from_curve(m, cp, n, true); }});
    }
  }
  return out;
}

inline bool inside(const MeshSurface& mesh, const Domain& domain) {
  for (const Vec& v : mesh.vertices())
    if (!domain.contains(v, 1e-9)) return false;
  return true;
}

}  // namespace detail

/// Lower bound: largest |M| / (|dM| + int |H|) over the sampled test curves
/// (divergence flagged when a witness exceeds 1e6 with a rising trend under
/// refinement). Upper bound: best certificate among the candidates.
inline ConstantEstimate estimate_constant(const Domain& domain, int k = 1, const SamplerConfig& cfg = {}) {
  if (k != 1) throw Error(ErrorKind::unsupported, "constant estimation is implemented for curves (k = 1)");
  ConstantEstimate est;
  est.domain = domain.name();
  est.k = k;
  const int n = cfg.segments;
  for (const auto& w : detail::witnesses(domain, cfg)) {
    std::optional<MeshSurface> mesh;
    try {
      mesh.emplace(w.make(n));
    } catch (const Error&) {
      continue;
    }
    if (!detail::inside(*mesh, domain)) continue;
    const IsoperimetricReport r = check_linear(*mesh, 1.0);
    if (r.ratio > est.lower || (std::isinf(r.ratio) && !est.lower_diverges)) {
      est.lower = r.ratio;
      est.lower_witness = w.name;
      // refinement trend
      std::vector<double> seq;
      for (int res : cfg.refinements) seq.push_back(check_linear(w.make(res), 1.0).ratio);
      const bool rising = std::is_sorted(seq.begin(), seq.end());
      est.lower_diverges = std::isinf(r.ratio) || (seq.back() > 1e6 && rising);
      if (est.lower_diverges) est.lower = kInf;
    }
  }
  std::vector<VectorField> fields = default_certificate_fields(domain);
  for (auto& f : polynomial_certificate_fields(domain, cfg.polynomial_degree)) fields.push_back(std::move(f));
  for (const auto& f : cfg.extra_fields) fields.push_back(f);
  for (const auto& f : fields) {
    const Certificate c = evaluate_certificate(f, domain, k, cfg.certificate_grid);
    est.certificates.push_back(c);
    if (c.valid() && c.bound() < est.upper) {
      est.upper = c.bound();
      est.upper_witness = c.field;
    }
  }
  return est;
}

// ---- ratio sequences -------------------------------------------------------

struct RatioRow {
  double mass = 0.0;            // before normalization
  double residual = 0.0;        // certified |delta V| lower bound of V / |V|
  double ratio_upper = kInf;    // |V| / lb, an upper bound for |V| / |delta V|
  double ratio_geometric = std::numeric_limits<double>::quiet_NaN();  // mesh-backed exact ratio
  double distance_to_last = 0.0;  // bl_distance between normalized terms
};

struct RatioTable {
  std::vector<RatioRow> rows;
  bool residuals_decreasing = false;
  bool ratios_increasing = false;
};

inline RatioTable ratio_sequence_probe(const std::vector<DiscreteVarifold>& seq, int degree = 4) {
  if (seq.empty()) throw Error(ErrorKind::validation, "empty varifold sequence");
  RatioTable t;
  std::vector<DiscreteVarifold> normalized;
  for (const auto& v : seq) {
    const double m = mass(v);
    normalized.push_back(m > 0 ? scale(v, 1 / m) : v);
  }
  const BLFamily fam(seq.front().ambient());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    RatioRow r;
    r.mass = mass(seq[i]);
    const double lb = normalized[i].empty() ? 0.0 : first_variation_norm_lb(normalized[i], degree);
    r.residual = lb;
    r.ratio_upper = lb > 0 ? 1 / lb : kInf;
    if (normalized[i].geometric_variation())
      r.ratio_geometric = detail::safe_ratio(1.0, *normalized[i].geometric_variation());
    r.distance_to_last = bl_distance(normalized[i], normalized.back(), fam);
    t.rows.push_back(r);
  }
  t.residuals_decreasing = true;
  t.ratios_increasing = true;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (!(t.rows[i].residual < t.rows[i - 1].residual)) t.residuals_decreasing = false;
    const double a = std::isnan(t.rows[i].ratio_geometric) ? t.rows[i].ratio_upper : t.rows[i].ratio_geometric;
    const double b =
        std::isnan(t.rows[i - 1].ratio_geometric) ? t.rows[i - 1].ratio_upper : t.rows[i - 1].ratio_geometric;
    if (!(a > b)) t.ratios_increasing = false;
  }
  return t;
}

}  // namespace isovar
