#pragma once

// Finite atomic varifolds on the Grassmannian bundle G_k(N): atoms (p, S, w)
// with S a g-orthonormal k-frame. Mass, support, first variation, scaling,
// bounded-Lipschitz distance and a bit-exact text format.

#include "isovar/ambient.hpp"
#include "isovar/field.hpp"
#include "isovar/mesh.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace isovar {

struct VarifoldAtom {
  Vec p;
  Mat S;  // dim x k, columns g-orthonormal at p
  double w = 0.0;
};

class DiscreteVarifold {
 public:
  DiscreteVarifold(int k, AmbientPtr ambient, std::vector<VarifoldAtom> atoms = {})
      : k_(k), ambient_(std::move(ambient)), atoms_(std::move(atoms)) {
    if (k_ < 1 || k_ >= ambient_->dim()) throw Error(ErrorKind::validation, "varifold dimension out of range");
    for (const auto& a : atoms_) check_atom(a);
  }

  int k() const { return k_; }
  const Ambient& ambient() const { return *ambient_; }
  const AmbientPtr& ambient_ptr() const { return ambient_; }
  const std::vector<VarifoldAtom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }

  /// |dM| + int |H| of the mesh this varifold came from, if any (the exact
  /// norm of the piecewise-flat surface, see polyhedral_variation).
  const std::optional<double>& geometric_variation() const { return geometric_; }
  void set_geometric_variation(double v) { geometric_ = v; }

  /// Extra points of the underlying surface (mesh vertices and edge samples);
  /// sup-norm certification also looks at these.
  const std::vector<Vec>& support_samples() const { return samples_; }
  void set_support_samples(std::vector<Vec> pts) { samples_ = std::move(pts); }

 private:
  void check_atom(const VarifoldAtom& a) const {
    const int dim = ambient_->dim();
    if (a.p.size() != dim || a.S.rows() != dim || a.S.cols() != k_)
      throw Error(ErrorKind::validation, "atom shape does not match the varifold");
    if (!(a.w >= 0.0) || !std::isfinite(a.w)) throw Error(ErrorKind::validation, "atom weight must be finite and >= 0");
    const Mat gram = a.S.transpose() * ambient_->metric_raw(a.p) * a.S;
    if ((gram - Mat::Identity(k_, k_)).cwiseAbs().maxCoeff() > 1e-10)
      throw Error(ErrorKind::validation, "atom plane basis is not g-orthonormal");
  }

  int k_;
  AmbientPtr ambient_;
  std::vector<VarifoldAtom> atoms_;
  std::optional<double> geometric_;
  std::vector<Vec> samples_;
};

inline double mass(const DiscreteVarifold& v) {
  CompensatedSum s;
  for (const auto& a : v.atoms()) s.add(a.w);
  return s.value();
}

enum class MeshQuadrature {
  centroid,    // one atom per element
  high_order,  // 5-point Gauss-Legendre per segment, 7-point degree-5 rule per triangle
};

/// Varifold of a mesh. The centroid rule puts one atom per element at the
/// chart midpoint / barycenter, weighted by the element measure.
inline DiscreteVarifold from_mesh(const MeshSurface& mesh, MeshQuadrature rule = MeshQuadrature::centroid) {
  const Ambient& m = mesh.ambient();
  std::vector<VarifoldAtom> atoms;
  atoms.reserve(mesh.element_count());
  const auto& V = mesh.vertices();
  std::vector<Vec> samples;
  constexpr int kEdgeSamples = 8;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements()[e];
    const double measure = mesh.element_measure(e);
    if (!(measure > 1e-12)) throw Error(ErrorKind::invalid_mesh, "degenerate element");
    if (mesh.k() == 1) {
      const Vec& p0 = V[static_cast<std::size_t>(el[0])];
      const Vec d = m.delta(p0, V[static_cast<std::size_t>(el[1])]);
      for (int q = 0; q <= kEdgeSamples; ++q) samples.push_back(m.wrap(Vec(p0 + (double(q) / kEdgeSamples) * d)));
      if (rule == MeshQuadrature::centroid) {
        VarifoldAtom a;
        a.w = measure;
        a.p = m.wrap(Vec(p0 + 0.5 * d));
        a.S = orthonormalize(m.metric_raw(a.p), Mat(d));
        atoms.push_back(std::move(a));
        continue;
      }
      static constexpr double x[5] = {0.0469100770306680, 0.2307653449471585, 0.5, 0.7692346550528415,
                                      0.9530899229693320};
      static constexpr double w[5] = {0.1184634425280945, 0.2393143352496832, 0.2844444444444444,
                                      0.2393143352496832, 0.1184634425280945};
      for (int q = 0; q < 5; ++q) {
        VarifoldAtom a;
        a.p = m.wrap(Vec(p0 + x[q] * d));
        const Mat g = m.metric_raw(a.p);
        a.w = w[q] * std::sqrt(d.dot(g * d));
        a.S = orthonormalize(g, Mat(d));
        atoms.push_back(std::move(a));
      }
    } else {
      const Eigen::Vector3d p0 = mesh.v3(el[0]), p1 = mesh.v3(el[1]), p2 = mesh.v3(el[2]);
      const Eigen::Vector3d corners[3] = {p0, p1, p2};
      for (int j = 0; j < 3; ++j)
        for (int q = 0; q < kEdgeSamples; ++q) {
          const Eigen::Vector3d s3 = corners[j] + (double(q) / kEdgeSamples) * (corners[(j + 1) % 3] - corners[j]);
          samples.push_back(make_vec(s3(0), s3(1), s3(2)));
        }
      Mat basis(3, 2);
      basis.col(0) = p1 - p0;
      basis.col(1) = p2 - p0;
      const Mat frame = orthonormalize(Mat::Identity(3, 3), basis);
      auto add = [&](const Eigen::Vector3d& c, double w) {
        VarifoldAtom a;
        a.p = make_vec(c(0), c(1), c(2));
        a.S = frame;
        a.w = w;
        atoms.push_back(std::move(a));
      };
      if (rule == MeshQuadrature::centroid) {
        add((p0 + p1 + p2) / 3, measure);
        continue;
      }
      // Radon's 7-point rule, exact for polynomials of degree 5
      const double r15 = std::sqrt(15.0);
      const double a1 = (6 - r15) / 21, a2 = (6 + r15) / 21;
      const double w1 = (155 - r15) / 1200, w2 = (155 + r15) / 1200;
      add((p0 + p1 + p2) / 3, measure * 9.0 / 40);
      for (double a : {a1, a2}) {
        const double wt = a == a1 ? w1 : w2;
        const double b = 1 - 2 * a;
        add(b * p0 + a * p1 + a * p2, measure * wt);
        add(a * p0 + b * p1 + a * p2, measure * wt);
        add(a * p0 + a * p1 + b * p2, measure * wt);
      }
    }
  }
  DiscreteVarifold out(mesh.k(), mesh.ambient_ptr(), std::move(atoms));
  out.set_geometric_variation(polyhedral_variation(mesh));
  out.set_support_samples(std::move(samples));
  return out;
}

/// Atom base points with positive weight, deduplicated on a grid of cell size tol.
inline std::vector<Vec> spatial_support(const DiscreteVarifold& v, double tol = 1e-9) {
  if (!(tol > 0)) throw Error(ErrorKind::validation, "support tolerance must be positive");
  std::map<std::vector<long long>, Vec> cells;
  for (const auto& a : v.atoms()) {
    if (a.w <= 0) continue;
    std::vector<long long> key;
    for (int i = 0; i < a.p.size(); ++i) key.push_back(std::llround(a.p(i) / tol));
    cells.emplace(std::move(key), a.p);
  }
  std::vector<Vec> out;
  out.reserve(cells.size());
  for (auto& [key, p] : cells) out.push_back(p);
  return out;
}

/// Number of single-linkage clusters of the points at chart distance `link`.
inline int cluster_count(const Ambient& m, const std::vector<Vec>& pts, double link) {
  std::vector<std::size_t> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (m.delta(pts[i], pts[j]).norm() <= link) parent[find(i)] = find(j);
  int count = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) count += find(i) == i;
  return count;
}

/// delta V(X) = sum_atoms w div_S X(p).
inline double first_variation(const DiscreteVarifold& v, const VectorField& x) {
  x.check(v.ambient());
  CompensatedSum s;
  for (const auto& a : v.atoms()) s.add(a.w * tangential_divergence(v.ambient(), a.p, a.S, x));
  return s.value();
}

inline DiscreteVarifold scale(const DiscreteVarifold& v, double lambda) {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw Error(ErrorKind::invalid_scale, "scale factor must be >= 0");
  std::vector<VarifoldAtom> atoms;
  if (lambda > 0) {
    atoms = v.atoms();
    for (auto& a : atoms) a.w *= lambda;
  }
  DiscreteVarifold out(v.k(), v.ambient_ptr(), std::move(atoms));
  if (v.geometric_variation()) out.set_geometric_variation(lambda * *v.geometric_variation());
  if (lambda > 0) out.set_support_samples(v.support_samples());
  return out;
}

/// a V1 + b V2 as a measure (atoms concatenated).
inline DiscreteVarifold combine(double a, const DiscreteVarifold& v1, double b, const DiscreteVarifold& v2) {
  if (v1.k() != v2.k() || v1.ambient().id() != v2.ambient().id())
    throw Error(ErrorKind::validation, "varifolds differ in k or ambient");
  std::vector<VarifoldAtom> atoms = scale(v1, a).atoms();
  const DiscreteVarifold second = scale(v2, b);
  atoms.insert(atoms.end(), second.atoms().begin(), second.atoms().end());
  return DiscreteVarifold(v1.k(), v1.ambient_ptr(), std::move(atoms));
}

// ---- bounded-Lipschitz distance -------------------------------------------

/// Fixed seeded family of functions f(p, S) = clamp(c + u . phi(p) + <B, S S^T>, -1, 1)
/// with |u| + |B|_F <= 1, so each member is bounded by 1 and 1-Lipschitz for the
/// chart distance |phi(p) - phi(q)| + |P_S - P_T|_F. Periodic coordinates enter
/// through (sin, cos) / omega. Member 0 is the constant 1.
class BLFamily {
 public:
  BLFamily(const Ambient& m, int size = 64, unsigned seed = 20240917) {
    const Chart& ch = m.chart();
    for (int i = 0; i < m.dim(); ++i) {
      const bool per = ch.periodic[static_cast<std::size_t>(i)];
      periodic_.push_back(per);
      omega_.push_back(per ? 2 * kPi / ch.period(i) : 1.0);
      const bool bounded = std::isfinite(ch.lo(i)) && std::isfinite(ch.hi(i));
      center_.push_back(!per && bounded ? 0.5 * (ch.lo(i) + ch.hi(i)) : 0.0);
    }
    int feat = 0;
    for (bool p : periodic_) feat += p ? 2 : 1;
    const int dim = m.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), frac(0.0, 1.0);
    members_.push_back({1.0, Eigen::VectorXd::Zero(feat), Eigen::MatrixXd::Zero(dim, dim)});
    for (int j = 1; j < size; ++j) {
      Member f;
      f.c = unit(rng);
      f.u = Eigen::VectorXd(feat);
      for (int i = 0; i < feat; ++i) f.u(i) = unit(rng);
      f.b = Eigen::MatrixXd(dim, dim);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) f.b(r, c) = unit(rng);
      const double lam = frac(rng);
      f.u *= lam / std::max(f.u.norm(), 1e-300);
      f.b *= (1 - lam) / std::max(f.b.norm(), 1e-300);
      members_.push_back(std::move(f));
    }
  }

  std::size_t size() const { return members_.size(); }

  double eval(std::size_t j, const Vec& p, const Mat& s) const {
    const Member& f = members_[j];
    Eigen::VectorXd phi(f.u.size());
    int r = 0;
    for (int i = 0; i < p.size(); ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (periodic_[iu]) {
        phi(r++) = std::sin(omega_[iu] * p(i)) / omega_[iu];
        phi(r++) = std::cos(omega_[iu] * p(i)) / omega_[iu];
      } else {
        phi(r++) = p(i) - center_[iu];
      }
    }
    const Eigen::MatrixXd proj = s * s.transpose();
    return std::clamp(f.c + f.u.dot(phi) + (f.b.array() * proj.array()).sum(), -1.0, 1.0);
  }

 private:
  struct Member {
    double c;
    Eigen::VectorXd u;
    Eigen::MatrixXd b;
  };
  std::vector<Member> members_;
  std::vector<bool> periodic_;
  std::vector<double> omega_, center_;
};

inline double integrate(const DiscreteVarifold& v, const BLFamily& f, std::size_t j) {
  CompensatedSum s;
  for (const auto& a : v.atoms()) s.add(a.w * f.eval(j, a.p, a.S));
  return s.value();
}

inline double bl_distance(const DiscreteVarifold& v1, const DiscreteVarifold& v2, const BLFamily& f) {
  if (v1.k() != v2.k() || v1.ambient().id() != v2.ambient().id())
    throw Error(ErrorKind::validation, "varifolds differ in k or ambient");
  double d = 0;
  for (std::size_t j = 0; j < f.size(); ++j) d = std::max(d, std::abs(integrate(v1, f, j) - integrate(v2, f, j)));
  return d;
}

inline double bl_distance(const DiscreteVarifold& v1, const DiscreteVarifold& v2) {
  return bl_distance(v1, v2, BLFamily(v1.ambient()));
}

// ---- text format ---------------------------------------------------------

inline void write_varifold(std::ostream& os, const DiscreteVarifold& v) {
  os << "# isovar varifold v1\n";
  os << "k " << v.k() << "\n";
  os << "ambient " << v.ambient().id() << "\n";
  os << "atoms " << v.atoms().size() << "\n";
  for (const auto& a : v.atoms()) {
    for (int i = 0; i < a.p.size(); ++i) os << (i ? " " : "") << format_double(a.p(i));
    os << " |";
    for (int c = 0; c < a.S.cols(); ++c)
      for (int r = 0; r < a.S.rows(); ++r) os << " " << format_double(a.S(r, c));
    os << " | " << format_double(a.w) << "\n";
  }
}

inline DiscreteVarifold read_varifold(std::istream& is, AmbientPtr ambient) {
  std::string line;
  auto next_line = [&]() {
    while (std::getline(is, line))
      if (!line.empty()) return true;
    return false;
  };
  if (!next_line() || line != "# isovar varifold v1") throw Error(ErrorKind::parse, "bad varifold header");
  int k = 0;
  std::size_t count = 0;
  std::string id;
  {
    std::string tag;
    if (!next_line() || !(std::istringstream(line) >> tag >> k) || tag != "k")
      throw Error(ErrorKind::parse, "expected 'k <int>'");
    if (!next_line()) throw Error(ErrorKind::parse, "expected ambient line");
    std::istringstream ss(line);
    if (!(ss >> tag) || tag != "ambient") throw Error(ErrorKind::parse, "expected 'ambient <id>'");
    std::getline(ss >> std::ws, id);
    if (!next_line() || !(std::istringstream(line) >> tag >> count) || tag != "atoms")
      throw Error(ErrorKind::parse, "expected 'atoms <count>'");
  }
  if (id != ambient->id()) throw Error(ErrorKind::validation, "varifold ambient id mismatch: " + id);
  const int dim = ambient->dim();
  std::vector<VarifoldAtom> atoms;
  for (std::size_t n = 0; n < count; ++n) {
    if (!next_line()) throw Error(ErrorKind::parse, "truncated varifold file");
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    const std::size_t expect = static_cast<std::size_t>(dim + 1 + dim * k + 2);
    if (tok.size() != expect || tok[static_cast<std::size_t>(dim)] != "|" || tok[expect - 2] != "|")
      throw Error(ErrorKind::parse, "malformed atom line: " + line);
    VarifoldAtom a;
    a.p = Vec(dim);
    a.S = Mat(dim, k);
    std::size_t t = 0;
    for (int i = 0; i < dim; ++i) a.p(i) = parse_double(tok[t++]);
    ++t;
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < dim; ++r) a.S(r, c) = parse_double(tok[t++]);
    ++t;
    a.w = parse_double(tok[t]);
    atoms.push_back(std::move(a));
  }
  return DiscreteVarifold(k, std::move(ambient), std::move(atoms));
}

}  // namespace isovar
