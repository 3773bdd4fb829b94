#pragma once

// Riemannian ambient spaces of dimension 2 (several closed-form families) and
// dimension 3 (Euclidean only). Chart points are coordinate vectors; periodic
// coordinates are wrapped into [lo, hi).

#include "isovar/core.hpp"
#include "isovar/expression.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>

namespace isovar {

struct Chart {
  Vec lo;
  Vec hi;
  std::array<bool, 3> periodic{false, false, false};

  int dim() const { return static_cast<int>(lo.size()); }
  double period(int i) const { return hi(i) - lo(i); }
};

enum class MetricFamily { euclidean, round_sphere, hyperbolic, conformal, revolution, product };

inline const char* to_string(MetricFamily f) {
  switch (f) {
    case MetricFamily::euclidean: return "euclidean";
    case MetricFamily::round_sphere: return "round-sphere";
    case MetricFamily::hyperbolic: return "hyperbolic";
    case MetricFamily::conformal: return "conformal";
    case MetricFamily::revolution: return "revolution";
    case MetricFamily::product: return "product";
  }
  return "?";
}

/// Embedding Jacobian, one column per chart coordinate.
using EmbeddingJacobian = Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 3>;

class Ambient {
 public:
  // ---- factories -------------------------------------------------------

  /// Flat R^dim. Bounds default to the whole space.
  static Ambient euclidean(int dim, std::optional<Chart> bounds = std::nullopt) {
    if (dim != 2 && dim != 3) throw Error(ErrorKind::unsupported_dimension, "euclidean dim must be 2 or 3");
    Ambient a(MetricFamily::euclidean, dim);
    if (bounds) {
      a.chart_ = *bounds;
    } else {
      a.chart_.lo = Vec::Constant(dim, -kInf);
      a.chart_.hi = Vec::Constant(dim, kInf);
    }
    a.id_ = "euclidean" + std::to_string(dim);
    return a;
  }

  /// Round sphere of radius R in polar chart (theta in [0, pi], phi periodic).
  static Ambient round_sphere(double radius) {
    if (!(radius > 0)) throw Error(ErrorKind::validation, "sphere radius must be positive");
    Ambient a(MetricFamily::round_sphere, 2);
    a.radius_ = radius;
    a.chart_.lo = make_vec(0.0, 0.0);
    a.chart_.hi = make_vec(kPi, 2 * kPi);
    a.chart_.periodic = {false, true, false};
    a.id_ = "round-sphere(" + format_double(radius) + ")";
    return a;
  }

  /// Constant curvature `curvature` < 0 in geodesic polar coordinates (r, phi).
  static Ambient hyperbolic(double curvature, double r_max = 3.0) {
    if (!(curvature < 0)) throw Error(ErrorKind::validation, "hyperbolic curvature must be negative");
    Ambient a(MetricFamily::hyperbolic, 2);
    a.rate_ = std::sqrt(-curvature);
    a.chart_.lo = make_vec(0.0, 0.0);
    a.chart_.hi = make_vec(r_max, 2 * kPi);
    a.chart_.periodic = {false, true, false};
    a.id_ = "hyperbolic(" + format_double(curvature) + ")";
    return a;
  }

  /// g = factor(x, y) * I on the given rectangle.
  static Ambient conformal(const std::string& factor, Chart chart) {
    Ambient a(MetricFamily::conformal, 2);
    a.f_ = Expr::parse(factor, {"x", "y"});
    a.fx_ = a.f_.derivative(0);
    a.fy_ = a.f_.derivative(1);
    a.fxx_ = a.fx_.derivative(0);
    a.fyy_ = a.fy_.derivative(1);
    a.source_ = factor;
    a.chart_ = std::move(chart);
    a.id_ = "conformal(" + factor + ")";
    return a;
  }

  /// Surface of revolution with profile r(z): chart (z, theta), theta periodic.
  static Ambient revolution(const std::string& profile, double z_lo, double z_hi) {
    Ambient a(MetricFamily::revolution, 2);
    a.f_ = Expr::parse(profile, {"z"});
    a.fx_ = a.f_.derivative(0);
    a.fxx_ = a.fx_.derivative(0);
    a.source_ = profile;
    a.chart_.lo = make_vec(z_lo, 0.0);
    a.chart_.hi = make_vec(z_hi, 2 * kPi);
    a.chart_.periodic = {false, true, false};
    a.id_ = "revolution(" + profile + ")";
    return a;
  }

  /// Flat product (circle of given circumference) x R: chart (s, z), s periodic.
  static Ambient product(double circumference, double z_lo, double z_hi) {
    if (!(circumference > 0)) throw Error(ErrorKind::validation, "circumference must be positive");
    Ambient a(MetricFamily::product, 2);
    a.radius_ = circumference / (2 * kPi);
    a.chart_.lo = make_vec(0.0, z_lo);
    a.chart_.hi = make_vec(circumference, z_hi);
    a.chart_.periodic = {true, false, false};
    a.id_ = "product(" + format_double(circumference) + ")";
    return a;
  }

  // ---- structure -------------------------------------------------------

  int dim() const { return dim_; }
  MetricFamily family() const { return family_; }
  const Chart& chart() const { return chart_; }
  const std::string& id() const { return id_; }
  /// Expression text the family was built from (profile or conformal factor).
  const std::string& source() const { return source_; }
  double radius() const { return radius_; }
  double curvature_parameter() const { return -rate_ * rate_; }

  bool is_euclidean() const { return family_ == MetricFamily::euclidean; }

  bool in_chart(const Vec& p, double tol = 1e-12) const {
    for (int i = 0; i < dim_; ++i) {
      if (chart_.periodic[static_cast<std::size_t>(i)]) continue;
      const double span = std::isfinite(chart_.hi(i) - chart_.lo(i)) ? chart_.hi(i) - chart_.lo(i) : 1.0;
      if (p(i) < chart_.lo(i) - tol * span || p(i) > chart_.hi(i) + tol * span) return false;
    }
    return true;
  }

  /// Wraps periodic coordinates into [lo, hi); throws domain error outside the chart.
  Vec wrap(const Vec& p) const {
    if (p.size() != dim_) throw Error(ErrorKind::domain, "chart point has wrong dimension");
    if (!p.allFinite()) throw Error(ErrorKind::domain, "non-finite chart point");
    if (!in_chart(p)) throw Error(ErrorKind::domain, "point outside chart of " + id_);
    Vec q = p;
    for (int i = 0; i < dim_; ++i) {
      if (!chart_.periodic[static_cast<std::size_t>(i)]) continue;
      const double per = chart_.period(i);
      q(i) = chart_.lo(i) + std::fmod(std::fmod(q(i) - chart_.lo(i), per) + per, per);
      if (q(i) >= chart_.hi(i)) q(i) = chart_.lo(i);
    }
    return q;
  }

  /// Chart displacement b - a using the shortest representative in periodic coordinates.
  Vec delta(const Vec& a, const Vec& b) const {
    Vec d = b - a;
    for (int i = 0; i < dim_; ++i) {
      if (!chart_.periodic[static_cast<std::size_t>(i)]) continue;
      const double per = chart_.period(i);
      d(i) -= per * std::round(d(i) / per);
    }
    return d;
  }

  // ---- metric ----------------------------------------------------------

  /// Metric tensor at p (checked against the chart).
  Mat metric(const Vec& p) const {
    if (!in_chart(p)) throw Error(ErrorKind::domain, "point outside chart of " + id_);
    return metric_raw(p);
  }

  /// Metric tensor without chart checks (for stencils straddling the chart edge).
  Mat metric_raw(const Vec& p) const {
    Mat g = Mat::Identity(dim_, dim_);
    switch (family_) {
      case MetricFamily::euclidean:
      case MetricFamily::product:
        break;
      case MetricFamily::round_sphere: {
        const double s = std::sin(p(0));
        g(0, 0) = radius_ * radius_;
        g(1, 1) = radius_ * radius_ * s * s;
        break;
      }
      case MetricFamily::hyperbolic: {
        const double s = std::sinh(rate_ * p(0)) / rate_;
        g(1, 1) = s * s;
        break;
      }
      case MetricFamily::conformal: {
        const double l = f_(p(0), p(1));
        g(0, 0) = l;
        g(1, 1) = l;
        break;
      }
      case MetricFamily::revolution: {
        const double r = f_(p(0));
        const double dr = fx_(p(0));
        g(0, 0) = 1 + dr * dr;
        g(1, 1) = r * r;
        break;
      }
    }
    return g;
  }

  /// Partial derivatives of the metric, d[l] = d g / d x^l.
  std::array<Mat, 3> metric_derivatives(const Vec& p) const {
    std::array<Mat, 3> d;
    for (int l = 0; l < dim_; ++l) d[static_cast<std::size_t>(l)] = Mat::Zero(dim_, dim_);
    switch (family_) {
      case MetricFamily::euclidean:
      case MetricFamily::product:
        break;
      case MetricFamily::round_sphere:
        d[0](1, 1) = 2 * radius_ * radius_ * std::sin(p(0)) * std::cos(p(0));
        break;
      case MetricFamily::hyperbolic:
        d[0](1, 1) = 2 * std::sinh(rate_ * p(0)) * std::cosh(rate_ * p(0)) / rate_;
        break;
      case MetricFamily::conformal: {
        const double lx = fx_(p(0), p(1));
        const double ly = fy_(p(0), p(1));
        d[0](0, 0) = d[0](1, 1) = lx;
        d[1](0, 0) = d[1](1, 1) = ly;
        break;
      }
      case MetricFamily::revolution: {
        const double r = f_(p(0));
        const double dr = fx_(p(0));
        const double ddr = fxx_(p(0));
        d[0](0, 0) = 2 * dr * ddr;
        d[0](1, 1) = 2 * r * dr;
        break;
      }
    }
    return d;
  }

  /// Christoffel symbols of the second kind: gamma[k](i, j) = Gamma^k_ij.
  std::array<Mat, 3> christoffel(const Vec& p) const {
    std::array<Mat, 3> gamma;
    for (int k = 0; k < dim_; ++k) gamma[static_cast<std::size_t>(k)] = Mat::Zero(dim_, dim_);
    if (family_ == MetricFamily::euclidean || family_ == MetricFamily::product) return gamma;
    const Mat ginv = metric_raw(p).inverse();
    const auto dg = metric_derivatives(p);
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        for (int k = 0; k < dim_; ++k) {
          double s = 0;
          for (int l = 0; l < dim_; ++l) {
            s += ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) + dg[static_cast<std::size_t>(j)](i, l) -
                               dg[static_cast<std::size_t>(l)](i, j));
          }
          gamma[static_cast<std::size_t>(k)](i, j) = 0.5 * s;
        }
      }
    }
    return gamma;
  }

  /// Gamma^k_ij u^i v^j.
  Vec christoffel_contract(const Vec& p, const Vec& u, const Vec& v) const {
    Vec out = Vec::Zero(dim_);
    if (family_ == MetricFamily::euclidean || family_ == MetricFamily::product) return out;
    const auto gamma = christoffel(p);
    for (int k = 0; k < dim_; ++k) out(k) = u.dot(gamma[static_cast<std::size_t>(k)] * v);
    return out;
  }

  /// Christoffel symbols by Richardson-extrapolated central differences of the metric.
  std::array<Mat, 3> christoffel_fd(const Vec& p, double h = 1e-4) const {
    std::array<Mat, 3> dg;
    for (int l = 0; l < dim_; ++l) {
      auto f = [&](double s) {
        Vec q = p;
        q(l) += s;
        return metric_raw(q);
      };
      auto central = [&](double step) -> Mat { return (f(step) - f(-step)) / (2 * step); };
      dg[static_cast<std::size_t>(l)] = (4 * central(h / 2) - central(h)) / 3;
    }
    std::array<Mat, 3> gamma;
    const Mat ginv = metric_raw(p).inverse();
    for (int k = 0; k < dim_; ++k) {
      gamma[static_cast<std::size_t>(k)] = Mat::Zero(dim_, dim_);
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) {
          double s = 0;
          for (int l = 0; l < dim_; ++l)
            s += ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) + dg[static_cast<std::size_t>(j)](i, l) -
                               dg[static_cast<std::size_t>(l)](i, j));
          gamma[static_cast<std::size_t>(k)](i, j) = 0.5 * s;
        }
    }
    return gamma;
  }

  // ---- curvature -------------------------------------------------------

  /// Gauss curvature in closed form.
  double gauss_curvature(const Vec& p) const {
    if (dim_ != 2) throw Error(ErrorKind::unsupported_dimension, "gauss curvature needs dim 2");
    if (!in_chart(p)) throw Error(ErrorKind::domain, "point outside chart of " + id_);
    switch (family_) {
      case MetricFamily::euclidean:
      case MetricFamily::product:
        return 0.0;
      case MetricFamily::round_sphere:
        return 1.0 / (radius_ * radius_);
      case MetricFamily::hyperbolic:
        return -rate_ * rate_;
      case MetricFamily::conformal: {
        const double l = f_(p(0), p(1));
        const double lx = fx_(p(0), p(1));
        const double ly = fy_(p(0), p(1));
        const double lap = fxx_(p(0), p(1)) + fyy_(p(0), p(1));
        // K = -Laplacian(log l) / (2 l)
        return -lap / (2 * l * l) + (lx * lx + ly * ly) / (2 * l * l * l);
      }
      case MetricFamily::revolution: {
        const double r = f_(p(0));
        const double dr = fx_(p(0));
        const double ddr = fxx_(p(0));
        const double w = 1 + dr * dr;
        return -ddr / (r * w * w);
      }
    }
    return 0.0;
  }

  /// Gauss curvature from the Brioschi formula with Richardson-extrapolated
  /// central differences of the metric coefficients (step h).
  double gauss_curvature_brioschi(const Vec& p, double h = 1e-4) const {
    if (dim_ != 2) throw Error(ErrorKind::unsupported_dimension, "gauss curvature needs dim 2");
    auto coef = [&](double du, double dv) {
      Vec q = p;
      q(0) += du;
      q(1) += dv;
      const Mat g = metric_raw(q);
      return Eigen::Vector3d(g(0, 0), g(0, 1), g(1, 1));
    };
    auto d_u = [&](double s) -> Eigen::Vector3d { return (coef(s, 0) - coef(-s, 0)) / (2 * s); };
    auto d_v = [&](double s) -> Eigen::Vector3d { return (coef(0, s) - coef(0, -s)) / (2 * s); };
    auto d_uu = [&](double s) -> Eigen::Vector3d { return (coef(s, 0) - 2 * coef(0, 0) + coef(-s, 0)) / (s * s); };
    auto d_vv = [&](double s) -> Eigen::Vector3d { return (coef(0, s) - 2 * coef(0, 0) + coef(0, -s)) / (s * s); };
    auto d_uv = [&](double s) -> Eigen::Vector3d {
      return (coef(s, s) - coef(s, -s) - coef(-s, s) + coef(-s, -s)) / (4 * s * s);
    };
    auto rich = [&](auto&& op) -> Eigen::Vector3d { return (4 * op(h / 2) - op(h)) / 3; };
    const Eigen::Vector3d c = coef(0, 0);
    const Eigen::Vector3d u = rich(d_u), v = rich(d_v), uu = rich(d_uu), vv = rich(d_vv), uv = rich(d_uv);
    const double E = c(0), F = c(1), G = c(2);
    const double Eu = u(0), Fu = u(1), Gu = u(2);
    const double Ev = v(0), Fv = v(1), Gv = v(2);
    const double Evv = vv(0), Fuv = uv(1), Guu = uu(2);
    Eigen::Matrix3d a;
    a << -0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,
        Fv - 0.5 * Gu, E, F,
        0.5 * Gv, F, G;
    Eigen::Matrix3d b;
    b << 0, 0.5 * Ev, 0.5 * Gu,
        0.5 * Ev, E, F,
        0.5 * Gu, F, G;
    const double det = E * G - F * F;
    return (a.determinant() - b.determinant()) / (det * det);
  }

  /// Ric(v, v) for a g-unit vector v. In dimension 2 this is the Gauss curvature.
  double ricci(const Vec& p, const Vec& v) const {
    if (dim_ == 3) return 0.0;  // dim 3 is Euclidean only
    const double n2 = v.dot(metric_raw(p) * v);
    return gauss_curvature(p) * n2;
  }

  // ---- embedding -------------------------------------------------------

  bool has_embedding() const {
    return family_ == MetricFamily::euclidean || family_ == MetricFamily::round_sphere ||
           family_ == MetricFamily::revolution || family_ == MetricFamily::product;
  }

  int embedding_dim() const { return family_ == MetricFamily::euclidean ? dim_ : 3; }

  Eigen::Vector3d embed(const Vec& p) const {
    require_embedding();
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    switch (family_) {
      case MetricFamily::euclidean:
        for (int i = 0; i < dim_; ++i) x(i) = p(i);
        break;
      case MetricFamily::round_sphere:
        x << radius_ * std::sin(p(0)) * std::cos(p(1)), radius_ * std::sin(p(0)) * std::sin(p(1)),
            radius_ * std::cos(p(0));
        break;
      case MetricFamily::revolution: {
        const double r = f_(p(0));
        x << r * std::cos(p(1)), r * std::sin(p(1)), p(0);
        break;
      }
      case MetricFamily::product:
        x << radius_ * std::cos(p(0) / radius_), radius_ * std::sin(p(0) / radius_), p(1);
        break;
      default:
        break;
    }
    return x;
  }

  EmbeddingJacobian embedding_jacobian(const Vec& p) const {
    require_embedding();
    EmbeddingJacobian j = EmbeddingJacobian::Zero(3, dim_);
    switch (family_) {
      case MetricFamily::euclidean:
        for (int i = 0; i < dim_; ++i) j(i, i) = 1.0;
        break;
      case MetricFamily::round_sphere: {
        const double st = std::sin(p(0)), ct = std::cos(p(0));
        const double sp = std::sin(p(1)), cp = std::cos(p(1));
        j.col(0) << radius_ * ct * cp, radius_ * ct * sp, -radius_ * st;
        j.col(1) << -radius_ * st * sp, radius_ * st * cp, 0.0;
        break;
      }
      case MetricFamily::revolution: {
        const double r = f_(p(0));
        const double dr = fx_(p(0));
        j.col(0) << dr * std::cos(p(1)), dr * std::sin(p(1)), 1.0;
        j.col(1) << -r * std::sin(p(1)), r * std::cos(p(1)), 0.0;
        break;
      }
      case MetricFamily::product:
        j.col(0) << -std::sin(p(0) / radius_), std::cos(p(0) / radius_), 0.0;
        j.col(1) << 0.0, 0.0, 1.0;
        break;
      default:
        break;
    }
    return j;
  }

  /// Principal curvatures of the embedded surface at p (dim 2, embedding into E^3).
  Eigen::Vector2d principal_curvatures(const Vec& p, double h = 1e-4) const {
    require_embedding();
    if (family_ == MetricFamily::euclidean) return Eigen::Vector2d::Zero();
    const EmbeddingJacobian j = embedding_jacobian(p);
    const Eigen::Vector3d n = j.col(0).cross(j.col(1)).normalized();
    Eigen::Matrix2d second;
    for (int a = 0; a < 2; ++a) {
      auto dj = [&](double s) -> EmbeddingJacobian {
        Vec qp = p, qm = p;
        qp(a) += s;
        qm(a) -= s;
        return (embedding_jacobian(qp) - embedding_jacobian(qm)) / (2 * s);
      };
      const EmbeddingJacobian d = (4 * dj(h / 2) - dj(h)) / 3;
      for (int b = 0; b < 2; ++b) second(a, b) = d.col(b).dot(n);
    }
    second = 0.5 * (second + second.transpose()).eval();
    Eigen::Matrix2d g;
    g << j.col(0).dot(j.col(0)), j.col(0).dot(j.col(1)), j.col(0).dot(j.col(1)), j.col(1).dot(j.col(1));
    // Shape operator eigenvalues via the symmetric form L^{-1} II L^{-T}.
    const Eigen::Matrix2d l = g.llt().matrixL();
    const Eigen::Matrix2d linv = l.inverse();
    const Eigen::Matrix2d s = linv * second * linv.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(s);
    return es.eigenvalues();
  }

  /// Upper bound on |trace over a k-plane of the embedding's second fundamental
  /// form|, sampled on a grid and inflated by 10%.
  double second_fundamental_bound(int k, int grid = 64) const {
    if (!has_embedding()) throw Error(ErrorKind::missing_embedding, id_ + " has no embedding");
    if (family_ == MetricFamily::euclidean) return 0.0;
    if (k < 1 || k > dim_) throw Error(ErrorKind::validation, "plane dimension out of range");
    double best = 0.0;
    for (int a = 0; a < grid; ++a) {
      for (int b = 0; b < grid; ++b) {
        Vec p(2);
        p(0) = chart_.lo(0) + (a + 0.5) * (chart_.hi(0) - chart_.lo(0)) / grid;
        p(1) = chart_.lo(1) + (b + 0.5) * (chart_.hi(1) - chart_.lo(1)) / grid;
        const Eigen::Vector2d kappa = principal_curvatures(p).cwiseAbs();
        const double m = k == 1 ? kappa.maxCoeff() : kappa.sum();
        best = std::max(best, m);
      }
    }
    return 1.1 * best;
  }

 private:
  Ambient(MetricFamily family, int dim) : family_(family), dim_(dim) {
    chart_.lo = Vec::Zero(dim);
    chart_.hi = Vec::Zero(dim);
  }

  void require_embedding() const {
    if (!has_embedding()) throw Error(ErrorKind::missing_embedding, id_ + " has no embedding");
  }

  MetricFamily family_;
  int dim_;
  Chart chart_;
  std::string id_;
  std::string source_;
  double radius_ = 1.0;
  double rate_ = 1.0;
  Expr f_, fx_, fy_, fxx_, fyy_;
};

using AmbientPtr = std::shared_ptr<const Ambient>;

inline AmbientPtr make_ambient(Ambient a) {
  return std::make_shared<const Ambient>(std::move(a));
}

/// g(u, v) at p.
inline double inner(const Ambient& m, const Vec& p, const Vec& u, const Vec& v) {
  return u.dot(m.metric_raw(p) * v);
}

inline double norm(const Ambient& m, const Vec& p, const Vec& v) { return std::sqrt(inner(m, p, v, v)); }

/// Unit normal obtained by rotating the tangent t a quarter turn counterclockwise
/// in the metric (dim 2).
inline Vec left_normal(const Mat& g, const Vec& t) {
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1);
  Vec n(2);
  n(0) = -g(0, 1) * t(0) - g(1, 1) * t(1);
  n(1) = g(0, 0) * t(0) + g(0, 1) * t(1);
  n /= std::sqrt(det);
  const double len = std::sqrt(n.dot(g * n));
  return len > 0 ? Vec(n / len) : n;
}

}  // namespace isovar
