#pragma once

// Finite-dimensional families of test fields and a certified lower bound for
// |delta V| over the sampled unit-sup-norm slice of such a family.

#include "isovar/varifold.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <vector>

namespace isovar {

/// Span of phi_s(p) d/dx^j: per-coordinate Chebyshev polynomials (trigonometric
/// polynomials in periodic coordinates) over a chart box. In dimension 2 the
/// scalars are tensor products with degree <= d per coordinate; in dimension 3
/// the total degree is bounded by d.
class TestFamily {
 public:
  TestFamily(AmbientPtr ambient, Vec lo, Vec hi, int degree = 4, int grid = 33, double lipschitz_cap = 50.0)
      : ambient_(std::move(ambient)), lo_(std::move(lo)), hi_(std::move(hi)), degree_(degree), grid_(grid),
        cap_(lipschitz_cap) {
    if (degree_ < 0) throw Error(ErrorKind::validation, "family degree must be >= 0");
    if (grid_ < 2) throw Error(ErrorKind::validation, "family grid must be >= 2");
    const int dim = ambient_->dim();
    for (int i = 0; i < dim; ++i) {
      if (!(hi_(i) > lo_(i))) throw Error(ErrorKind::validation, "empty family box");
      periodic_[static_cast<std::size_t>(i)] = ambient_->chart().periodic[static_cast<std::size_t>(i)] &&
                                               std::abs(hi_(i) - lo_(i) - ambient_->chart().period(i)) < 1e-12;
    }
    // multi-indices of per-coordinate basis functions
    std::vector<int> count(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) count[static_cast<std::size_t>(i)] = per_coordinate(i);
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    while (true) {
      int total = 0, top = 0;
      for (int i = 0; i < dim; ++i) {
        const int d = index_degree(i, idx[static_cast<std::size_t>(i)]);
        total += d;
        top = std::max(top, d);
      }
      if ((dim == 2 && top <= degree_) || (dim == 3 && total <= degree_)) multi_.push_back(idx);
      int i = 0;
      while (i < dim && ++idx[static_cast<std::size_t>(i)] == count[static_cast<std::size_t>(i)]) idx[static_cast<std::size_t>(i++)] = 0;
      if (i == dim) break;
    }
  }

  /// Family over the padded chart bounding box of the varifold's atoms.
  static TestFamily for_varifold(const DiscreteVarifold& v, int degree = 4, int grid = 33, double lipschitz_cap = 50.0) {
    const Ambient& m = v.ambient();
    const int dim = m.dim();
    const Chart& ch = m.chart();
    Vec lo = Vec::Constant(dim, kInf), hi = Vec::Constant(dim, -kInf);
    for (const auto& a : v.atoms()) {
      lo = lo.cwiseMin(a.p);
      hi = hi.cwiseMax(a.p);
    }
    if (v.empty()) lo = hi = Vec::Zero(dim);
    std::array<bool, 3> full{false, false, false};
    for (int i = 0; i < dim; ++i) {
      if (ch.periodic[static_cast<std::size_t>(i)] && hi(i) - lo(i) > 0.5 * ch.period(i)) {
        lo(i) = ch.lo(i);
        hi(i) = ch.hi(i);
        full[static_cast<std::size_t>(i)] = true;
      }
    }
    const double pad = 0.01 * std::max((hi - lo).norm(), 1.0);
    for (int i = 0; i < dim; ++i) {
      if (full[static_cast<std::size_t>(i)]) continue;
      lo(i) -= pad;
      hi(i) += pad;
      if (!ch.periodic[static_cast<std::size_t>(i)]) {
        // stay strictly inside the chart, away from coordinate singularities
        lo(i) = std::max(lo(i), ch.lo(i) + 1e-6);
        hi(i) = std::min(hi(i), ch.hi(i) - 1e-6);
      }
    }
    return TestFamily(v.ambient_ptr(), lo, hi, degree, grid, lipschitz_cap);
  }

  const Ambient& ambient() const { return *ambient_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  int degree() const { return degree_; }
  int grid() const { return grid_; }
  double lipschitz_cap() const { return cap_; }
  int scalar_count() const { return static_cast<int>(multi_.size()); }
  int size() const { return scalar_count() * ambient_->dim(); }

  TestFamily with_degree(int d) const { return TestFamily(ambient_, lo_, hi_, d, grid_, cap_); }

  /// Values and gradients (rows) of the scalar basis at p.
  void scalars(const Vec& p, Eigen::VectorXd& val, Eigen::MatrixXd& grad) const {
    const int dim = ambient_->dim();
    std::array<Eigen::VectorXd, 3> f, df;
    for (int i = 0; i < dim; ++i) coordinate_basis(i, p(i), f[static_cast<std::size_t>(i)], df[static_cast<std::size_t>(i)]);
    const int n = scalar_count();
    val.resize(n);
    grad.resize(n, dim);
    for (int s = 0; s < n; ++s) {
      const auto& idx = multi_[static_cast<std::size_t>(s)];
      double v = 1.0;
      for (int i = 0; i < dim; ++i) v *= f[static_cast<std::size_t>(i)](idx[static_cast<std::size_t>(i)]);
      val(s) = v;
      for (int l = 0; l < dim; ++l) {
        double g = 1.0;
        for (int i = 0; i < dim; ++i) {
          const auto iu = static_cast<std::size_t>(i);
          g *= (i == l ? df[iu] : f[iu])(idx[iu]);
        }
        grad(s, l) = g;
      }
    }
  }

  /// Member with coefficients c, index s * dim + j for phi_s d/dx^j.
  VectorField member(const Eigen::VectorXd& c) const {
    if (c.size() != size()) throw Error(ErrorKind::invalid_field, "coefficient count does not match the family");
    const int dim = ambient_->dim();
    TestFamily self = *this;
    auto value = [self, c, dim](const Vec& p) {
      Eigen::VectorXd val;
      Eigen::MatrixXd grad;
      self.scalars(p, val, grad);
      Vec x = Vec::Zero(dim);
      for (int s = 0; s < val.size(); ++s)
        for (int j = 0; j < dim; ++j) x(j) += c(s * dim + j) * val(s);
      return x;
    };
    auto jac = [self, c, dim](const Vec& p) {
      Eigen::VectorXd val;
      Eigen::MatrixXd grad;
      self.scalars(p, val, grad);
      Mat J = Mat::Zero(dim, dim);
      for (int s = 0; s < val.size(); ++s)
        for (int j = 0; j < dim; ++j) J.row(j) += c(s * dim + j) * grad.row(s);
      return J;
    };
    return VectorField(dim, value, jac, "test-family(d=" + std::to_string(degree_) + ")");
  }

  /// Grid points of the box with `res` samples per coordinate (periodic full
  /// coordinates skip the duplicate endpoint), dropping chart singularities.
  std::vector<Vec> grid_points(int res) const {
    const int dim = ambient_->dim();
    std::vector<Vec> out;
    long total = 1;
    for (int i = 0; i < dim; ++i) total *= res;
    for (long idx = 0; idx < total; ++idx) {
      Vec p(dim);
      long rem = idx;
      for (int i = 0; i < dim; ++i) {
        const long a = rem % res;
        rem /= res;
        const double den = periodic_[static_cast<std::size_t>(i)] ? res : res - 1;
        p(i) = lo_(i) + (hi_(i) - lo_(i)) * static_cast<double>(a) / den;
      }
      Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(ambient_->metric_raw(p))};
      if (llt.info() != Eigen::Success) continue;
      out.push_back(std::move(p));
    }
    return out;
  }

 private:
  int per_coordinate(int i) const {
    return periodic_[static_cast<std::size_t>(i)] ? 2 * (degree_ / 2) + 1 : degree_ + 1;
  }
  // ordering for periodic coordinates: 1, cos, sin, cos 2, sin 2, ...
  int index_degree(int i, int a) const { return periodic_[static_cast<std::size_t>(i)] ? 2 * ((a + 1) / 2) : a; }

  void coordinate_basis(int i, double x, Eigen::VectorXd& f, Eigen::VectorXd& df) const {
    const int n = per_coordinate(i);
    f.resize(n);
    df.resize(n);
    if (periodic_[static_cast<std::size_t>(i)]) {
      const double w = 2 * kPi / (hi_(i) - lo_(i));
      f(0) = 1;
      df(0) = 0;
      for (int j = 1; 2 * j - 1 < n; ++j) {
        f(2 * j - 1) = std::cos(j * w * x);
        df(2 * j - 1) = -j * w * std::sin(j * w * x);
        f(2 * j) = std::sin(j * w * x);
        df(2 * j) = j * w * std::cos(j * w * x);
      }
      return;
    }
    const double scale = 2.0 / (hi_(i) - lo_(i));
    const double t = (2 * x - lo_(i) - hi_(i)) / (hi_(i) - lo_(i));
    // T_a and U_{a-1}, T_a' = a U_{a-1}
    double t0 = 1, t1 = t, u0 = 1, u1 = 2 * t;
    f(0) = 1;
    df(0) = 0;
    if (n > 1) {
      f(1) = t;
      df(1) = scale;
    }
    for (int a = 2; a < n; ++a) {
      const double t2 = 2 * t * t1 - t0;
      f(a) = t2;
      df(a) = a * u1 * scale;
      const double u2 = 2 * t * u1 - u0;
      t0 = t1;
      t1 = t2;
      u0 = u1;
      u1 = u2;
    }
  }

  AmbientPtr ambient_;
  Vec lo_, hi_;
  int degree_;
  int grid_;
  double cap_;
  std::array<bool, 3> periodic_{false, false, false};
  std::vector<std::vector<int>> multi_;
};

struct VariationBound {
  double lower_bound = 0.0;     // certified: delta V(X) / sup-sampled |X|
  double variation = 0.0;       // delta V(X) for the reported field
  double sup_norm = 0.0;        // dense-sampled sup |X|_g of the reported field (<= 1)
  double lipschitz = 0.0;       // sampled Lipschitz budget of the reported field
  int degree = 0;               // ladder degree that achieved the bound
  Eigen::VectorXd coefficients;  // of the reported field in that degree's family
};

namespace detail {

/// b_{s,j} = delta V(phi_s d/dx^j).
inline Eigen::VectorXd variation_vector(const DiscreteVarifold& v, const TestFamily& f) {
  const Ambient& m = v.ambient();
  const int dim = m.dim();
  const bool flat = m.family() == MetricFamily::euclidean || m.family() == MetricFamily::product;
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(f.size()));
  Eigen::VectorXd val;
  Eigen::MatrixXd grad;
  for (const auto& a : v.atoms()) {
    if (a.w == 0) continue;
    f.scalars(a.p, val, grad);
    const Mat g = m.metric_raw(a.p);
    const Mat proj = (g * a.S) * a.S.transpose();  // P(k, l) = sum_i (g e_i)_k (e_i)_l
    Vec gamma = Vec::Zero(dim);
    if (!flat) {
      const auto chr = m.christoffel(a.p);
      for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k)
          for (int l = 0; l < dim; ++l) gamma(j) += proj(k, l) * chr[static_cast<std::size_t>(k)](l, j);
    }
    for (int s = 0; s < val.size(); ++s)
      for (int j = 0; j < dim; ++j)
        acc[static_cast<std::size_t>(s * dim + j)].add(
            a.w * (proj.row(j).dot(grad.row(s)) + val(s) * gamma(j)));
  }
  Eigen::VectorXd b(f.size());
  for (int i = 0; i < f.size(); ++i) b(i) = acc[static_cast<std::size_t>(i)].value();
  return b;
}

/// Stacked linear maps c -> block vectors whose Euclidean norms must stay <= 1.
struct ConstraintRows {
  Eigen::MatrixXd rows;
  std::vector<std::pair<Eigen::Index, int>> blocks;  // (first row, size)

  double max_norm(const Eigen::VectorXd& r) const {
    double mx = 0;
    for (const auto& [at, n] : blocks) mx = std::max(mx, r.segment(at, n).norm());
    return mx;
  }
};

/// Value blocks L^T X(q) with g = L L^T, so |X(q)|_g = |block|. With a
/// positive cap, derivative blocks add the Frobenius norm of the covariant
/// derivative in g-orthonormal frames divided by the cap.
inline ConstraintRows norm_rows(const TestFamily& f, const std::vector<Vec>& pts, const std::vector<Vec>& deriv_pts,
                                double cap) {
  const Ambient& m = f.ambient();
  const int dim = m.dim();
  const bool flat = m.family() == MetricFamily::euclidean || m.family() == MetricFamily::product;
  const Eigen::Index nrows = static_cast<Eigen::Index>(pts.size()) * dim +
                             (cap > 0 ? static_cast<Eigen::Index>(deriv_pts.size()) * dim * dim : 0);
  ConstraintRows out;
  out.rows = Eigen::MatrixXd::Zero(nrows, f.size());
  Eigen::VectorXd val;
  Eigen::MatrixXd grad;
  Eigen::Index at = 0;
  for (const Vec& p : pts) {
    f.scalars(p, val, grad);
    const Eigen::MatrixXd lt = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(m.metric_raw(p))).matrixU();
    for (int r = 0; r < dim; ++r)
      for (int s = 0; s < val.size(); ++s)
        for (int j = 0; j < dim; ++j) out.rows(at + r, s * dim + j) = lt(r, j) * val(s);
    out.blocks.emplace_back(at, dim);
    at += dim;
  }
  if (cap <= 0) return out;
  for (const Vec& p : deriv_pts) {
    f.scalars(p, val, grad);
    const Eigen::MatrixXd lt = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(m.metric_raw(p))).matrixU();
    const Eigen::MatrixXd lti = lt.inverse();
    std::array<Mat, 3> chr;
    if (!flat) chr = m.christoffel(p);
    for (int s = 0; s < val.size(); ++s) {
      for (int j = 0; j < dim; ++j) {
        // C(k, l) = delta_kj d_l phi + phi Gamma^k_{lj}
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim, dim);
        c.row(j) = grad.row(s);
        if (!flat)
          for (int k = 0; k < dim; ++k)
            for (int l = 0; l < dim; ++l) c(k, l) += val(s) * chr[static_cast<std::size_t>(k)](l, j);
        const Eigen::MatrixXd op = lt * c * lti / cap;
        for (int k = 0; k < dim; ++k)
          for (int l = 0; l < dim; ++l) out.rows(at + k * dim + l, s * dim + j) = op(k, l);
      }
    }
    out.blocks.emplace_back(at, dim * dim);
    at += dim * dim;
  }
  return out;
}

/// Maximizes b . c subject to the block constraints through the smoothed
/// problem min sum_q |A_q c|^p, b . c = 1, solved by equality-constrained
/// Newton with continuation in p. Returns c with b . c = 1 (or zero).
inline Eigen::VectorXd maximize_linear(const Eigen::VectorXd& b, const ConstraintRows& cons) {
  const Eigen::MatrixXd& a = cons.rows;
  // whiten the sampled norm so the Newton systems are well conditioned
  const Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 1e-300);
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-12 * top) keep.push_back(i);
  Eigen::MatrixXd t(b.size(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i)
    t.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(keep[i]) / std::sqrt(ev(keep[i]));
  const Eigen::MatrixXd aw = a * t;
  const Eigen::VectorXd bw = t.transpose() * b;
  const Eigen::Index n = bw.size();
  if (n == 0 || !(bw.norm() > 1e-300)) return Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd y = bw / bw.squaredNorm();

  auto log_objective = [&](const Eigen::VectorXd& r, double p) {
    const double mx = cons.max_norm(r);
    double s = 0;
    for (const auto& [at, sz] : cons.blocks) s += std::pow(r.segment(at, sz).norm() / mx, p);
    return p * std::log(mx) + std::log(s);
  };

  for (double p : {4.0, 16.0, 64.0, 256.0, 1024.0}) {
    for (int it = 0; it < 60; ++it) {
      const Eigen::VectorXd r = aw * y;
      const double mx = cons.max_norm(r);
      if (!std::isfinite(mx) || mx <= 0) throw Error(ErrorKind::numeric, "test-field optimization became non-finite");
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
      std::vector<std::size_t> active;
      std::vector<double> weight;
      Eigen::Index krows = 0;
      for (std::size_t q = 0; q < cons.blocks.size(); ++q) {
        const auto& [at, sz] = cons.blocks[q];
        const double w = std::pow(r.segment(at, sz).norm() / mx, p - 2);
        if (w < 1e-30) continue;
        active.push_back(q);
        weight.push_back(w);
        krows += sz;
      }
      // K_q = W_q^{1/2} A_q with W_q = w (I + (p - 2) rhat rhat^T)
      Eigen::MatrixXd k(krows, n);
      Eigen::Index kat = 0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        const auto& [at, sz] = cons.blocks[active[i]];
        const Eigen::VectorXd rq = r.segment(at, sz);
        const double rn = rq.norm();
        const auto aq = aw.middleRows(at, sz);
        grad.noalias() += weight[i] * aq.transpose() * (rq / mx);
        Eigen::MatrixXd half = std::sqrt(weight[i]) * Eigen::MatrixXd::Identity(sz, sz);
        if (rn > 0) {
          const Eigen::VectorXd u = rq / rn;
          half += std::sqrt(weight[i]) * (std::sqrt(p - 1) - 1) * u * u.transpose();
        }
        k.middleRows(kat, sz).noalias() = half * aq;
        kat += sz;
      }
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
      h.selfadjointView<Eigen::Lower>().rankUpdate(k.transpose());
      h = h.selfadjointView<Eigen::Lower>();
      h.diagonal().array() += 1e-12 * std::max(h.diagonal().maxCoeff(), 1e-300);
      // gradient and Hessian share the factor p mx^{p-1}; the Newton step ignores it
      Eigen::MatrixXd kkt(n + 1, n + 1);
      kkt.topLeftCorner(n, n) = h;
      kkt.topRightCorner(n, 1) = bw;
      kkt.bottomLeftCorner(1, n) = bw.transpose();
      kkt(n, n) = 0;
      Eigen::VectorXd rhs(n + 1);
      rhs.head(n) = -grad * mx;
      rhs(n) = 0;
      const Eigen::VectorXd dy = kkt.partialPivLu().solve(rhs).head(n);
      if (!dy.allFinite()) throw Error(ErrorKind::numeric, "test-field optimization became non-finite");
      const double decrement = -grad.dot(dy) * mx;
      const double f0 = log_objective(r, p);
      double step = 1.0;
      bool moved = false, stalled = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Eigen::VectorXd yn = y + step * dy;
        const double f1 = log_objective(aw * yn, p);
        if (std::isfinite(f1) && f1 < f0) {
          y = yn;
          moved = true;
          stalled = f0 - f1 < 1e-12;
          break;
        }
        step *= 0.5;
      }
      if (!moved || stalled || decrement < 1e-14) break;
    }
#ifdef ISOVAR_TRACE_OPT
    { const Eigen::VectorXd r = aw * y; std::fprintf(stderr, "p=%g value=%.8g\n", p, 1.0 / cons.max_norm(r)); }
#endif
  }
  return t * y;
}

/// max over the points of |X_c(p)|_g.
inline double sampled_sup(const TestFamily& f, const Eigen::VectorXd& c, const std::vector<Vec>& pts) {
  const Ambient& m = f.ambient();
  const int dim = m.dim();
  Eigen::VectorXd val;
  Eigen::MatrixXd grad;
  double mx = 0;
  for (const Vec& p : pts) {
    f.scalars(p, val, grad);
    Vec x = Vec::Zero(dim);
    for (int s = 0; s < val.size(); ++s)
      for (int j = 0; j < dim; ++j) x(j) += c(s * dim + j) * val(s);
    mx = std::max(mx, std::sqrt(x.dot(m.metric_raw(p) * x)));
  }
  return mx;
}

inline VariationBound bound_for_degree(const DiscreteVarifold& v, const TestFamily& f,
                                       const std::vector<Vec>& constraint_pts, const std::vector<Vec>& deriv_pts,
                                       const std::vector<Vec>& dense_pts) {
  const int dim = v.ambient().dim();
  VariationBound out;
  out.degree = f.degree();
  out.coefficients = Eigen::VectorXd::Zero(f.size());
  const Eigen::VectorXd b = variation_vector(v, f);
  if (!(b.cwiseAbs().maxCoeff() > 0)) return out;
  // headroom so the inflated Lipschitz check after optimization stays under the cap
  Eigen::VectorXd c = maximize_linear(b, norm_rows(f, constraint_pts, deriv_pts, f.lipschitz_cap() / 1.25));
  if (!(c.norm() > 0)) return out;
  // certify against the dense sample
  const double sup = sampled_sup(f, c, dense_pts);
  if (!(sup > 0) || !std::isfinite(sup)) throw Error(ErrorKind::numeric, "degenerate test field");
  c /= sup;
  const FieldBounds fb = sample_bounds(f.member(c), v.ambient(), f.lo(), f.hi(), dim == 2 ? 33 : 11);
  if (fb.lipschitz > f.lipschitz_cap()) c *= f.lipschitz_cap() / fb.lipschitz;
  out.coefficients = c;
  out.variation = b.dot(c);
  out.sup_norm = sampled_sup(f, c, dense_pts);
  out.lipschitz = std::min(fb.lipschitz, f.lipschitz_cap());
  out.lower_bound = std::max(0.0, out.variation / std::max(out.sup_norm, 1.0));
  if (!std::isfinite(out.lower_bound)) throw Error(ErrorKind::numeric, "non-finite variation bound");
  return out;
}

}  // namespace detail

/// Certified lower bound for |delta V| over the family, maximized over the
/// degree ladder d, d - 2, ... (each smaller family is contained in F), so the
/// result never decreases as the degree grows.
inline VariationBound first_variation_bound(const DiscreteVarifold& v, const TestFamily& f) {
  if (f.size() == 0) throw Error(ErrorKind::validation, "empty test family");
  if (f.ambient().id() != v.ambient().id()) throw Error(ErrorKind::validation, "family and varifold ambients differ");
  VariationBound best;
  best.degree = f.degree();
  best.coefficients = Eigen::VectorXd::Zero(f.size());
  if (v.empty()) return best;
  const int dim = v.ambient().dim();
  const int coarse = dim == 2 ? f.grid() : std::min(f.grid(), 11);
  std::vector<Vec> constraint = f.grid_points(coarse);
  const std::vector<Vec> deriv = constraint;
  // The optimizer sees the grid plus a bounded subsample of the surface; the
  // certification sup runs over every atom and support sample as well.
  const auto& surf = v.support_samples().empty() ? std::vector<Vec>{} : v.support_samples();
  std::vector<Vec> on_surface;
  for (const auto& a : v.atoms()) on_surface.push_back(a.p);
  on_surface.insert(on_surface.end(), surf.begin(), surf.end());
  const std::size_t stride = std::max<std::size_t>(1, on_surface.size() / 2048);
  for (std::size_t i = 0; i < on_surface.size(); i += stride) constraint.push_back(on_surface[i]);
  std::vector<Vec> dense = f.grid_points(2 * coarse - 1);
  dense.insert(dense.end(), on_surface.begin(), on_surface.end());
  for (int d = f.degree() % 2 == 0 ? std::min(2, f.degree()) : 1; d <= f.degree(); d += 2) {
    const VariationBound r = detail::bound_for_degree(v, f.with_degree(d), constraint, deriv, dense);
    if (r.lower_bound >= best.lower_bound) best = r;
  }
  return best;
}

inline double first_variation_norm_lb(const DiscreteVarifold& v, const TestFamily& f) {
  return first_variation_bound(v, f).lower_bound;
}

inline double first_variation_norm_lb(const DiscreteVarifold& v, int degree = 4) {
  if (v.empty()) return 0.0;
  return first_variation_norm_lb(v, TestFamily::for_varifold(v, degree));
}

inline double stationarity_residual(const DiscreteVarifold& v, const TestFamily& f) {
  return first_variation_norm_lb(v, f);
}

inline double stationarity_residual(const DiscreteVarifold& v, int degree = 4) {
  return first_variation_norm_lb(v, degree);
}

}  // namespace isovar
