#pragma once

// Tangent vector fields given in chart components, with exact chart Jacobians
// (symbolic for expression fields) and the covariant tangential divergence.

#include "isovar/ambient.hpp"
#include "isovar/expression.hpp"

#include <functional>
#include <string>
#include <vector>

namespace isovar {

class VectorField {
 public:
  using ValueFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;

  VectorField(int dim, ValueFn value, JacobianFn jacobian, std::string description = "callable")
      : dim_(dim), value_(std::move(value)), jacobian_(std::move(jacobian)), text_(std::move(description)) {}

  /// Field with chart components given as expressions in `coordinate_names`.
  static VectorField from_expressions(const std::vector<std::string>& components,
                                      const std::vector<std::string>& coordinate_names) {
    const int dim = static_cast<int>(components.size());
    if (dim != static_cast<int>(coordinate_names.size()))
      throw Error(ErrorKind::invalid_field, "field components do not match the chart dimension");
    std::vector<Expr> comp;
    std::vector<Expr> jac;
    for (const auto& c : components) comp.push_back(Expr::parse(c, coordinate_names));
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) jac.push_back(comp[static_cast<std::size_t>(i)].derivative(j));
    std::string text = "[";
    for (std::size_t i = 0; i < components.size(); ++i) text += (i ? ", " : "") + components[i];
    text += "]";
    VectorField f(
        dim,
        [comp, dim](const Vec& p) {
          Vec v(dim);
          for (int i = 0; i < dim; ++i) v(i) = comp[static_cast<std::size_t>(i)].eval({p.data(), static_cast<std::size_t>(dim)});
          return v;
        },
        [jac, dim](const Vec& p) {
          Mat m(dim, dim);
          for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
              m(i, j) = jac[static_cast<std::size_t>(i * dim + j)].eval({p.data(), static_cast<std::size_t>(dim)});
          return m;
        },
        text);
    f.components_ = components;
    return f;
  }

  /// x -> scale * (x - center).
  static VectorField dilation(const Vec& center, double scale = 1.0) {
    const int dim = static_cast<int>(center.size());
    return VectorField(
        dim, [center, scale](const Vec& p) { return Vec(scale * (p - center)); },
        [dim, scale](const Vec&) { return Mat(scale * Mat::Identity(dim, dim)); },
        "dilation(" + format_double(scale) + ")");
  }

  static VectorField position(int dim) { return dilation(Vec::Zero(dim), 1.0); }

  static VectorField constant(const Vec& c) {
    const int dim = static_cast<int>(c.size());
    return VectorField(
        dim, [c](const Vec&) { return c; }, [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); }, "constant");
  }

  static VectorField zero(int dim) { return constant(Vec::Zero(dim)); }

  int dim() const { return dim_; }
  Vec operator()(const Vec& p) const { return value_(p); }
  /// J(i, j) = d X^i / d x^j.
  Mat jacobian(const Vec& p) const { return jacobian_(p); }
  const std::string& description() const { return text_; }
  const std::vector<std::string>& components() const { return components_; }

  /// Covariant derivative matrix C with (nabla_v X) = C v.
  Mat covariant(const Ambient& m, const Vec& p) const {
    check(m);
    Mat c = jacobian(p);
    if (m.family() == MetricFamily::euclidean || m.family() == MetricFamily::product) return c;
    const Vec x = value_(p);
    const auto gamma = m.christoffel(p);
    for (int k = 0; k < dim_; ++k) c.row(k) += (gamma[static_cast<std::size_t>(k)] * x).transpose();
    return c;
  }

  void check(const Ambient& m) const {
    if (m.dim() != dim_) throw Error(ErrorKind::invalid_field, "field dimension does not match ambient");
  }

  VectorField scaled(double s) const {
    auto v = value_;
    auto j = jacobian_;
    VectorField f(
        dim_, [v, s](const Vec& p) { return Vec(s * v(p)); }, [j, s](const Vec& p) { return Mat(s * j(p)); },
        format_double(s) + "*" + text_);
    return f;
  }

 private:
  int dim_;
  ValueFn value_;
  JacobianFn jacobian_;
  std::string text_;
  std::vector<std::string> components_;
};

/// g-orthonormal basis (columns) of the span of the given chart vectors.
inline Mat orthonormalize(const Mat& g, const Mat& vectors) {
  Mat out = vectors;
  for (int i = 0; i < out.cols(); ++i) {
    for (int j = 0; j < i; ++j) out.col(i) -= out.col(j).dot(g * out.col(i)) * out.col(j);
    const double n = std::sqrt(out.col(i).dot(g * out.col(i)));
    if (!(n > 1e-300)) throw Error(ErrorKind::numeric, "degenerate plane basis");
    out.col(i) /= n;
  }
  return out;
}

/// div_S X(p) = sum_i g(nabla_{e_i} X, e_i) for a g-orthonormal basis e_i of S.
inline double tangential_divergence(const Ambient& m, const Vec& p, const Mat& basis, const VectorField& x) {
  const Mat c = x.covariant(m, p);
  const Mat g = m.metric_raw(p);
  double s = 0.0;
  for (int i = 0; i < basis.cols(); ++i) s += basis.col(i).dot(g * (c * basis.col(i)));
  return s;
}

struct FieldBounds {
  double sup_norm = 0.0;   // sampled max |X|_g, inflated by 10%
  double lipschitz = 0.0;  // sampled max operator norm of the covariant derivative, inflated by 10%
};

/// Sampled sup norm and Lipschitz budget on a grid over the chart box [lo, hi].
inline FieldBounds sample_bounds(const VectorField& x, const Ambient& m, const Vec& lo, const Vec& hi, int grid = 33) {
  FieldBounds b;
  const int dim = m.dim();
  const int total = dim == 2 ? grid * grid : grid * grid * grid;
  for (int idx = 0; idx < total; ++idx) {
    Vec p(dim);
    int rem = idx;
    for (int i = 0; i < dim; ++i) {
      const int a = rem % grid;
      rem /= grid;
      p(i) = grid == 1 ? 0.5 * (lo(i) + hi(i)) : lo(i) + (hi(i) - lo(i)) * a / (grid - 1);
    }
    const Mat g = m.metric_raw(p);
    Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(g)};
    if (llt.info() != Eigen::Success) continue;  // chart singularity (e.g. a pole)
    const Vec v = x(p);
    b.sup_norm = std::max(b.sup_norm, std::sqrt(v.dot(g * v)));
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd c = x.covariant(m, p);
    // operator norm of nabla X between g-normed spaces: L^T C L^{-T}
    const Eigen::MatrixXd op = l.transpose() * c * l.transpose().inverse();
    b.lipschitz = std::max(b.lipschitz, Eigen::JacobiSVD<Eigen::MatrixXd>(op).singularValues()(0));
  }
  b.sup_norm *= 1.1;
  b.lipschitz *= 1.1;
  return b;
}

}  // namespace isovar
