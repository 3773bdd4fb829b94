#pragma once

// Smallest enclosing ball of a point set in R^2 or R^3 (Welzl, move-to-front
// formulation with a fixed shuffle).

#include "isovar/core.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace isovar {

struct Ball {
  Eigen::VectorXd center;
  double radius = 0.0;

  bool contains(const Eigen::VectorXd& p, double tol = 1e-10) const {
    return (p - center).norm() <= radius * (1 + tol) + tol;
  }
};

namespace detail {

// Smallest ball with all `support` points on its boundary.
inline Ball ball_through(const std::vector<Eigen::VectorXd>& support, int dim) {
  if (support.empty()) return {Eigen::VectorXd::Zero(dim), -1.0};
  const Eigen::VectorXd& p0 = support[0];
  if (support.size() == 1) return {p0, 0.0};
  const int m = static_cast<int>(support.size()) - 1;
  // center = p0 + A^T lambda, with (p_i - p0).c' = |p_i - p0|^2 / 2
  Eigen::MatrixXd a(m, dim);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd d = support[static_cast<std::size_t>(i + 1)] - p0;
    a.row(i) = d.transpose();
    rhs(i) = 0.5 * d.squaredNorm();
  }
  const Eigen::MatrixXd gram = a * a.transpose();
  const Eigen::VectorXd lambda = gram.completeOrthogonalDecomposition().solve(rhs);
  const Eigen::VectorXd offset = a.transpose() * lambda;
  return {p0 + offset, offset.norm()};
}

}  // namespace detail

inline Ball min_enclosing_ball(std::vector<Eigen::VectorXd> pts, unsigned seed = 12345) {
  if (pts.empty()) return {Eigen::VectorXd(), 0.0};
  const int dim = static_cast<int>(pts[0].size());
  std::mt19937 rng(seed);
  std::shuffle(pts.begin(), pts.end(), rng);

  // Iterative Welzl with up to dim+1 boundary points.
  auto solve = [&](auto&& self, std::size_t n, std::vector<Eigen::VectorXd>& support) -> Ball {
    Ball b = detail::ball_through(support, dim);
    if (static_cast<int>(support.size()) == dim + 1) return b;
    for (std::size_t i = 0; i < n; ++i) {
      if (b.radius >= 0 && b.contains(pts[i])) continue;
      support.push_back(pts[i]);
      b = self(self, i, support);
      support.pop_back();
    }
    return b;
  };
  std::vector<Eigen::VectorXd> support;
  return solve(solve, pts.size(), support);
}

}  // namespace isovar
