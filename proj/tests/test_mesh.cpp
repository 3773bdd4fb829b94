#include "isovar/enclosing_ball.hpp"
#include "isovar/mesh.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace isovar;
using Catch::Approx;

namespace {

AmbientPtr neck() { return make_ambient(Ambient::revolution("1 + z^2", -1.5, 1.5)); }

MeshSurface unit_circle(int n) { return circle_polyline(euclidean2(), make_vec(0, 0), 1.0, n); }

// Reference length of a parametrized curve by composite Gauss-Legendre with many panels.
double curve_length(const Ambient& m, const ParamCurve& c, int panels = 4000) {
  static constexpr double x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double w[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  double s = 0;
  const double h = (c.t1 - c.t0) / panels;
  for (int i = 0; i < panels; ++i) {
    for (int q = 0; q < 3; ++q) {
      const double t = c.t0 + h * (i + 0.5 + 0.5 * x[q]);
      s += 0.5 * h * w[q] * norm(m, c.point(t), c.d1(t));
    }
  }
  return s;
}

double order(double e0, double e1) { return std::log2(e0 / e1); }

}  // namespace

TEST_CASE("measure of simple polylines and meshes", "[mesh]") {
  std::vector<Vec> sq{make_vec(0, 0), make_vec(1, 0), make_vec(1, 1), make_vec(0, 1)};
  const MeshSurface square(1, euclidean2(), sq, {{0, 1, 0}, {1, 2, 0}, {2, 3, 0}, {3, 0, 0}});
  CHECK(measure(square) == Approx(4.0));
  CHECK(square.closed());

  CHECK(std::abs(measure(latitude_polyline(neck(), 0.0, 512)) - 2 * kPi) < 1e-5);
  CHECK(std::abs(measure(icosphere(5)) - 4 * kPi) < 1e-2);
  CHECK(measure(unit_square_mesh()) == Approx(1.0));
}

TEST_CASE("boundary measure", "[mesh]") {
  CHECK(boundary_measure(unit_circle(16)) == 0.0);
  CHECK(boundary_measure(segment_polyline(euclidean2(), make_vec(0, 0), make_vec(2, 0))) == 2.0);
  CHECK(std::abs(boundary_measure(disk_mesh(6)) - 2 * kPi) < 1e-3);
  CHECK(boundary_measure(icosphere(1)) == 0.0);
}

TEST_CASE("degenerate and malformed meshes are rejected", "[mesh]") {
  std::vector<Vec> v{make_vec(0, 0), make_vec(0, 0)};
  CHECK_THROWS_AS(MeshSurface(1, euclidean2(), v, {{0, 1, 0}}), Error);
  std::vector<Vec> w{make_vec(0, 0), make_vec(1, 0), make_vec(2, 0)};
  CHECK_THROWS_AS(MeshSurface(1, euclidean2(), w, {{0, 1, 0}, {0, 2, 0}}), Error);
  CHECK_THROWS_AS(MeshSurface(1, euclidean2(), w, {{0, 3, 0}}), Error);
}

TEST_CASE("discrete curvature of a circle points to the centre", "[mesh]") {
  for (double rho : {0.5, 1.0, 3.0}) {
    const MeshSurface c = circle_polyline(euclidean2(), make_vec(0.2, -0.1), rho, 512);
    const CurvatureField f = mean_curvature(c);
    for (std::size_t i = 0; i < c.vertices().size(); ++i) {
      const Vec to_center = make_vec(0.2, -0.1) - c.vertices()[i];
      REQUIRE(std::abs(f.H[i].norm() - 1 / rho) < 1e-3);
      REQUIRE(f.H[i].normalized().dot(to_center.normalized()) > 1 - 1e-9);
    }
  }
}

TEST_CASE("waist geodesic has vanishing curvature; latitudes match the closed form", "[mesh]") {
  const CurvatureField f = mean_curvature(latitude_polyline(neck(), 0.0, 256));
  CHECK(f.max_norm(latitude_polyline(neck(), 0.0, 256)) < 1e-4);
  for (double z : {0.25, 0.5, 1.0}) {
    const MeshSurface lat = latitude_polyline(neck(), z, 512);
    const double r = 1 + z * z, dr = 2 * z;
    const double kappa = dr / (r * std::sqrt(1 + dr * dr));
    const CurvatureField g = mean_curvature(lat);
    for (std::size_t i = 0; i < lat.vertices().size(); ++i) {
      REQUIRE(std::abs(norm(lat.ambient(), lat.vertices()[i], g.H[i]) - kappa) < 1e-4);
      REQUIRE(g.H[i](0) < 0);  // toward the waist
    }
  }
}

TEST_CASE("latitude on the unit sphere has curvature cot(theta)", "[mesh]") {
  const auto s = make_ambient(Ambient::round_sphere(1));
  const MeshSurface lat = latitude_polyline(s, kPi / 3, 512);
  const CurvatureField f = mean_curvature(lat);
  CHECK(std::abs(f.max_norm(lat) - 1 / std::tan(kPi / 3)) < 1e-4);
}

TEST_CASE("icosphere mean curvature is 2", "[mesh]") {
  const MeshSurface s = icosphere(5);
  const CurvatureField f = mean_curvature(s);
  for (std::size_t i = 0; i < s.vertices().size(); ++i) {
    REQUIRE(std::abs(f.H[i].norm() - 2.0) < 2e-2);
    REQUIRE(f.H[i].dot(s.vertices()[i]) < 0);
  }
}

TEST_CASE("boundary vertices carry no curvature", "[mesh]") {
  const MeshSurface seg = segment_polyline(euclidean2(), make_vec(0, 0), make_vec(1, 0), 4);
  const CurvatureField f = mean_curvature(seg);
  CHECK_FALSE(f.has_H.front());
  CHECK_FALSE(f.has_H.back());
  CHECK(f.conormal.front().isApprox(make_vec(-1, 0)));
  CHECK(f.conormal.back().isApprox(make_vec(1, 0)));
}

TEST_CASE("divergence identity examples", "[mesh]") {
  CHECK(divergence_identity_residual(unit_circle(64), VectorField::zero(2)) == 0.0);
  const DivergenceTerms t = divergence_terms(unit_circle(1024), VectorField::position(2));
  CHECK(t.residual() < 1e-3);
  CHECK(t.curvature == Approx(-2 * kPi).epsilon(1e-4));
  const MeshSurface seg = segment_polyline(euclidean2(), make_vec(0, 0), make_vec(1, 0));
  CHECK(divergence_identity_residual(seg, VectorField::position(2)) < 1e-10);
}

TEST_CASE("refinement doubles or quadruples element counts", "[mesh]") {
  const MeshSurface c4 = unit_circle(4);
  const MeshSurface c8 = refine(c4);
  CHECK(c8.element_count() == 8);
  for (const Vec& v : c8.vertices()) CHECK(v.norm() == Approx(1.0));
  CHECK(refine(c4, 2).element_count() == 4 * c4.element_count());
  CHECK(icosphere(1).element_count() == 80);
  const MeshSurface ico2 = icosphere(2);
  for (const Vec& v : ico2.vertices()) CHECK(v.norm() == Approx(1.0));
  const MeshSurface seg = segment_polyline(euclidean2(), make_vec(0, 0), make_vec(1, 0), 3);
  CHECK(refine(seg).element_count() == 6);
  CHECK(boundary_measure(refine(seg)) == 2.0);
}

TEST_CASE("measures converge at least at first order", "[mesh][convergence]") {
  // circle perimeter
  std::vector<double> err;
  for (int l = 4; l <= 8; ++l) err.push_back(std::abs(measure(refine(unit_circle(4), l)) - 2 * kPi));
  for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(order(err[i], err[i + 1]) >= 0.9);

  // wavy curve on the neck surface against an independent quadrature
  const ParamCurve wavy("0.4*sin(t)", "t");
  const double ref = curve_length(*neck(), wavy);
  err.clear();
  for (int l = 4; l <= 8; ++l) err.push_back(std::abs(measure(polyline_from_curve(neck(), wavy, 1 << l)) - ref));
  for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(order(err[i], err[i + 1]) >= 0.9);

  // disk area and boundary length
  std::vector<double> ea, eb;
  for (int l = 2; l <= 6; ++l) {
    const MeshSurface d = disk_mesh(l);
    ea.push_back(std::abs(measure(d) - kPi));
    eb.push_back(std::abs(boundary_measure(d) - 2 * kPi));
  }
  for (std::size_t i = 0; i + 1 < ea.size(); ++i) {
    CHECK(order(ea[i], ea[i + 1]) >= 0.9);
    CHECK(order(eb[i], eb[i + 1]) >= 0.9);
  }

  // sphere area
  err.clear();
  for (int l = 1; l <= 5; ++l) err.push_back(std::abs(measure(icosphere(l)) - 4 * kPi));
  for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(order(err[i], err[i + 1]) >= 0.9);
}

TEST_CASE("curvature converges under refinement", "[mesh][convergence]") {
  std::vector<double> err;
  const auto s = make_ambient(Ambient::round_sphere(1));
  for (int l = 4; l <= 8; ++l) {
    const MeshSurface lat = latitude_polyline(s, 1.0, 1 << l);
    err.push_back(std::abs(mean_curvature(lat).max_norm(lat) - 1 / std::tan(1.0)));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(order(err[i], err[i + 1]) >= 0.9);

  const ParamCurve wavy("0.4*sin(t)", "t");
  (void)wavy;
  err.clear();
  for (int l = 4; l <= 8; ++l) {
    const MeshSurface c = refine(unit_circle(4), l);
    err.push_back(std::abs(mean_curvature(c).max_norm(c) - 1.0));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(order(err[i], err[i + 1]) >= 0.9);

  err.clear();
  // level 1 is exact by symmetry
  for (int l = 2; l <= 5; ++l) {
    const MeshSurface sph = icosphere(l);
    const CurvatureField f = mean_curvature(sph);
    double e = 0;
    for (std::size_t i = 0; i < f.H.size(); ++i) e = std::max(e, std::abs(f.H[i].norm() - 2));
    err.push_back(e);
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) CHECK(order(err[i], err[i + 1]) >= 0.9);
}

TEST_CASE("ball-bound chain under refinement", "[mesh][convergence]") {
  auto slack = [](const MeshSurface& m) {
    std::vector<Eigen::VectorXd> pts;
    for (const Vec& v : m.vertices()) pts.push_back(Eigen::VectorXd(v));
    const double r = min_enclosing_ball(pts).radius;
    return measure(m) - r / m.k() * (boundary_measure(m) + total_abs_curvature(m));
  };
  CHECK(slack(refine(unit_circle(4), 6)) <= 1e-3);
  CHECK(slack(disk_mesh(6)) <= 1e-3);
  CHECK(std::abs(slack(icosphere(4))) > std::abs(slack(icosphere(5))));
  CHECK(slack(icosphere(5)) <= 2e-2 * 4 * kPi);
}

TEST_CASE("minimal enclosing ball", "[mesh]") {
  std::vector<Eigen::VectorXd> pts;
  const MeshSurface ico2 = icosphere(2);
  for (const Vec& v : ico2.vertices()) pts.push_back(Eigen::VectorXd(v) + Eigen::Vector3d(1, 2, 3));
  const Ball b = min_enclosing_ball(pts);
  CHECK(b.radius == Approx(1.0).epsilon(1e-9));
  CHECK((b.center - Eigen::Vector3d(1, 2, 3)).norm() < 1e-9);
  std::vector<Eigen::VectorXd> tri{Eigen::Vector2d(0, 0), Eigen::Vector2d(4, 0), Eigen::Vector2d(1, 0.5)};
  CHECK(min_enclosing_ball(tri).radius == Approx(2.0));
}

TEST_CASE("mesh text format round-trips; OFF import", "[mesh][io]") {
  const MeshSurface m = latitude_polyline(neck(), 0.3, 17);
  std::stringstream ss;
  write_mesh(ss, m);
  const MeshSurface r = read_mesh(ss, m.ambient_ptr());
  REQUIRE(r.vertices().size() == m.vertices().size());
  for (std::size_t i = 0; i < r.vertices().size(); ++i) CHECK(r.vertices()[i] == m.vertices()[i]);
  CHECK(measure(r) == measure(m));

  std::stringstream seg;
  write_mesh(seg, segment_polyline(euclidean2(), make_vec(0, 0), make_vec(1, 1), 2));
  CHECK(read_mesh(seg, euclidean2()).boundary_vertices().size() == 2);

  std::stringstream off("OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n");
  const MeshSurface sq = read_off(off);
  CHECK(measure(sq) == Approx(1.0));
  CHECK(boundary_measure(sq) == Approx(4.0));
  std::stringstream bad("OFF\n4 2 0\n0 0 0\n");
  CHECK_THROWS_AS(read_off(bad), Error);
}
