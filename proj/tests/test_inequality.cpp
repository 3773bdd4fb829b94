#include "isovar/inequality.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace isovar;
using Catch::Approx;

namespace {

Domain disk(double radius = 1.0) {
  const std::string r = format_double(radius);
  return Domain(euclidean2(), {"x^2 + y^2 - " + format_double(radius * radius)},
                {ParamCurve(r + "*cos(t)", r + "*sin(t)")}, "disk");
}

AmbientPtr neck() { return make_ambient(Ambient::revolution("1 + z^2", -1.5, 1.5)); }

Domain neck_band() {
  return Domain(neck(), {"z^2 - 1"}, {ParamCurve("1", "t"), ParamCurve("-1", "-t")}, "band");
}

Domain polar_cap(double theta0) {
  return Domain(make_ambient(Ambient::round_sphere(1.0)), {"theta - " + format_double(theta0)},
                {ParamCurve(format_double(theta0), "t")}, "cap");
}

// Regular n-gon inscribed in a circle of radius rho: perimeter 2 n rho sin(pi/n),
// total turning 2 pi.
double ngon_ratio(double rho, int n) { return 2 * n * rho * std::sin(kPi / n) / (2 * kPi); }

}  // namespace

TEST_CASE("linear check on a diameter holds with equality", "[inequality]") {
  const auto seg = segment_polyline(euclidean2(), make_vec(-1, 0), make_vec(1, 0), 64);
  const Domain d = disk();
  const auto r = check_linear(seg, 1.0, &d);
  CHECK(r.lhs == Approx(2.0).epsilon(1e-12));
  CHECK(r.rhs == Approx(2.0).epsilon(1e-12));
  CHECK(r.ratio == Approx(1.0).epsilon(1e-12));
  CHECK(r.verdict == Verdict::holds);
}

TEST_CASE("linear check on inscribed polygons matches the closed form", "[inequality]") {
  for (int n : {6, 17, 256}) {
    for (double rho : {0.25, 0.9}) {
      const auto r = check_linear(circle_polyline(euclidean2(), make_vec(0, 0), rho, n), 1.0);
      CHECK(r.curvature == Approx(2 * kPi).epsilon(1e-10));
      CHECK(r.ratio == Approx(ngon_ratio(rho, n)).epsilon(1e-10));
      CHECK(r.verdict == Verdict::holds);
    }
  }
}

TEST_CASE("linear check: the waist violates every constant", "[inequality]") {
  const auto r = check_linear(latitude_polyline(neck(), 0.0, 128), 100.0);
  CHECK(r.curvature < 1e-12);
  CHECK(r.verdict == Verdict::violated);
}

TEST_CASE("linear check: containment and constant errors", "[inequality]") {
  const Domain d = disk();
  const auto outside = segment_polyline(euclidean2(), make_vec(-2, 0), make_vec(0, 0), 8);
  CHECK_THROWS_MATCHES(check_linear(outside, 1.0, &d), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) { return e.kind() == ErrorKind::containment; }));
  const auto inside = segment_polyline(euclidean2(), make_vec(-0.5, 0), make_vec(0, 0), 8);
  CHECK_THROWS_AS(check_linear(inside, 0.0), Error);
  CHECK_THROWS_AS(check_linear(inside, -1.0), Error);
}

TEST_CASE("latitude on the neck surface: ratio from the revolution formulas", "[inequality]") {
  const double z = 0.5, rz = 1 + z * z, dr = 2 * z;
  const double kappa = dr / (rz * std::sqrt(1 + dr * dr));
  const auto r = check_linear(latitude_polyline(neck(), z, 2048), 1.0);
  // ratio = length / (kappa length) = 1 / kappa
  CHECK(r.ratio == Approx(1 / kappa).epsilon(1e-4));
}

TEST_CASE("ball bound is near-sharp on spheres and disks", "[inequality]") {
  const auto sphere = check_ball_bound(icosphere(3));
  CHECK(sphere.constant == Approx(0.5).epsilon(1e-9));
  CHECK(sphere.ratio / sphere.constant == Approx(1.0).margin(2e-2));
  const auto flat = check_ball_bound(disk_mesh(4));
  CHECK(flat.constant == Approx(0.5).epsilon(1e-9));
  CHECK(flat.ratio / flat.constant == Approx(1.0).margin(2e-2));
  CHECK(flat.verdict == Verdict::holds);
  const auto circ = check_ball_bound(circle_polyline(euclidean2(), make_vec(3, -1), 2.0, 512));
  CHECK(circ.constant == Approx(2.0).epsilon(1e-9));
  CHECK(circ.ratio / circ.constant == Approx(1.0).margin(1e-4));
}

TEST_CASE("ball bound needs a Euclidean ambient", "[inequality]") {
  CHECK_THROWS_AS(check_ball_bound(latitude_polyline(neck(), 0.5, 32)), Error);
}

TEST_CASE("nonlinear threshold and constant", "[inequality]") {
  CHECK(nonlinear_alpha(1.0, 0.25, 2) == Approx(4.0));
  CHECK(nonlinear_alpha(3.0, 0.5, 1) == Approx(1.0 / 3.0));
  CHECK(std::isinf(nonlinear_alpha(1.0, 0.0, 2)));
  CHECK_THROWS_AS(nonlinear_alpha(1.0, -1.0, 2), Error);
  CHECK_THROWS_AS(nonlinear_alpha(0.0, 1.0, 2), Error);

  const auto r = check_nonlinear(icosphere(2), 1.0, 0.0);
  CHECK(r.c_prime == 2.0);
  CHECK(std::isinf(r.alpha));
  CHECK(r.lhs == Approx(std::sqrt(measure(icosphere(2)))));
  CHECK(r.verdict == Verdict::holds);

  // large mass: inconclusive without a linear constant, decided with one
  const auto big = check_nonlinear(icosphere(2), 1.0, 1.0);  // alpha = 1/4
  CHECK(big.verdict == Verdict::inconclusive);
  CHECK(big.gap > 0);
  const auto decided = check_nonlinear(icosphere(2), 1.0, 1.0, 0.5);
  CHECK(decided.constant == Approx(0.5 * std::pow(0.25, -0.5)));
  CHECK(decided.verdict == Verdict::holds);
}

TEST_CASE("nonlinear verdicts are invariant under dilation", "[inequality][property]") {
  for (const MeshSurface& base : {icosphere(2), disk_mesh(3), unit_square_mesh()}) {
    const auto r0 = check_nonlinear(base, 1.0, 0.0);
    for (double lam : {0.5, 2.0}) {
      std::vector<Vec> verts;
      for (const Vec& v : base.vertices()) verts.push_back(lam * v);
      const MeshSurface scaled(base.k(), base.ambient_ptr(), verts, base.elements());
      const auto r = check_nonlinear(scaled, 1.0, 0.0);
      CHECK(r.verdict == r0.verdict);
      CHECK(r.ratio == Approx(r0.ratio).epsilon(1e-12));
    }
  }
}

TEST_CASE("varifold linear check", "[inequality]") {
  const Domain d = disk();
  const auto seg = from_mesh(segment_polyline(euclidean2(), make_vec(-1, 0), make_vec(1, 0), 64));
  const auto r = check_varifold_linear(seg, 1.0, 4, &d);
  CHECK(r.rhs == Approx(2.0).epsilon(1e-12));
  CHECK(r.ratio == Approx(1.0).epsilon(1e-12));
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.variation_lb <= r.geometric + 1e-6);

  const auto waist = from_mesh(latitude_polyline(neck(), 0.0, 256));
  const auto w = check_varifold_linear(waist, 10.0);
  CHECK(w.verdict == Verdict::violated);
  CHECK(w.lhs == Approx(2 * kPi).epsilon(1e-4));
  CHECK(w.variation_lb < 1e-3);

  const DiscreteVarifold zero(1, euclidean2());
  CHECK(check_varifold_linear(zero, 1.0).verdict == Verdict::holds);

  // atoms only: the lower bound can certify holding, never violation
  DiscreteVarifold bare(1, neck(), waist.atoms());
  const auto b = check_varifold_linear(bare, 10.0);
  CHECK(b.verdict == Verdict::inconclusive);
  CHECK(b.gap > 0);
  DiscreteVarifold circ(1, euclidean2(), from_mesh(circle_polyline(euclidean2(), make_vec(0, 0), 0.5, 256)).atoms());
  CHECK(check_varifold_linear(circ, 1.0).verdict == Verdict::holds);
}

TEST_CASE("dilation certificate on disks", "[inequality][certificate]") {
  const auto c = certificate_bound(VectorField::position(2), disk());
  CHECK(c.sup_norm == Approx(1.0).epsilon(1e-12));
  CHECK(c.mu == Approx(1.0).epsilon(1e-12));
  CHECK(c.bound() == Approx(1.0).epsilon(1e-12));
  for (double r : {0.5, 3.0}) {
    const auto cr = certificate_bound(VectorField::dilation(make_vec(0, 0), 1 / r), disk(r));
    CHECK(cr.mu == Approx(1 / r).epsilon(1e-12));
  }
}

TEST_CASE("sin(theta) certificate on a polar cap", "[inequality][certificate]") {
  const Domain cap = polar_cap(kPi / 3);
  const auto c = certificate_bound(VectorField::from_expressions({"sin(theta)", "0"}, {"theta", "phi"}), cap);
  // div = cos(theta) on every line, |X| = sin(theta): worst at the rim
  CHECK(c.mu == Approx(std::cos(kPi / 3) / std::sin(kPi / 3)).epsilon(1e-9));
}

TEST_CASE("no certificate exists on the neck band", "[inequality][certificate]") {
  const Domain b = neck_band();
  for (const auto& f : default_certificate_fields(b)) {
    CHECK(evaluate_certificate(f, b).mu <= 0);
    CHECK_THROWS_AS(certificate_bound(f, b), Error);
  }
  for (const auto& f : polynomial_certificate_fields(b)) CHECK(evaluate_certificate(f, b).mu <= 0);
}

TEST_CASE("constant estimate on the unit disk is sharp", "[inequality][estimate]") {
  const auto e = estimate_constant(disk());
  CHECK(e.lower == Approx(1.0).epsilon(1e-9));
  CHECK(e.upper == Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(e.lower_diverges);
}

TEST_CASE("constant estimate scales with the domain", "[inequality][estimate][property]") {
  const auto e = estimate_constant(disk(2.0));
  CHECK(e.lower == Approx(2.0).epsilon(1e-9));
  CHECK(e.upper == Approx(2.0).epsilon(1e-9));
}

TEST_CASE("constant estimate on the neck band diverges", "[inequality][estimate]") {
  const auto e = estimate_constant(neck_band());
  CHECK(e.lower_diverges);
  CHECK(std::isinf(e.lower));
  CHECK(std::isinf(e.upper));
}

TEST_CASE("constant estimate on a polar cap brackets the constant", "[inequality][estimate]") {
  const auto e = estimate_constant(polar_cap(kPi / 3));
  CHECK(e.upper == Approx(std::tan(kPi / 3)).epsilon(1e-9));
  CHECK(e.lower > 0);
  CHECK(e.lower <= e.upper);
}

TEST_CASE("certified constants bound every sampled curve", "[inequality][property]") {
  const Domain d = disk();
  const auto e = estimate_constant(d);
  for (double rho : {0.1, 0.5, 0.99}) {
    const auto v = from_mesh(circle_polyline(euclidean2(), make_vec(0, 0), rho, 256));
    CHECK(mass(v) <= e.upper * *v.geometric_variation() + 1e-6);
    CHECK(check_linear(circle_polyline(euclidean2(), make_vec(0, 0), rho, 256), e.upper, &d).verdict == Verdict::holds);
  }
}

TEST_CASE("ratio probe on latitudes approaching the waist", "[inequality][probe]") {
  std::vector<DiscreteVarifold> seq;
  for (int i : {2, 4, 8}) seq.push_back(from_mesh(latitude_polyline(neck(), 1.0 / i, 256)));
  seq.push_back(from_mesh(latitude_polyline(neck(), 0.0, 256)));
  const auto t = ratio_sequence_probe(seq);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.residuals_decreasing);
  CHECK(t.ratios_increasing);
  CHECK(t.rows.back().residual < 1e-3);
  CHECK(t.rows.back().distance_to_last == 0.0);
  CHECK(t.rows.front().mass == Approx(2 * kPi * 1.25).epsilon(1e-3));
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].distance_to_last < t.rows[i - 1].distance_to_last);
}
