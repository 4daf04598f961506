#include "doctest.h"

#include <cmath>
#include <vector>

#include "tether/errors.hpp"
#include "tether/path.hpp"

using namespace tether;

namespace {

std::vector<Vec3> curved_waypoints() {
  return {Vec3{-2.0, -0.5, 0.0}, Vec3{0.0, 0.6, 0.0}, Vec3{2.0, 0.0, 0.0}};
}

}  // namespace

TEST_SUITE("path") {
  TEST_CASE("two waypoints make an exact straight segment") {
    ParametricPath path({Vec3{-2.0, -0.5, 0.0}, Vec3{2.0, 0.0, 0.0}});
    const Vec3 first = path.evaluate(0.0);
    const Vec3 last = path.evaluate(1.0);
    CHECK(first.x == -2.0);  // endpoints are exact, not approximated
    CHECK(first.y == -0.5);
    CHECK(last.x == 2.0);
    CHECK(last.y == 0.0);

    const Vec3 mid = path.evaluate(0.5);
    CHECK(mid.x == doctest::Approx(0.0));
    CHECK(mid.y == doctest::Approx(-0.25));
    CHECK(mid.z == 0.0);

    // Constant parametric velocity along the chord.
    const Vec3 d = path.derivative(0.3);
    CHECK(d.x == doctest::Approx(4.0));
    CHECK(d.y == doctest::Approx(0.5));
    const Vec3 t = path.tangent(0.7);
    CHECK(t.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("spline interpolates the waypoints and stays smooth") {
    ParametricPath path(curved_waypoints());
    const Vec3 knot = path.evaluate(0.5);  // middle of three uniform knots
    CHECK(knot.x == doctest::Approx(0.0));
    CHECK(knot.y == doctest::Approx(0.6));

    // Central finite difference validates the analytic derivative.
    for (double s : {0.13, 0.42, 0.5, 0.77, 0.95}) {
      const double h = 1e-6;
      const Vec3 fd = (path.evaluate(s + h) - path.evaluate(s - h)) / (2.0 * h);
      const Vec3 an = path.derivative(s);
      CHECK(fd.x == doctest::Approx(an.x).epsilon(1e-7));
      CHECK(fd.y == doctest::Approx(an.y).epsilon(1e-7));
    }

    // C1 across the interior knot.
    const Vec3 left = path.derivative(0.5 - 1e-10);
    const Vec3 right = path.derivative(0.5 + 1e-10);
    CHECK((left - right).norm() < 1e-6);
  }

  TEST_CASE("spline tracks a quarter circle through five waypoints") {
    std::vector<Vec3> arc;
    for (int i = 0; i <= 4; ++i) {
      const double a = 1.5707963267948966 * i / 4.0;
      arc.push_back(Vec3{std::cos(a), std::sin(a), 0.0});
    }
    ParametricPath path(arc);
    // Interior samples: the natural end conditions distort only the first and
    // last spans, so the middle of the arc must track the circle closely.
    for (double s : {0.375, 0.5, 0.625}) {
      CHECK(path.evaluate(s).norm() == doctest::Approx(1.0).epsilon(2e-3));
      // Tangent is perpendicular to the radius on a circle.
      CHECK(std::abs(path.tangent(s).dot(path.evaluate(s))) < 2e-2);
    }
  }

  TEST_CASE("parameter domain is enforced") {
    ParametricPath path(curved_waypoints());
    CHECK_THROWS_AS(path.evaluate(-0.01), OutOfRangeError);
    CHECK_THROWS_AS(path.evaluate(1.01), OutOfRangeError);
    CHECK_THROWS_AS(path.derivative(-1.0), OutOfRangeError);
  }

  TEST_CASE("construction rejects broken geometry") {
    CHECK_THROWS_AS(ParametricPath({Vec3{0, 0, 0}}), PathGeometryError);
    CHECK_THROWS_AS(ParametricPath({Vec3{0, 0, 0}, Vec3{1, 0, 0.2}}), PathGeometryError);
    CHECK_THROWS_AS(ParametricPath({Vec3{0, 0, 0}, Vec3{0, 0, 0}, Vec3{1, 0, 0}}),
                    PathGeometryError);
    // The last leg cuts back across the first one.
    CHECK_THROWS_AS(
        ParametricPath({Vec3{0, 0, 0}, Vec3{2, 0, 0}, Vec3{1, 1, 0}, Vec3{1, -1, 0}}),
        PathGeometryError);
  }

  TEST_CASE("projection is idempotent on curve points") {
    ParametricPath path(curved_waypoints());
    for (double s = 0.0; s <= 1.0; s += 0.1) {
      CHECK(std::abs(path.project(path.evaluate(s)) - s) <= 2e-6);
    }
  }

  TEST_CASE("projection matches a brute-force scan") {
    ParametricPath path(curved_waypoints());
    const Vec3 queries[] = {Vec3{-1.0, 1.0, 0.0}, Vec3{0.5, -2.0, 0.0}, Vec3{1.9, 0.4, 0.0},
                            Vec3{-2.5, -0.5, 0.0}, Vec3{0.0, 0.61, 0.0}};
    const int n = 100000;
    for (const Vec3& q : queries) {
      double best_s = 0.0;
      double best_d = 1e300;
      for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const double d = (path.evaluate(s) - q).squared_norm();
        if (d < best_d) {
          best_d = d;
          best_s = s;
        }
      }
      CHECK(std::abs(path.project(q) - best_s) <= 2e-5);
    }
  }

  TEST_CASE("force profile: trapezoid with exact endpoints") {
    ForceProfile profile;  // 0.5 -> 1.5 plateau on [0.1, 0.8] -> 0
    CHECK(profile.value(0.0) == 0.5);
    CHECK(profile.value(0.05) == doctest::Approx(1.0));
    CHECK(profile.value(0.1) == doctest::Approx(1.5));
    CHECK(profile.value(0.45) == doctest::Approx(1.5));
    CHECK(profile.value(0.8) == doctest::Approx(1.5));
    CHECK(profile.value(0.9) == doctest::Approx(0.75));
    CHECK(profile.value(1.0) == 0.0);  // exactly zero: the endpoint is point regulation
    for (double s = 0.0; s < 1.0; s += 0.01) {
      CHECK(profile.value(s) > 0.0);
    }
    ForceProfile bad;
    bad.ramp_down_start = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("maneuver refs: pull along the tangent, constant lift") {
    CableParams cable;
    Maneuver maneuver{ParametricPath({Vec3{0, 0, 0}, Vec3{4, 0, 0}}), ForceProfile{}, 1.0};
    const Vec3 f_mid = maneuver.desired_force(0.5);
    CHECK(f_mid.x == doctest::Approx(1.5));  // plateau along +x
    CHECK(f_mid.y == doctest::Approx(0.0));
    CHECK(f_mid.z == doctest::Approx(1.0));

    const Vec3 f_end = maneuver.desired_force(1.0);
    CHECK(f_end.x == 0.0);  // profile is exactly zero at s = 1
    CHECK(f_end.y == 0.0);
    CHECK(f_end.z == 1.0);

    const GuidanceRefs refs = maneuver.refs_at(0.5, cable);
    CHECK(refs.human_pos_ref.x == doctest::Approx(2.0));
    CHECK((refs.force_ref - f_mid).norm() == 0.0);

    const GuidanceRefs terminal = maneuver.terminal_refs(cable);
    CHECK(terminal.human_pos_ref.x == doctest::Approx(4.0));
    CHECK(terminal.robot_pos_ref.z == doctest::Approx(1.01));
  }

  TEST_CASE("path error is the signed lateral offset, positive left of travel") {
    ParametricPath path({Vec3{0, 0, 0}, Vec3{4, 0, 0}});
    std::vector<Vec3> left_run;
    std::vector<Vec3> right_run;
    for (int i = 0; i <= 100; ++i) {
      const double x = 4.0 * i / 100.0;
      left_run.push_back(Vec3{x, 0.1, 0.0});
      right_run.push_back(Vec3{x, -0.1, 0.0});
    }
    for (double s : {0.2, 0.5, 0.8}) {
      CHECK(path_error(left_run, path, s) == doctest::Approx(0.1));
      CHECK(path_error(right_run, path, s) == doctest::Approx(-0.1));
    }
    const std::vector<double> grid{0.25, 0.5, 0.75};
    const std::vector<double> curve = error_curve(left_run, path, grid);
    REQUIRE(curve.size() == 3);
    for (double e : curve) CHECK(e == doctest::Approx(0.1));
  }

  TEST_CASE("error statistics across runs") {
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const std::vector<std::vector<double>> curves{{0.1, 0.1, 0.1}, {-0.1, -0.1, -0.1}};
    const PathErrorReport report = error_stats(curves, grid);
    for (double m : report.mean) CHECK(m == doctest::Approx(0.0));
    // Sample std dev with the 1/(N-1) convention: sqrt(0.02) = 0.1414.
    for (double sd : report.std_dev) CHECK(sd == doctest::Approx(0.14142135).epsilon(1e-6));
    CHECK(report.max_abs_mean == doctest::Approx(0.0));
    CHECK(report.max_abs_any == doctest::Approx(0.1));

    CHECK_THROWS_AS(error_stats({{0.1, 0.1, 0.1}}, grid), InsufficientRunsError);
  }
}
