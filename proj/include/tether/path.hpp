#pragma once

#include <cstddef>
#include <vector>

#include "tether/control.hpp"
#include "tether/params.hpp"
#include "tether/vec3.hpp"

namespace tether {

/// Planar curve through ordered waypoints, parameterized by s in [0,1] with
/// uniformly spaced knots. Interpolation is a natural cubic spline per
/// coordinate (a straight segment for two waypoints). Construction validates
/// that the curve stays planar, never loses its tangent, and does not
/// self-intersect; queries after that are pure and cheap.
class ParametricPath {
 public:
  /// `scan_samples` sizes the cached coarse grid used by project().
  explicit ParametricPath(std::vector<Vec3> waypoints, int scan_samples = 512);

  /// Position at parameter s. Throws OutOfRangeError outside [0,1]. The
  /// endpoints return the first/last waypoints exactly.
  Vec3 evaluate(double s) const;

  /// Parametric velocity dp/ds (not normalized).
  Vec3 derivative(double s) const;

  /// Unit tangent. Throws DegenerateTangentError when the parametric velocity
  /// collapses below 1e-9.
  Vec3 tangent(double s) const;

  /// Parameter of the point on the curve closest to `point`: coarse scan over
  /// the cached grid, then golden-section refinement to |ds| < 1e-6. Ties go
  /// to the smallest s; the result is always inside [0,1].
  double project(const Vec3& point) const;

  const std::vector<Vec3>& waypoints() const { return waypoints_; }
  int scan_samples() const { return scan_samples_; }

 private:
  std::size_t segment_index(double s, double& local) const;

  std::vector<Vec3> waypoints_;
  // Per-segment cubic coefficients: p(x) = a[i] + b[i] x + c[i] x^2 + d[i] x^3
  // with x = s - s_i and s_i = i * knot_step_.
  std::vector<Vec3> coeff_b_, coeff_c_, coeff_d_;
  double knot_step_ = 0.0;
  int scan_samples_ = 0;
  std::vector<Vec3> scan_points_;  // cached curve samples for projection
};

/// Trapezoidal pulling-force intensity over the path parameter: starts at a
/// strictly positive value, ramps to the plateau, and decays linearly to
/// exactly zero at s = 1 so the endpoint behaves like point regulation.
struct ForceProfile {
  double f_start = 0.5;          // N, value at s = 0
  double f_max = 1.5;            // N, plateau value
  double ramp_up_end = 0.1;      // s-fraction where the plateau starts
  double ramp_down_start = 0.8;  // s-fraction where the decay starts

  double value(double s) const;
  void validate() const;
};

/// A guidance task along a path: where to lead the human and how hard to pull
/// at every parameter value. The vertical force component is constant and
/// keeps the cable taut.
struct Maneuver {
  ParametricPath path;
  ForceProfile profile;
  double fz_des = 1.0;  // N

  /// profile(s) * tangent(s) + [0,0,fz_des]; exactly [0,0,fz_des] at s = 1.
  Vec3 desired_force(double s) const;

  /// References for parameter s: human on the curve, force from the profile,
  /// robot offset accordingly.
  GuidanceRefs refs_at(double s, const CableParams& cable) const;

  /// refs_at(1): the endpoint point-regulation references.
  GuidanceRefs terminal_refs(const CableParams& cable) const { return refs_at(1.0, cable); }
};

struct ManeuverCommand {
  Vec3 u_a;
  double s_star = 0.0;
  GuidanceRefs refs;  // references at s_star (useful for logging/analysis)
};

/// Path follower: project the human onto the curve, then apply the guidance
/// law with the references taken at the projected parameter. The parameter
/// advances only because the human advances, so a stopped human freezes the
/// references instead of winding up the error.
ManeuverCommand maneuver_controller(const SystemState& state, const Maneuver& maneuver,
                                    const GuidanceParams& gains, const CableParams& cable);

/// Signed lateral deviation of a recorded human trajectory from the path at
/// parameter s: the normal component (positive left of travel) of the sample
/// closest to the normal plane of the curve at s.
double path_error(const std::vector<Vec3>& human_positions, const ParametricPath& path, double s);

/// path_error evaluated over a whole parameter grid.
std::vector<double> error_curve(const std::vector<Vec3>& human_positions,
                                const ParametricPath& path, const std::vector<double>& s_grid);

struct PathErrorReport {
  std::vector<double> s_grid;
  std::vector<std::vector<double>> runs;  // per-run signed error curves
  std::vector<double> mean;
  std::vector<double> std_dev;   // sqrt of the 1/(N-1) sample variance
  std::vector<double> variance;  // raw 1/(N-1) sample variance
  double max_abs_mean = 0.0;
  double max_abs_any = 0.0;
};

/// Pointwise statistics across runs sharing one s-grid. Throws
/// InsufficientRunsError for fewer than two runs.
PathErrorReport error_stats(const std::vector<std::vector<double>>& curves,
                            const std::vector<double>& s_grid);

}  // namespace tether
