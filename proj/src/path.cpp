#include "tether/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tether/errors.hpp"

namespace tether {
namespace {

// Solve the natural-spline tridiagonal system for second derivatives at the
// knots (uniform spacing h): M[0] = M[n-1] = 0 and
// M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h^2.
std::vector<Vec3> natural_second_derivatives(const std::vector<Vec3>& y, double h) {
  const std::size_t n = y.size();
  std::vector<Vec3> m(n);
  if (n < 3) return m;  // straight segment: all zero

  const std::size_t unknowns = n - 2;
  std::vector<double> diag(unknowns, 4.0);
  std::vector<Vec3> rhs(unknowns);
  for (std::size_t i = 0; i < unknowns; ++i) {
    rhs[i] = (y[i + 2] - y[i + 1] * 2.0 + y[i]) * (6.0 / (h * h));
  }
  // Thomas algorithm (sub/super diagonals are all 1).
  for (std::size_t i = 1; i < unknowns; ++i) {
    const double w = 1.0 / diag[i - 1];
    diag[i] -= w;
    rhs[i] -= rhs[i - 1] * w;
  }
  m[unknowns] = rhs[unknowns - 1] / diag[unknowns - 1];
  for (std::size_t i = unknowns - 1; i-- > 0;) {
    m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
  }
  return m;
}

// 2-D segment intersection test (shared endpoints of adjacent segments are
// excluded by the caller). Orientation signs are thresholded on the sine of
// the turn angle so that exactly-straight stretches of the sampled curve do
// not trip the test through rounding noise; collinear overlap counts as an
// intersection.
int turn_sign(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double o = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  const double scale = (b - a).norm() * (c - a).norm();
  if (std::abs(o) <= 1e-9 * scale) return 0;
  return o > 0.0 ? 1 : -1;
}

bool on_segment(const Vec3& a, const Vec3& b, const Vec3& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const int s1 = turn_sign(a, b, c);
  const int s2 = turn_sign(a, b, d);
  const int s3 = turn_sign(c, d, a);
  const int s4 = turn_sign(c, d, b);
  if (s1 * s2 < 0 && s3 * s4 < 0) return true;
  if (s1 == 0 && on_segment(a, b, c)) return true;
  if (s2 == 0 && on_segment(a, b, d)) return true;
  if (s3 == 0 && on_segment(c, d, a)) return true;
  if (s4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

constexpr double kGoldenRatio = 0.6180339887498949;  // (sqrt(5) - 1) / 2

}  // namespace

ParametricPath::ParametricPath(std::vector<Vec3> waypoints, int scan_samples)
    : waypoints_(std::move(waypoints)), scan_samples_(scan_samples) {
  const std::size_t n = waypoints_.size();
  if (n < 2) {
    throw PathGeometryError("a path needs at least two waypoints");
  }
  if (scan_samples_ < 8) {
    throw PathGeometryError("projection scan grid must have at least 8 samples");
  }
  for (const Vec3& w : waypoints_) {
    if (!w.is_finite()) throw PathGeometryError("waypoints must be finite");
    if (w.z != 0.0) throw PathGeometryError("waypoints must lie on the ground plane (z = 0)");
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (distance(waypoints_[i], waypoints_[i + 1]) == 0.0) {
      throw PathGeometryError("consecutive waypoints coincide");
    }
  }

  knot_step_ = 1.0 / static_cast<double>(n - 1);
  const std::vector<Vec3> m = natural_second_derivatives(waypoints_, knot_step_);
  coeff_b_.resize(n - 1);
  coeff_c_.resize(n - 1);
  coeff_d_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    coeff_c_[i] = m[i] * 0.5;
    coeff_d_[i] = (m[i + 1] - m[i]) / (6.0 * knot_step_);
    coeff_b_[i] = (waypoints_[i + 1] - waypoints_[i]) / knot_step_ -
                  (m[i] * 2.0 + m[i + 1]) * (knot_step_ / 6.0);
  }

  // Geometric validation on a dense sampling: the tangent must never vanish
  // and the polyline through the samples must not cross itself.
  const int dense = std::max(1024, scan_samples_ * 2);
  std::vector<Vec3> samples(static_cast<std::size_t>(dense) + 1);
  for (int i = 0; i <= dense; ++i) {
    const double s = static_cast<double>(i) / dense;
    samples[static_cast<std::size_t>(i)] = evaluate(s);
    if (derivative(s).norm() < 1e-9) {
      throw PathGeometryError("path gradient vanishes near s=" + std::to_string(s));
    }
  }
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    for (std::size_t j = i + 2; j + 1 < samples.size(); ++j) {
      if (segments_intersect(samples[i], samples[i + 1], samples[j], samples[j + 1])) {
        throw PathGeometryError("path self-intersects near s=" +
                                std::to_string(static_cast<double>(i) / dense) + " and s=" +
                                std::to_string(static_cast<double>(j) / dense));
      }
    }
  }

  scan_points_.resize(static_cast<std::size_t>(scan_samples_) + 1);
  for (int i = 0; i <= scan_samples_; ++i) {
    scan_points_[static_cast<std::size_t>(i)] = evaluate(static_cast<double>(i) / scan_samples_);
  }
}

std::size_t ParametricPath::segment_index(double s, double& local) const {
  const std::size_t segments = waypoints_.size() - 1;
  auto idx = static_cast<std::size_t>(s / knot_step_);
  if (idx >= segments) idx = segments - 1;
  local = s - static_cast<double>(idx) * knot_step_;
  return idx;
}

Vec3 ParametricPath::evaluate(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw OutOfRangeError("path parameter " + std::to_string(s) + " outside [0, 1]");
  }
  if (s == 0.0) return waypoints_.front();
  if (s == 1.0) return waypoints_.back();
  double x = 0.0;
  const std::size_t i = segment_index(s, x);
  return waypoints_[i] + coeff_b_[i] * x + coeff_c_[i] * (x * x) + coeff_d_[i] * (x * x * x);
}

Vec3 ParametricPath::derivative(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw OutOfRangeError("path parameter " + std::to_string(s) + " outside [0, 1]");
  }
  double x = 0.0;
  const std::size_t i = segment_index(s, x);
  return coeff_b_[i] + coeff_c_[i] * (2.0 * x) + coeff_d_[i] * (3.0 * x * x);
}

Vec3 ParametricPath::tangent(double s) const {
  const Vec3 g = derivative(s);
  const double n = g.norm();
  if (n < 1e-9) {
    throw DegenerateTangentError(s);
  }
  return g / n;
}

double ParametricPath::project(const Vec3& point) const {
  // Coarse scan; strict comparison keeps the smallest-s sample on ties.
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scan_points_.size(); ++i) {
    const double d2 = (scan_points_[i] - point).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  const double grid = 1.0 / scan_samples_;
  double lo = best == 0 ? 0.0 : (static_cast<double>(best) - 1.0) * grid;
  double hi = best + 1 >= scan_points_.size() ? 1.0 : (static_cast<double>(best) + 1.0) * grid;

  // Golden-section refinement of the squared distance on [lo, hi].
  const auto d2_at = [&](double s) { return (evaluate(s) - point).squared_norm(); };
  double a = lo, b = hi;
  double c1 = b - kGoldenRatio * (b - a);
  double c2 = a + kGoldenRatio * (b - a);
  double f1 = d2_at(c1);
  double f2 = d2_at(c2);
  while (b - a > 1e-8) {
    if (f1 <= f2) {  // keep the left interval on ties: smaller s wins
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - kGoldenRatio * (b - a);
      f1 = d2_at(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + kGoldenRatio * (b - a);
      f2 = d2_at(c2);
    }
  }
  const double s = 0.5 * (a + b);
  // The interior refinement cannot beat an endpoint minimum exactly at the
  // clamp, so compare against the bracket ends explicitly.
  double result = s;
  double result_d2 = d2_at(s);
  if (d2_at(lo) <= result_d2) {
    result = lo;
    result_d2 = d2_at(lo);
  }
  if (d2_at(hi) < result_d2) {
    result = hi;
  }
  return std::clamp(result, 0.0, 1.0);
}

double ForceProfile::value(double s) const {
  if (s <= 0.0) return f_start;
  if (s >= 1.0) return 0.0;
  if (s < ramp_up_end) {
    return f_start + (f_max - f_start) * (s / ramp_up_end);
  }
  if (s <= ramp_down_start) {
    return f_max;
  }
  return f_max * ((1.0 - s) / (1.0 - ramp_down_start));
}

void ForceProfile::validate() const {
  if (!(f_start > 0.0)) throw ConfigError("force profile must start strictly positive");
  if (!(f_max >= f_start)) throw ConfigError("force profile plateau must be >= its start value");
  if (!(ramp_up_end >= 0.0 && ramp_up_end <= ramp_down_start && ramp_down_start < 1.0)) {
    throw ConfigError("force profile requires 0 <= ramp_up_end <= ramp_down_start < 1");
  }
}

Vec3 Maneuver::desired_force(double s) const {
  return path.tangent(s) * profile.value(s) + Vec3{0.0, 0.0, fz_des};
}

GuidanceRefs Maneuver::refs_at(double s, const CableParams& cable) const {
  return make_guidance_refs(path.evaluate(s), desired_force(s), cable);
}

ManeuverCommand maneuver_controller(const SystemState& state, const Maneuver& maneuver,
                                    const GuidanceParams& gains, const CableParams& cable) {
  ManeuverCommand cmd;
  cmd.s_star = maneuver.path.project(state.human_pos);
  cmd.refs = maneuver.refs_at(cmd.s_star, cable);
  cmd.u_a = guidance_input(state.robot_pos, cmd.refs, gains);
  return cmd;
}

double path_error(const std::vector<Vec3>& human_positions, const ParametricPath& path,
                  double s) {
  if (human_positions.empty()) {
    throw EmptyTrajectoryError();
  }
  const Vec3 anchor = path.evaluate(s);
  const Vec3 t = path.tangent(s);
  const Vec3 n = unit_z().cross(t);  // positive to the left of travel

  // The error at s is read from the trajectory sample lying on (well, nearest
  // to) the normal plane of the curve at s; the tangential offset measures
  // that distance, and the earliest minimizer wins.
  std::size_t best = 0;
  double best_offset = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < human_positions.size(); ++i) {
    const double offset = std::abs((human_positions[i] - anchor).dot(t));
    if (offset < best_offset) {
      best_offset = offset;
      best = i;
    }
  }
  return (human_positions[best] - anchor).dot(n);
}

std::vector<double> error_curve(const std::vector<Vec3>& human_positions,
                                const ParametricPath& path, const std::vector<double>& s_grid) {
  std::vector<double> curve;
  curve.reserve(s_grid.size());
  for (const double s : s_grid) {
    curve.push_back(path_error(human_positions, path, s));
  }
  return curve;
}

PathErrorReport error_stats(const std::vector<std::vector<double>>& curves,
                            const std::vector<double>& s_grid) {
  if (curves.size() < 2) {
    throw InsufficientRunsError(curves.size());
  }
  for (const auto& c : curves) {
    if (c.size() != s_grid.size()) {
      throw std::invalid_argument("error curves must share the s-grid");
    }
  }
  PathErrorReport report;
  report.s_grid = s_grid;
  report.runs = curves;
  const std::size_t points = s_grid.size();
  const auto n = static_cast<double>(curves.size());
  report.mean.resize(points);
  report.std_dev.resize(points);
  report.variance.resize(points);
  for (std::size_t j = 0; j < points; ++j) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c[j];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& c : curves) {
      const double d = c[j] - mean;
      ss += d * d;
    }
    report.mean[j] = mean;
    report.variance[j] = ss / (n - 1.0);
    report.std_dev[j] = std::sqrt(report.variance[j]);
    report.max_abs_mean = std::max(report.max_abs_mean, std::abs(mean));
    for (const auto& c : curves) {
      report.max_abs_any = std::max(report.max_abs_any, std::abs(c[j]));
    }
  }
  return report;
}

}  // namespace tether
