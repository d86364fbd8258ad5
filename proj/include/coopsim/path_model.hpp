#pragma once

// Geometric and temporal path types, plus the trajectory -> future path
// conversion that every other module builds on.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace coopsim {

using VehicleId = std::uint32_t;

// Segments whose speed is at or below this terminate a future path.
inline constexpr double kStoppedSpeed = 0.01;
// Transmission limits for a single path message.
inline constexpr std::size_t kMaxWirePoints = 120;
inline constexpr double kMinPointSpacing = 0.1;

struct Point2D {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2D&, const Point2D&) = default;
};

double distance(Point2D a, Point2D b);
bool is_finite(Point2D p);

struct VehicleShape {
  double length = 4.5;
  double width = 1.8;
  friend bool operator==(const VehicleShape&, const VehicleShape&) = default;
  void validate() const;
};

struct TrajectoryPoint {
  Point2D pos;
  double speed = 0.0;
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

struct FuturePathPoint {
  Point2D pos;
  double t = 0.0;  // absolute simulation time [s]
  friend bool operator==(const FuturePathPoint&, const FuturePathPoint&) = default;
};

struct FuturePath {
  VehicleId vehicle_id = 0;
  Point2D current_pos;
  double current_speed = 0.0;
  VehicleShape shape;
  std::vector<FuturePathPoint> points;
  friend bool operator==(const FuturePath&, const FuturePath&) = default;
};

// Sender state copied into a generated future path.
struct PathMeta {
  VehicleId vehicle_id = 0;
  Point2D current_pos;
  double current_speed = 0.0;
  VehicleShape shape;
};

// Index of the trajectory point closest to `pos`; ties go to the lower index.
// Throws InvalidArgument on an empty trajectory.
std::size_t nearest_point_index(const Trajectory& traj, Point2D pos);

// Converts a trajectory into passing times assuming constant speed between
// consecutive points. Point 0 of the result is traj[start_index] at t0; each
// following point n adds |x_n - x_{n-1}| / v_n. The output stops before the
// first segment whose arrival speed is <= kStoppedSpeed.
FuturePath to_future_path(const Trajectory& traj, std::size_t start_index, double t0,
                          const PathMeta& meta);

// Keeps the points with t <= now + horizon (order preserved).
FuturePath truncate_horizon(const FuturePath& fp, double now, double horizon);

// Inverse of to_future_path up to the first point: recovers per-point speeds
// from the spacing/time of consecutive points. Point 0 takes the speed of
// segment 1 (or current_speed for single-point paths).
Trajectory implied_trajectory(const FuturePath& fp);

// Caps speeds from start_index on at what a vehicle moving at v0 at that
// point can reach under acceleration a_max. Earlier points are unchanged.
Trajectory limit_acceleration(const Trajectory& traj, std::size_t start_index, double v0, double a_max);

// Resamples a polyline at arc-length steps of `spacing`. Consecutive gaps are
// in [spacing, 2*spacing) and both endpoints are kept. A zero-length route
// collapses to one point.
std::vector<Point2D> resample_polyline(std::span<const Point2D> route, double spacing);

// Cumulative arc length along the trajectory points, starting at 0.
std::vector<double> arc_lengths(const Trajectory& traj);

// A polyline with arc-length parametrisation.
class Route {
 public:
  Route() = default;
  explicit Route(std::vector<Point2D> points);

  const std::vector<Point2D>& points() const { return points_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  // Point at arc position s (clamped to [0, length]).
  Point2D point_at(double s) const;
  // Arc position of the orthogonal projection of p (closest point on route).
  double project(Point2D p) const;
  // Sub-polyline covering [s0, s1], endpoints included.
  std::vector<Point2D> slice(double s0, double s1) const;

 private:
  std::vector<Point2D> points_;
  std::vector<double> cumulative_;
};

}  // namespace coopsim
