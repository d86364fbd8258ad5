#include "coopsim/path_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coopsim/error.hpp"

namespace coopsim {

double distance(Point2D a, Point2D b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool is_finite(Point2D p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void VehicleShape::validate() const {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw InvalidArgument("vehicle shape dimensions must be positive");
  }
}

std::size_t nearest_point_index(const Trajectory& traj, Point2D pos) {
  if (traj.empty()) throw InvalidArgument("nearest_point_index: empty trajectory");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const double d = distance(traj.points[i].pos, pos);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

FuturePath to_future_path(const Trajectory& traj, std::size_t start_index, double t0,
                          const PathMeta& meta) {
  FuturePath fp;
  fp.vehicle_id = meta.vehicle_id;
  fp.current_pos = meta.current_pos;
  fp.current_speed = meta.current_speed;
  fp.shape = meta.shape;
  if (start_index >= traj.points.size()) {
    if (traj.empty() && start_index == 0) return fp;
    throw InvalidArgument("to_future_path: start index out of range");
  }
  fp.points.reserve(traj.points.size() - start_index);
  fp.points.push_back({traj.points[start_index].pos, t0});
  double t = t0;
  for (std::size_t k = start_index + 1; k < traj.points.size(); ++k) {
    const double v = traj.points[k].speed;
    if (!(v > kStoppedSpeed)) break;
    t += distance(traj.points[k - 1].pos, traj.points[k].pos) / v;
    fp.points.push_back({traj.points[k].pos, t});
  }
  return fp;
}

FuturePath truncate_horizon(const FuturePath& fp, double now, double horizon) {
  if (horizon < 0.0) throw InvalidArgument("truncate_horizon: negative horizon");
  FuturePath out = fp;
  const double limit = now + horizon;
  auto it = std::find_if(out.points.begin(), out.points.end(),
                         [limit](const FuturePathPoint& p) { return p.t > limit; });
  out.points.erase(it, out.points.end());
  return out;
}

Trajectory implied_trajectory(const FuturePath& fp) {
  Trajectory traj;
  traj.points.reserve(fp.points.size());
  for (std::size_t i = 0; i < fp.points.size(); ++i) {
    double v = fp.current_speed;
    if (i > 0) {
      const double dt = fp.points[i].t - fp.points[i - 1].t;
      const double d = distance(fp.points[i].pos, fp.points[i - 1].pos);
      v = dt > 0.0 ? d / dt : 0.0;
    }
    traj.points.push_back({fp.points[i].pos, v});
  }
  if (traj.points.size() > 1) traj.points[0].speed = traj.points[1].speed;
  return traj;
}

Trajectory limit_acceleration(const Trajectory& traj, std::size_t start_index, double v0, double a_max) {
  if (!(v0 >= 0.0) || !(a_max > 0.0)) throw InvalidArgument("limit_acceleration: invalid v0 or a_max");
  Trajectory out = traj;
  if (start_index >= out.points.size()) return out;
  double prev = std::min(out.points[start_index].speed, v0);
  out.points[start_index].speed = prev;
  for (std::size_t i = start_index + 1; i < out.points.size(); ++i) {
    const double d = distance(out.points[i - 1].pos, out.points[i].pos);
    prev = std::min(out.points[i].speed, std::sqrt(prev * prev + 2.0 * a_max * d));
    out.points[i].speed = prev;
  }
  return out;
}

std::vector<double> arc_lengths(const Trajectory& traj) {
  std::vector<double> s(traj.points.size(), 0.0);
  for (std::size_t i = 1; i < traj.points.size(); ++i) {
    s[i] = s[i - 1] + distance(traj.points[i - 1].pos, traj.points[i].pos);
  }
  return s;
}

std::vector<Point2D> resample_polyline(std::span<const Point2D> route, double spacing) {
  if (!(spacing >= kMinPointSpacing)) {
    throw InvalidArgument("resample_polyline: spacing below minimum point spacing");
  }
  if (route.empty()) throw InvalidArgument("resample_polyline: empty route");
  const Route r(std::vector<Point2D>(route.begin(), route.end()));
  const double total = r.length();
  if (total <= 0.0) return {route.front()};

  // n full intervals; the remainder is merged into the final gap.
  const auto intervals = static_cast<std::size_t>(std::floor(total / spacing + 1e-9));
  std::vector<Point2D> out;
  out.reserve(intervals + 2);
  out.push_back(route.front());
  for (std::size_t k = 1; k < intervals; ++k) {
    out.push_back(r.point_at(static_cast<double>(k) * spacing));
  }
  out.push_back(route.back());
  return out;
}

Route::Route(std::vector<Point2D> points) : points_(std::move(points)) {
  cumulative_.reserve(points_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!is_finite(points_[i])) throw InvalidArgument("route contains non-finite coordinates");
    if (i > 0) acc += distance(points_[i - 1], points_[i]);
    cumulative_.push_back(acc);
  }
}

Point2D Route::point_at(double s) const {
  if (points_.empty()) throw InvalidArgument("point_at on empty route");
  if (s <= 0.0) return points_.front();
  if (s >= length()) return points_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const auto i = static_cast<std::size_t>(it - cumulative_.begin());  // i >= 1
  const double seg = cumulative_[i] - cumulative_[i - 1];
  const double f = seg > 0.0 ? (s - cumulative_[i - 1]) / seg : 0.0;
  const Point2D a = points_[i - 1];
  const Point2D b = points_[i];
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

double Route::project(Point2D p) const {
  if (points_.empty()) throw InvalidArgument("project on empty route");
  if (points_.size() == 1) return 0.0;
  double best_s = 0.0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const Point2D a = points_[i - 1];
    const Point2D b = points_[i];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double f = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    f = std::clamp(f, 0.0, 1.0);
    const Point2D q{a.x + f * dx, a.y + f * dy};
    const double d = distance(p, q);
    if (d < best_d) {
      best_d = d;
      best_s = cumulative_[i - 1] + f * (cumulative_[i] - cumulative_[i - 1]);
    }
  }
  return best_s;
}

std::vector<Point2D> Route::slice(double s0, double s1) const {
  s0 = std::clamp(s0, 0.0, length());
  s1 = std::clamp(s1, s0, length());
  std::vector<Point2D> out;
  out.push_back(point_at(s0));
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (cumulative_[i] > s0 && cumulative_[i] < s1) out.push_back(points_[i]);
  }
  out.push_back(point_at(s1));
  return out;
}

}  // namespace coopsim
