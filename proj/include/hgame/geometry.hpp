#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hgame/types.hpp"

namespace hgame {

// Arc-length parameterized view over a polyline. Owns a copy of the points.
class Polyline {
 public:
  Polyline() = default;

  explicit Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
    cumulative_.resize(points_.size(), 0.0);
    for (std::size_t k = 1; k < points_.size(); ++k) {
      cumulative_[k] = cumulative_[k - 1] + distance(points_[k - 1], points_[k]);
    }
  }

  std::span<const Vec2> points() const { return points_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  bool empty() const { return points_.size() < 2; }

  // Arc length of the closest point on the polyline.
  double project(Vec2 p) const {
    double best_s = 0.0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < points_.size(); ++k) {
      const Vec2 a = points_[k - 1];
      const Vec2 ab = points_[k] - a;
      const double len2 = dot(ab, ab);
      double u = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
      u = std::clamp(u, 0.0, 1.0);
      const Vec2 q = a + u * ab;
      const Vec2 d = p - q;
      const double d2 = dot(d, d);
      if (d2 < best_d2) {
        best_d2 = d2;
        best_s = cumulative_[k - 1] + u * (cumulative_[k] - cumulative_[k - 1]);
      }
    }
    return best_s;
  }

  // Signed lateral offset of p (positive to the left of travel direction).
  double lateral_offset(Vec2 p) const {
    const double s = project(p);
    const Vec2 q = point_at(s);
    const Vec2 t = tangent_at(s);
    return cross(t, p - q);
  }

  Vec2 point_at(double s) const {
    const std::size_t k = segment_index(s);
    const double seg = cumulative_[k + 1] - cumulative_[k];
    const double u = seg > 0.0 ? std::clamp((s - cumulative_[k]) / seg, 0.0, 1.0) : 0.0;
    return points_[k] + u * (points_[k + 1] - points_[k]);
  }

  // Unit tangent of the segment containing s.
  Vec2 tangent_at(double s) const {
    const std::size_t k = segment_index(s);
    const Vec2 d = points_[k + 1] - points_[k];
    const double n = norm(d);
    return {d.x / n, d.y / n};
  }

  Vec2 left_normal_at(double s) const {
    const Vec2 t = tangent_at(s);
    return {-t.y, t.x};
  }

  // Portion of the polyline between arc lengths [s0, s1] (clamped to the line).
  Polyline slice(double s0, double s1) const {
    s0 = std::clamp(s0, 0.0, length());
    s1 = std::clamp(s1, s0, length());
    std::vector<Vec2> out;
    out.push_back(point_at(s0));
    for (std::size_t k = 1; k + 1 < points_.size(); ++k) {
      if (cumulative_[k] > s0 && cumulative_[k] < s1) out.push_back(points_[k]);
    }
    const Vec2 end = point_at(s1);
    if (!(end == out.back())) out.push_back(end);
    return Polyline(std::move(out));
  }

  // Smallest arc length along *this at which it meets other, if any.
  std::optional<double> first_intersection(const Polyline& other) const {
    std::optional<double> best;
    for (std::size_t k = 1; k < points_.size(); ++k) {
      for (std::size_t m = 1; m < other.points_.size(); ++m) {
        const auto u = segment_intersection(points_[k - 1], points_[k], other.points_[m - 1],
                                            other.points_[m]);
        if (u) {
          const double s = cumulative_[k - 1] + *u * (cumulative_[k] - cumulative_[k - 1]);
          if (!best || s < *best) best = s;
        }
      }
      if (best) return best;
    }
    return best;
  }

  // Parameter along [p0,p1] of the first contact with [q0,q1]; collinear overlaps count.
  static std::optional<double> segment_intersection(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
    constexpr double kEps = 1e-9;
    const Vec2 r = p1 - p0;
    const Vec2 s = q1 - q0;
    const double denom = cross(r, s);
    const Vec2 qp = q0 - p0;
    if (std::abs(denom) < kEps * norm(r) * norm(s)) {
      if (std::abs(cross(qp, r)) > kEps * std::max(1.0, norm(r))) return std::nullopt;
      const double rr = dot(r, r);
      if (rr == 0.0) return std::nullopt;
      double t0 = dot(qp, r) / rr;
      double t1 = t0 + dot(s, r) / rr;
      if (t0 > t1) std::swap(t0, t1);
      if (t1 < -kEps || t0 > 1.0 + kEps) return std::nullopt;
      return std::clamp(t0, 0.0, 1.0);
    }
    const double t = cross(qp, s) / denom;
    const double u = cross(qp, r) / denom;
    if (t < -kEps || t > 1.0 + kEps || u < -kEps || u > 1.0 + kEps) return std::nullopt;
    return std::clamp(t, 0.0, 1.0);
  }

 private:
  std::size_t segment_index(double s) const {
    if (points_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "polyline needs 2 points");
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t k = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    return std::min(k, points_.size() - 2);
  }

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

inline double wrap_angle(double a) {
  return std::remainder(a, 2.0 * M_PI);
}

}  // namespace hgame
