// Copyright 2026 The BladeQC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BLADEQC_GEOMETRY_HPP_
#define BLADEQC_GEOMETRY_HPP_

// Exact polygon geometry in the native image frame (x to the right, y down,
// units of pixels). "Counter-clockwise" throughout means a positive shoelace
// sum over the raw coordinates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bladeqc/error.hpp"

namespace bladeqc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  friend auto operator<=>(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Twice the signed area of triangle (a, b, c); positive for a CCW turn.
inline double orient(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

namespace detail {

inline double signed_area(std::span<const Point2> v) {
  // Shoelace relative to the first vertex keeps large native-frame
  // coordinates from eating the mantissa.
  const Point2 o = v.front();
  double twice = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    twice += cross(v[i] - o, v[i + 1] - o);
  }
  return 0.5 * twice;
}

inline bool on_segment(Point2 p, Point2 a, Point2 b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

/// Closed-segment intersection test, touching counts.
inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = sign(orient(a, b, c));
  const int o2 = sign(orient(a, b, d));
  const int o3 = sign(orient(c, d, a));
  const int o4 = sign(orient(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(c, a, b)) return true;
  if (o2 == 0 && on_segment(d, a, b)) return true;
  if (o3 == 0 && on_segment(a, c, d)) return true;
  if (o4 == 0 && on_segment(b, c, d)) return true;
  return false;
}

}  // namespace detail

/// Simple polygon, stored counter-clockwise. Construction validates and
/// canonicalizes orientation; every instance is therefore a valid region.
class Polygon {
 public:
  explicit Polygon(std::vector<Point2> vertices) : v_(std::move(vertices)) {
    validate_and_orient();
  }

  /// Parses the flat wire form [x0, y0, x1, y1, ...].
  static Polygon from_flat(std::span<const double> coords) {
    if (coords.size() % 2 != 0) {
      fail(ErrorCode::validation, "polygon coordinate list has odd length");
    }
    std::vector<Point2> pts;
    pts.reserve(coords.size() / 2);
    for (std::size_t i = 0; i < coords.size(); i += 2) {
      pts.push_back({coords[i], coords[i + 1]});
    }
    return Polygon(std::move(pts));
  }

  const std::vector<Point2>& vertices() const { return v_; }
  std::size_t size() const { return v_.size(); }
  const Point2& operator[](std::size_t i) const { return v_[i]; }

  std::vector<double> flat() const {
    std::vector<double> out;
    out.reserve(v_.size() * 2);
    for (const auto& p : v_) {
      out.push_back(p.x);
      out.push_back(p.y);
    }
    return out;
  }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  void validate_and_orient() {
    const std::size_t n = v_.size();
    if (n < 3) fail(ErrorCode::validation, "polygon needs at least 3 vertices");
    for (const auto& p : v_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        fail(ErrorCode::validation, "polygon has a non-finite coordinate");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (v_[i] == v_[(i + 1) % n]) {
        fail(ErrorCode::validation, "polygon has duplicate consecutive vertices",
             "vertex " + std::to_string(i));
      }
    }
    const double a = detail::signed_area(v_);
    if (a == 0.0) fail(ErrorCode::validation, "polygon has zero area");
    check_simple();
    if (a < 0.0) std::reverse(v_.begin(), v_.end());
  }

  void check_simple() const {
    const std::size_t n = v_.size();
    // Adjacent edges may only share their common vertex: reject spikes that
    // fold back along the previous edge.
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = v_[(i + n - 1) % n];
      const Point2 b = v_[i];
      const Point2 c = v_[(i + 1) % n];
      if (orient(a, b, c) == 0.0 && dot(b - a, c - b) < 0.0) {
        fail(ErrorCode::validation, "polygon is self-intersecting",
             "edge folds back at vertex " + std::to_string(i));
      }
    }
    if (n == 3) return;
    struct Box {
      double x0, y0, x1, y1;
    };
    std::vector<Box> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = v_[i];
      const Point2 b = v_[(i + 1) % n];
      boxes[i] = {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x),
                  std::max(a.y, b.y)};
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        const Box& p = boxes[i];
        const Box& q = boxes[j];
        if (p.x1 < q.x0 || q.x1 < p.x0 || p.y1 < q.y0 || q.y1 < p.y0) continue;
        if (detail::segments_intersect(v_[i], v_[(i + 1) % n], v_[j],
                                       v_[(j + 1) % n])) {
          fail(ErrorCode::validation, "polygon is self-intersecting",
               "edges " + std::to_string(i) + " and " + std::to_string(j));
        }
      }
    }
  }

  std::vector<Point2> v_;
};

struct AxisAlignedBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool contains(Point2 p) const {
    return x_min <= p.x && p.x <= x_max && y_min <= p.y && p.y <= y_max;
  }
  friend bool operator==(const AxisAlignedBox&, const AxisAlignedBox&) = default;
};

/// Unsigned area in px^2.
inline double area(const Polygon& p) { return std::abs(detail::signed_area(p.vertices())); }

inline AxisAlignedBox aabb(std::span<const Point2> pts) {
  AxisAlignedBox b{pts.front().x, pts.front().y, pts.front().x, pts.front().y};
  for (const auto& q : pts) {
    b.x_min = std::min(b.x_min, q.x);
    b.y_min = std::min(b.y_min, q.y);
    b.x_max = std::max(b.x_max, q.x);
    b.y_max = std::max(b.y_max, q.y);
  }
  return b;
}

inline AxisAlignedBox aabb(const Polygon& p) { return aabb(std::span(p.vertices())); }

/// Andrew's monotone chain. Collinear boundary points are dropped, so the
/// result is strictly convex and starts at the lexicographically smallest
/// point regardless of input order.
inline Polygon convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    fail(ErrorCode::validation, "degenerate point set: no 2D hull");
  }
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point2 p = pts[i];
    while (k >= lower && orient(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    fail(ErrorCode::validation, "degenerate point set: no 2D hull",
         "all points are collinear");
  }
  return Polygon(std::move(hull));
}

inline Polygon convex_hull(const Polygon& p) { return convex_hull(std::span(p.vertices())); }

/// True when every turn is left or straight (polygons are stored CCW).
inline bool is_convex(const Polygon& p) {
  const auto& v = p.vertices();
  const std::size_t n = v.size();
  const AxisAlignedBox box = aabb(p);
  const double scale = std::max(box.width(), box.height());
  const double tol = -1e-12 * scale * scale;
  for (std::size_t i = 0; i < n; ++i) {
    if (orient(v[i], v[(i + 1) % n], v[(i + 2) % n]) < tol) return false;
  }
  return true;
}

/// Even-odd point test; points on the boundary count as inside.
inline bool contains(const Polygon& poly, Point2 p) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2 a = v[j];
    const Point2 b = v[i];
    if (orient(a, b, p) == 0.0 && detail::on_segment(p, a, b)) return true;
    if ((a.y <= p.y) != (b.y <= p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

/// Rectangle with arbitrary orientation. Corners are CCW and start at the
/// corner whose outgoing edge points into [0, 90) degrees; that edge defines
/// width and angle, the following one height.
class RotatedRect {
 public:
  static constexpr double kTolerance = 1e-9;

  static RotatedRect from_corners(std::array<Point2, 4> c) {
    for (const auto& p : c) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        fail(ErrorCode::validation, "rectangle has a non-finite corner");
      }
    }
    if (detail::signed_area(c) < 0.0) std::reverse(c.begin(), c.end());

    std::array<Point2, 4> e;
    double longest = 0.0;
    for (int i = 0; i < 4; ++i) {
      e[i] = c[(i + 1) % 4] - c[i];
      longest = std::max(longest, norm(e[i]));
    }
    if (longest == 0.0) fail(ErrorCode::validation, "rectangle has zero area");
    for (int i = 0; i < 2; ++i) {
      const Point2 a = e[i];
      const Point2 b = e[i + 2];
      const double la = norm(a);
      const double lb = norm(b);
      if (std::abs(la - lb) > kTolerance * longest) {
        fail(ErrorCode::validation, "rectangle opposite sides differ in length");
      }
      if (std::abs(cross(a, b)) > kTolerance * la * lb || dot(a, b) >= 0.0) {
        fail(ErrorCode::validation, "rectangle opposite sides are not parallel");
      }
    }
    if (std::abs(dot(e[0], e[1])) > kTolerance * norm(e[0]) * norm(e[1])) {
      fail(ErrorCode::validation, "rectangle corners are not right angles");
    }
    if (cross(e[0], e[1]) <= 0.0) fail(ErrorCode::validation, "rectangle has zero area");

    // Pick the start corner whose outgoing edge lies in [0, 90) degrees, or
    // the nearest one when rounding pushed every edge just outside.
    int start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) {
      const double deg = std::atan2(e[i].y, e[i].x) * 180.0 / std::numbers::pi;
      const double dist = deg < 0.0 ? -deg : (deg >= 90.0 ? deg - 90.0 + 1e-300 : 0.0);
      if (dist < best) {
        best = dist;
        start = i;
      }
    }
    RotatedRect r;
    for (int i = 0; i < 4; ++i) r.corners_[i] = c[(start + i) % 4];
    const Point2 w = r.corners_[1] - r.corners_[0];
    const Point2 h = r.corners_[3] - r.corners_[0];
    r.width_ = norm(w);
    r.height_ = norm(h);
    double deg = std::atan2(w.y, w.x) * 180.0 / std::numbers::pi;
    if (deg <= 0.0) deg = 0.0;
    if (deg >= 90.0) deg = std::nextafter(90.0, 0.0);
    r.angle_ = deg;
    r.center_ = 0.5 * (r.corners_[0] + r.corners_[2]);
    return r;
  }

  const std::array<Point2, 4>& corners() const { return corners_; }
  Point2 center() const { return center_; }
  double width() const { return width_; }
  double height() const { return height_; }
  /// Degrees in [0, 90).
  double angle_degrees() const { return angle_; }
  double area() const { return width_ * height_; }

  Polygon to_polygon() const {
    return Polygon(std::vector<Point2>(corners_.begin(), corners_.end()));
  }

  /// Inside-or-on test with an absolute tolerance in pixels.
  bool contains(Point2 p, double tol) const {
    const Point2 u = corners_[1] - corners_[0];
    const Point2 v = corners_[3] - corners_[0];
    const Point2 d = p - corners_[0];
    const double su = dot(d, u) / width_;
    const double sv = dot(d, v) / height_;
    return su >= -tol && su <= width_ + tol && sv >= -tol && sv <= height_ + tol;
  }

  friend bool operator==(const RotatedRect& a, const RotatedRect& b) {
    return a.corners_ == b.corners_;
  }

 private:
  RotatedRect() = default;

  std::array<Point2, 4> corners_{};
  Point2 center_{};
  double width_ = 0.0;
  double height_ = 0.0;
  double angle_ = 0.0;
};

namespace detail {

// Rectangle aligned with unit direction u enclosing pts.
inline RotatedRect rect_along(Point2 u, std::span<const Point2> pts) {
  // Rotate by quarter turns into the first quadrant; exact for axis edges.
  for (int i = 0; i < 4 && !(u.x > 0.0 && u.y >= 0.0); ++i) u = {-u.y, u.x};
  const Point2 v{-u.y, u.x};
  double u0 = std::numeric_limits<double>::infinity(), u1 = -u0;
  double v0 = u0, v1 = -u0;
  for (const auto& p : pts) {
    const double pu = dot(p, u);
    const double pv = dot(p, v);
    u0 = std::min(u0, pu);
    u1 = std::max(u1, pu);
    v0 = std::min(v0, pv);
    v1 = std::max(v1, pv);
  }
  return RotatedRect::from_corners({u0 * u + v0 * v, u1 * u + v0 * v,
                                    u1 * u + v1 * v, u0 * u + v1 * v});
}

}  // namespace detail

/// Minimum-area enclosing rectangle of a convex polygon, by rotating
/// calipers: one side of the optimum is collinear with a hull edge, and the
/// three other support points advance monotonically as the edge rotates.
inline RotatedRect min_area_rect_of_hull(const Polygon& hull) {
  const auto& h = hull.vertices();
  const std::size_t n = h.size();
  auto at = [&](std::size_t i) { return h[i % n]; };

  std::size_t best_edge = 0;
  double best_area = std::numeric_limits<double>::infinity();
  std::size_t right = 0, top = 0, left = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = at(i + 1) - at(i);
    const double len = norm(e);
    const Point2 u{e.x / len, e.y / len};
    const Point2 v{-u.y, u.x};
    const Point2 o = at(i);
    auto pu = [&](std::size_t k) { return dot(at(k) - o, u); };
    auto pv = [&](std::size_t k) { return dot(at(k) - o, v); };
    if (i == 0) {
      right = top = left = 1;
    }
    if (right < i + 1) right = i + 1;
    while (right < i + n && pu(right + 1) >= pu(right)) ++right;
    if (top < right) top = right;
    while (top < right + n && pv(top + 1) >= pv(top)) ++top;
    if (left < top) left = top;
    while (left < top + n && pu(left + 1) <= pu(left)) ++left;
    const double a = (pu(right) - pu(left)) * pv(top);
    if (a < best_area) {
      best_area = a;
      best_edge = i;
    }
  }
  const Point2 e = at(best_edge + 1) - at(best_edge);
  const double len = norm(e);
  return detail::rect_along({e.x / len, e.y / len}, h);
}

inline RotatedRect min_area_rect(std::span<const Point2> points) {
  return min_area_rect_of_hull(convex_hull(points));
}

inline RotatedRect min_area_rect(const Polygon& p) {
  return min_area_rect_of_hull(convex_hull(p));
}

/// Exact area of the intersection of two convex polygons (Sutherland-Hodgman
/// clipping of a against each edge of b).
inline double convex_intersection_area(const Polygon& a, const Polygon& b) {
  if (!is_convex(a) || !is_convex(b)) {
    fail(ErrorCode::validation, "convex_intersection_area needs convex polygons");
  }
  std::vector<Point2> out(a.vertices());
  std::vector<Point2> in;
  const auto& clip = b.vertices();
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Point2 c0 = clip[i];
    const Point2 c1 = clip[(i + 1) % clip.size()];
    in.swap(out);
    out.clear();
    for (std::size_t k = 0; k < in.size(); ++k) {
      const Point2 p = in[k];
      const Point2 q = in[(k + 1) % in.size()];
      const double dp = orient(c0, c1, p);
      const double dq = orient(c0, c1, q);
      if (dp >= 0.0) out.push_back(p);
      if ((dp >= 0.0) != (dq >= 0.0)) {
        const double t = dp / (dp - dq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  if (out.size() < 3) return 0.0;
  return std::abs(detail::signed_area(out));
}

}  // namespace bladeqc

#endif  // BLADEQC_GEOMETRY_HPP_
