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

#ifndef BLADEQC_TESTS_ORACLES_HPP_
#define BLADEQC_TESTS_ORACLES_HPP_

// Brute-force reference implementations. Nothing here calls into the
// library's algorithms; only plain data types are shared.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bladeqc/geometry.hpp"
#include "bladeqc/raster.hpp"
#include "bladeqc/workflow.hpp"

namespace oracle {

using bladeqc::Point2;
using Pts = std::vector<Point2>;

inline double cross3(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

inline double shoelace(const Pts& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return std::abs(s) / 2.0;
}

// -- point in polygon, pixel-center rasterization ---------------------------

inline bool on_edge(const Pts& poly, double x, double y) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
    if (cross3(a, b, {x, y}) == 0.0 && x >= std::min(a.x, b.x) && x <= std::max(a.x, b.x) &&
        y >= std::min(a.y, b.y) && y <= std::max(a.y, b.y)) {
      return true;
    }
  }
  return false;
}

/// Crossing number; boundary points count as inside.
inline bool inside(const Pts& poly, double x, double y) {
  if (on_edge(poly, x, y)) return true;
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2 a = poly[i], b = poly[j];
    if ((a.y > y) != (b.y > y)) {
      const double xi = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xi) in = !in;
    }
  }
  return in;
}

inline bladeqc::BitMask rasterize(const Pts& poly, int w, int h) {
  bladeqc::BitMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (inside(poly, x + 0.5, y + 0.5)) m.set(x, y);
    }
  }
  return m;
}

// -- convex intersection ----------------------------------------------------

/// Jarvis march; returns the hull in CCW order (y-down shoelace positive).
inline Pts gift_wrap(Pts pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](Point2 a, Point2 b) { return std::abs(a.x - b.x) < 1e-7 && std::abs(a.y - b.y) < 1e-7; }),
            pts.end());
  if (pts.size() < 3) return {};
  Pts hull;
  std::size_t start = 0, cur = 0;
  do {
    hull.push_back(pts[cur]);
    std::size_t next = (cur + 1) % pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double c = cross3(pts[cur], pts[next], pts[i]);
      const auto d = [&](std::size_t k) { return std::hypot(pts[k].x - pts[cur].x, pts[k].y - pts[cur].y); };
      if (c < 0 || (c == 0 && d(i) > d(next))) next = i;
    }
    cur = next;
    if (hull.size() > pts.size()) break;
  } while (cur != start);
  return hull;
}

inline bool inside_convex(const Pts& poly, Point2 p) {
  // poly is either orientation; p is inside if it is never strictly on
  // both sides of edges.
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const double c = cross3(poly[i], poly[(i + 1) % poly.size()], p);
    if (c > 1e-9) pos = true;
    if (c < -1e-9) neg = true;
  }
  return !(pos && neg);
}

/// Area of the intersection of two convex polygons as the hull of: vertices
/// of each inside the other, plus all proper edge crossings.
inline double convex_intersection_area(const Pts& a, const Pts& b) {
  Pts cand;
  for (const auto& p : a) {
    if (inside_convex(b, p)) cand.push_back(p);
  }
  for (const auto& p : b) {
    if (inside_convex(a, p)) cand.push_back(p);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Point2 p = a[i], r = a[(i + 1) % a.size()];
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Point2 q = b[j], s = b[(j + 1) % b.size()];
      const double dx1 = r.x - p.x, dy1 = r.y - p.y, dx2 = s.x - q.x, dy2 = s.y - q.y;
      const double den = dx1 * dy2 - dy1 * dx2;
      if (den == 0.0) continue;
      const double t = ((q.x - p.x) * dy2 - (q.y - p.y) * dx2) / den;
      const double u = ((q.x - p.x) * dy1 - (q.y - p.y) * dx1) / den;
      if (t >= 0 && t <= 1 && u >= 0 && u <= 1) cand.push_back({p.x + t * dx1, p.y + t * dy1});
    }
  }
  const Pts hull = gift_wrap(cand);
  return hull.empty() ? 0.0 : shoelace(hull);
}

// -- minimum-area rectangle by angle sweep ----------------------------------

inline double rect_area_at(const Pts& pts, double theta_rad) {
  const double c = std::cos(theta_rad), s = std::sin(theta_rad);
  double u0 = 1e300, u1 = -1e300, v0 = 1e300, v1 = -1e300;
  for (const auto& p : pts) {
    const double u = p.x * c + p.y * s, v = -p.x * s + p.y * c;
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
  }
  return (u1 - u0) * (v1 - v0);
}

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

/// Exhaustive sweep over [0, 90) degrees at `step` degrees.
inline double sweep_min_area(const Pts& pts, double step = 0.05) {
  double best = 1e300;
  const int n = static_cast<int>(std::lround(90.0 / step));
  for (int i = 0; i < n; ++i) best = std::min(best, rect_area_at(pts, deg(i * step)));
  return best;
}

/// The sweep, refined: the best coarse samples are re-swept at 1/1000 of
/// the step and then polished by golden-section search.
inline double refined_min_area(const Pts& pts, double step = 0.05, int keep = 8) {
  const int n = static_cast<int>(std::lround(90.0 / step));
  std::vector<std::pair<double, double>> samples;  // (area, degrees)
  for (int i = 0; i < n; ++i) samples.emplace_back(rect_area_at(pts, deg(i * step)), i * step);
  std::partial_sort(samples.begin(), samples.begin() + std::min<int>(keep, n), samples.end());
  double best = samples.front().first;
  for (int k = 0; k < std::min<int>(keep, n); ++k) {
    const double centre = samples[k].second;
    const double fine = step / 1000.0;
    double arg = centre;
    double val = samples[k].first;
    for (int i = -1000; i <= 1000; ++i) {
      const double a = centre + i * fine;
      const double v = rect_area_at(pts, deg(a));
      if (v < val) {
        val = v;
        arg = a;
      }
    }
    double lo = arg - fine, hi = arg + fine;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
      const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      if (rect_area_at(pts, deg(m1)) < rect_area_at(pts, deg(m2))) {
        hi = m2;
      } else {
        lo = m1;
      }
    }
    val = std::min(val, rect_area_at(pts, deg((lo + hi) / 2.0)));
    best = std::min(best, val);
  }
  return best;
}

/// Every corner of every set pixel lies within `tol` of the inside of the
/// quadrilateral `quad` (given in order).
inline bool corners_inside(const bladeqc::BitMask& m, const std::array<Point2, 4>& quad, double tol,
                           double sx = 1.0, double sy = 1.0) {
  const Pts q(quad.begin(), quad.end());
  const double sign = (cross3(q[0], q[1], q[2]) >= 0) ? 1.0 : -1.0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.test(x, y)) continue;
      for (const auto& c : {Point2{double(x), double(y)}, Point2{x + 1.0, double(y)}, Point2{double(x), y + 1.0},
                            Point2{x + 1.0, y + 1.0}}) {
        const Point2 p{c.x * sx, c.y * sy};
        for (int e = 0; e < 4; ++e) {
          const Point2 a = q[e], b = q[(e + 1) % 4];
          const double len = std::hypot(b.x - a.x, b.y - a.y);
          if (sign * cross3(a, b, p) / len < -tol) return false;
        }
      }
    }
  }
  return true;
}

// -- connected components by flood fill -------------------------------------

struct Flood {
  int count = 0;
  std::vector<int> labels;  // row-major, 0 = background
};

inline Flood flood_fill(const bladeqc::BitMask& m) {
  const int w = m.width(), h = m.height();
  Flood f;
  f.labels.assign(std::size_t(w) * h, 0);
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!m.test(x0, y0) || f.labels[std::size_t(y0) * w + x0] != 0) continue;
      ++f.count;
      std::queue<std::pair<int, int>> q;
      q.emplace(x0, y0);
      f.labels[std::size_t(y0) * w + x0] = f.count;
      while (!q.empty()) {
        const auto [x, y] = q.front();
        q.pop();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !m.test(nx, ny)) continue;
            auto& l = f.labels[std::size_t(ny) * w + nx];
            if (l == 0) {
              l = f.count;
              q.emplace(nx, ny);
            }
          }
        }
      }
    }
  }
  return f;
}

// -- QC durations by direct accumulation ------------------------------------

struct StageTotals {
  std::int64_t qc1_ms = 0;
  std::int64_t qc2_ms = 0;
};

/// Walks an arbitrary interleaving of events and sums open->close spans
/// per image and stage.
inline std::map<std::string, StageTotals> accumulate(const std::vector<bladeqc::EventRecord>& events) {
  using bladeqc::Action;
  std::map<std::string, StageTotals> out;
  std::map<std::pair<std::string, int>, std::int64_t> open;
  for (const auto& e : events) {
    const std::string& id = e.image_id;
    switch (e.action) {
      case Action::qc1_open: open[{id, 1}] = e.timestamp_ms; break;
      case Action::qc2_open: open[{id, 2}] = e.timestamp_ms; break;
      case Action::qc1_close: out[id].qc1_ms += e.timestamp_ms - open.at({id, 1}); break;
      case Action::qc2_close: out[id].qc2_ms += e.timestamp_ms - open.at({id, 2}); break;
      default: break;
    }
  }
  return out;
}

// -- random inputs ----------------------------------------------------------

/// n points on a rotated ellipse at distinct sorted angles: strictly convex.
inline Pts random_convex(std::mt19937_64& rng, Point2 centre, double rx, double ry, int n) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  std::vector<double> t;
  while (static_cast<int>(t.size()) < n) {
    const double a = ang(rng);
    if (std::none_of(t.begin(), t.end(), [&](double b) { return std::abs(a - b) < 1e-3; })) t.push_back(a);
  }
  std::sort(t.begin(), t.end());
  const double rot = ang(rng);
  Pts out;
  for (const double a : t) {
    const double ex = rx * std::cos(a), ey = ry * std::sin(a);
    out.push_back({centre.x + ex * std::cos(rot) - ey * std::sin(rot), centre.y + ex * std::sin(rot) + ey * std::cos(rot)});
  }
  return out;
}

inline bladeqc::BitMask random_mask(std::mt19937_64& rng, int w, int h, double density) {
  bladeqc::BitMask m(w, h);
  std::bernoulli_distribution on(density);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (on(rng)) m.set(x, y);
    }
  }
  return m;
}

/// A few filled random blobs (rectangles and discs), so components are
/// larger than single pixels.
inline bladeqc::BitMask random_blobs(std::mt19937_64& rng, int w, int h, int blobs) {
  bladeqc::BitMask m(w, h);
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1), rad(1, std::max(2, std::min(w, h) / 4));
  for (int b = 0; b < blobs; ++b) {
    const int cx = px(rng), cy = py(rng), r = rad(rng);
    const bool disc = rng() & 1;
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) {
        if (!disc || (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y);
      }
    }
  }
  return m;
}

}  // namespace oracle

#endif  // BLADEQC_TESTS_ORACLES_HPP_
