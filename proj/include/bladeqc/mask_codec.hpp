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

#ifndef BLADEQC_MASK_CODEC_HPP_
#define BLADEQC_MASK_CODEC_HPP_

// Run-length codec, 8-connected component labeling and pixel-boundary
// contour tracing for model-predicted masks.
//
// RLE convention: row-major, alternating run lengths, first run counts
// background pixels (so an all-foreground mask encodes as [0, w*h]).

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bladeqc/error.hpp"
#include "bladeqc/geometry.hpp"
#include "bladeqc/raster.hpp"

namespace bladeqc {

struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> runs;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

inline RleMask rle_encode(const BitMask& m) {
  RleMask r{m.width(), m.height(), {}};
  std::uint8_t current = 0;
  std::int64_t length = 0;
  for (const std::uint8_t b : m.bits()) {
    if (b == current) {
      ++length;
    } else {
      r.runs.push_back(length);
      current = b;
      length = 1;
    }
  }
  r.runs.push_back(length);
  return r;
}

inline void validate(const RleMask& r) {
  if (r.width < 1 || r.height < 1) {
    fail(ErrorCode::validation, "malformed RLE mask: non-positive dimensions");
  }
  std::int64_t total = 0;
  for (const auto len : r.runs) {
    if (len < 0) fail(ErrorCode::validation, "malformed RLE mask: negative run length");
    total += len;
  }
  const std::int64_t expected = static_cast<std::int64_t>(r.width) * r.height;
  if (total != expected) {
    fail(ErrorCode::validation, "malformed RLE mask: runs do not cover the frame",
         "sum(runs)=" + std::to_string(total) + ", width*height=" + std::to_string(expected));
  }
}

inline BitMask rle_decode(const RleMask& r) {
  validate(r);
  BitMask m(r.width, r.height);
  std::int64_t pos = 0;
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    if (i % 2 == 1) {
      for (std::int64_t k = pos; k < pos + r.runs[i]; ++k) {
        m.set(static_cast<int>(k % r.width), static_cast<int>(k / r.width));
      }
    }
    pos += r.runs[i];
  }
  return m;
}

/// Merges zero-length interior runs (and drops a trailing zero run) so that
/// canonical(r) == rle_encode(rle_decode(r)).
inline RleMask canonical(const RleMask& r) {
  validate(r);
  RleMask out{r.width, r.height, {}};
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const bool foreground = i % 2 == 1;
    const bool last_foreground = out.runs.size() % 2 == 0;
    if (r.runs[i] == 0) continue;
    if (!out.runs.empty() && foreground == last_foreground) {
      out.runs.back() += r.runs[i];
    } else {
      if (out.runs.empty() && foreground) out.runs.push_back(0);
      out.runs.push_back(r.runs[i]);
    }
  }
  if (out.runs.empty()) out.runs.push_back(0);
  return out;
}

/// Decodes straight into row intervals without materializing the grid.
inline SpanMask to_spans(const RleMask& r) {
  validate(r);
  SpanMask out(r.width, r.height);
  std::int64_t pos = 0;
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const std::int64_t end = pos + r.runs[i];
    if (i % 2 == 1) {
      std::int64_t p = pos;
      while (p < end) {
        const int y = static_cast<int>(p / r.width);
        const std::int64_t row_end = std::min<std::int64_t>(end, (static_cast<std::int64_t>(y) + 1) * r.width);
        out.add(y, {static_cast<int>(p % r.width),
                    static_cast<int>(row_end - static_cast<std::int64_t>(y) * r.width)});
        p = row_end;
      }
    }
    pos = end;
  }
  return out;
}

/// Encodes a sparse pixel set without materializing the grid.
inline RleMask rle_encode(const SpanMask& m) {
  RleMask r{m.width(), m.height(), {}};
  std::int64_t cursor = 0;  // first pixel not yet covered by a run
  for (int y = 0; y < m.height(); ++y) {
    for (const auto& s : m.row(y)) {
      const std::int64_t b = static_cast<std::int64_t>(y) * m.width() + s.begin;
      const std::int64_t e = static_cast<std::int64_t>(y) * m.width() + s.end;
      if (b == cursor && !r.runs.empty()) {
        r.runs.back() += e - b;  // continues across a row boundary
      } else {
        r.runs.push_back(b - cursor);
        r.runs.push_back(e - b);
      }
      cursor = e;
    }
  }
  const std::int64_t total = static_cast<std::int64_t>(m.width()) * m.height();
  if (r.runs.empty()) {
    r.runs.push_back(total);
  } else if (cursor < total) {
    r.runs.push_back(total - cursor);
  }
  return r;
}

inline std::int64_t foreground_count(const RleMask& r) {
  std::int64_t n = 0;
  for (std::size_t i = 1; i < r.runs.size(); i += 2) n += r.runs[i];
  return n;
}

struct ComponentLabeling {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major, 0 = background
  int component_count = 0;

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// 8-connected labeling (two-pass with union-find). Labels are dense and
/// numbered in raster order of each component's first pixel.
inline ComponentLabeling connected_components(const BitMask& m) {
  const int w = m.width();
  const int h = m.height();
  std::vector<int> parent(1, 0);
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto join = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  std::vector<int> provisional(static_cast<std::size_t>(w) * h, 0);
  auto lab = [&](int x, int y) -> int& { return provisional[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.test(x, y)) continue;
      int current = 0;
      const int nbr[4][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}};
      for (const auto& d : nbr) {
        const int nx = x + d[0];
        const int ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w) continue;
        const int l = lab(nx, ny);
        if (l == 0) continue;
        if (current == 0) {
          current = l;
        } else {
          join(current, l);
        }
      }
      if (current == 0) {
        current = static_cast<int>(parent.size());
        parent.push_back(current);
      }
      lab(x, y) = current;
    }
  }

  ComponentLabeling out{w, h, std::vector<int>(provisional.size(), 0), 0};
  std::vector<int> dense(parent.size(), 0);
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    if (provisional[i] == 0) continue;
    const int root = find(provisional[i]);
    if (dense[root] == 0) dense[root] = ++out.component_count;
    out.labels[i] = dense[root];
  }
  return out;
}

namespace detail {

inline void check_label(const ComponentLabeling& l, int label) {
  if (label < 1 || label > l.component_count) {
    fail(ErrorCode::not_found, "unknown component label " + std::to_string(label));
  }
}

}  // namespace detail

/// All pixel corners of one component, deduplicated, sorted by (x, y).
inline std::vector<Point2> component_corner_points(const ComponentLabeling& l, int label) {
  detail::check_label(l, label);
  std::vector<std::pair<int, int>> corners;
  for (int y = 0; y < l.height; ++y) {
    for (int x = 0; x < l.width; ++x) {
      if (l.at(x, y) != label) continue;
      corners.insert(corners.end(), {{x, y}, {x + 1, y}, {x, y + 1}, {x + 1, y + 1}});
    }
  }
  std::sort(corners.begin(), corners.end());
  corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
  std::vector<Point2> out;
  out.reserve(corners.size());
  for (const auto& [x, y] : corners) out.push_back({double(x), double(y)});
  return out;
}

/// Corners of the leftmost and rightmost pixel of every row. Their convex
/// hull equals the hull of all foreground pixel corners.
inline std::vector<Point2> extreme_corner_points(const SpanMask& m) {
  std::vector<Point2> out;
  for (int y = 0; y < m.height(); ++y) {
    const auto& r = m.row(y);
    if (r.empty()) continue;
    const double l = r.front().begin;
    const double e = r.back().end;
    out.insert(out.end(), {{l, double(y)}, {l, y + 1.0}, {e, double(y)}, {e, y + 1.0}});
  }
  return out;
}

/// Outer boundary of one component along pixel edges, as a CCW polygon.
/// Holes are ignored. Where the component touches itself diagonally the
/// boundary would pass the same lattice point twice; each pass is nudged
/// 1/64 px into the background pixel it wraps, which keeps the polygon
/// simple without moving any pixel center across it.
inline Polygon trace_contour(const ComponentLabeling& l, int label) {
  detail::check_label(l, label);
  auto in = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < l.width && y < l.height && l.at(x, y) == label;
  };
  using Lattice = std::pair<int, int>;
  // Directed boundary edges with the component on the left of travel in the
  // CCW (positive shoelace) sense.
  std::multimap<Lattice, Lattice> next;
  for (int y = 0; y < l.height; ++y) {
    for (int x = 0; x < l.width; ++x) {
      if (!in(x, y)) continue;
      if (!in(x, y - 1)) next.insert({{x, y}, {x + 1, y}});
      if (!in(x + 1, y)) next.insert({{x + 1, y}, {x + 1, y + 1}});
      if (!in(x, y + 1)) next.insert({{x + 1, y + 1}, {x, y + 1}});
      if (!in(x - 1, y)) next.insert({{x, y + 1}, {x, y}});
    }
  }

  // The smallest key is the top-left corner of the topmost pixel in the
  // leftmost column: on the outer boundary and never a pinch point, so the
  // first loop traced is the outer one.
  std::vector<Lattice> loop;
  {
    const auto first = next.begin();
    const Lattice start = first->first;
    Lattice cur = first->second;
    Lattice dir = {cur.first - start.first, cur.second - start.second};
    next.erase(first);
    loop.push_back(start);
    while (cur != start) {
      auto [lo, hi] = next.equal_range(cur);
      if (lo == hi) break;
      auto pick = lo;
      if (std::next(lo) != hi) {
        // Diagonal pinch: turn right to stay with the 8-connected neighbour.
        for (auto it = lo; it != hi; ++it) {
          const Lattice d = {it->second.first - cur.first, it->second.second - cur.second};
          if (dir.first * d.second - dir.second * d.first < 0) pick = it;
        }
      }
      loop.push_back(cur);
      dir = {pick->second.first - cur.first, pick->second.second - cur.second};
      cur = pick->second;
      next.erase(pick);
    }
  }

  std::map<Lattice, int> visits;
  for (const auto& v : loop) ++visits[v];

  constexpr double kNudge = 1.0 / 64.0;
  const std::size_t n = loop.size();
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const Lattice prev = loop[(i + n - 1) % n];
    const Lattice here = loop[i];
    const Lattice succ = loop[(i + 1) % n];
    const Lattice in_dir = {here.first - prev.first, here.second - prev.second};
    const Lattice out_dir = {succ.first - here.first, succ.second - here.second};
    if (in_dir == out_dir) continue;  // collinear, not a corner
    Point2 p{double(here.first), double(here.second)};
    if (visits[here] > 1) {
      p = p + kNudge * Point2{double(out_dir.first - in_dir.first),
                              double(out_dir.second - in_dir.second)};
    }
    pts.push_back(p);
  }
  return Polygon(std::move(pts));
}

}  // namespace bladeqc

#endif  // BLADEQC_MASK_CODEC_HPP_
