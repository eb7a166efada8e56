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


#include <catch_amalgamated.hpp>

#include <queue>
#include <random>
#include <vector>

#include "bladeqc/mask_codec.hpp"
#include "support/oracles.hpp"

using namespace bladeqc;

namespace {

BitMask from_rows(const std::vector<std::string>& rows) {
  BitMask m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) m.set(x, y, rows[y][x] == '#');
  }
  return m;
}

// Component with its holes filled: every pixel not 4-reachable from outside
// the frame through non-component pixels.
BitMask filled_component(const ComponentLabeling& l, int label) {
  const int w = l.width + 2, h = l.height + 2;
  std::vector<char> outside(std::size_t(w) * h, 0);
  auto blocked = [&](int x, int y) {
    return x >= 1 && y >= 1 && x <= l.width && y <= l.height && l.at(x - 1, y - 1) == label;
  };
  std::queue<std::pair<int, int>> q;
  q.emplace(0, 0);
  outside[0] = 1;
  while (!q.empty()) {
    const auto [x, y] = q.front();
    q.pop();
    for (const auto& [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      auto& o = outside[std::size_t(ny) * w + nx];
      if (o || blocked(nx, ny)) continue;
      o = 1;
      q.emplace(nx, ny);
    }
  }
  BitMask m(l.width, l.height);
  for (int y = 0; y < l.height; ++y) {
    for (int x = 0; x < l.width; ++x) m.set(x, y, !outside[std::size_t(y + 1) * w + x + 1]);
  }
  return m;
}

}  // namespace

TEST_CASE("run-length encoding starts with background", "[mask_codec]") {
  const BitMask m = from_rows({"...", ".#.", "..."});
  const RleMask r = rle_encode(m);
  CHECK(r.runs == std::vector<std::int64_t>{4, 1, 4});
  CHECK(rle_decode(r) == m);

  const BitMask empty(4, 3);
  CHECK(rle_encode(empty).runs == std::vector<std::int64_t>{12});

  const BitMask starts = from_rows({"##.", "..."});
  CHECK(rle_encode(starts).runs == std::vector<std::int64_t>{0, 2, 4});
}

TEST_CASE("malformed run-length masks are rejected", "[mask_codec]") {
  CHECK_THROWS_AS(rle_decode(RleMask{3, 3, {4, 1, 3}}), Error);
  CHECK_THROWS_AS(rle_decode(RleMask{3, 3, {4, -1, 6}}), Error);
  CHECK_THROWS_AS(rle_decode(RleMask{0, 3, {}}), Error);
}

TEST_CASE("canonical form merges zero runs", "[mask_codec]") {
  const RleMask r{3, 3, {2, 0, 2, 3, 2, 0}};
  const RleMask c = canonical(r);
  CHECK(c.runs == std::vector<std::int64_t>{4, 3, 2});
  CHECK(c == rle_encode(rle_decode(r)));
  CHECK(rle_decode(c) == rle_decode(r));
}

TEST_CASE("run-length round trips", "[mask_codec]") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 40);
    const BitMask m = oracle::random_mask(rng, w, h, (rng() % 100) / 100.0);
    const RleMask r = rle_encode(m);
    CHECK(rle_decode(r) == m);
    CHECK(foreground_count(r) == m.count());
    CHECK(to_spans(r) == SpanMask::from_bitmask(m));
    CHECK(rle_encode(SpanMask::from_bitmask(m)) == r);
    CHECK(canonical(r) == r);
  }
}

TEST_CASE("components use 8-connectivity", "[mask_codec]") {
  const auto l = connected_components(from_rows({"#..#", ".#..", "...#", "#..."}));
  CHECK(l.component_count == 4);
  CHECK(l.at(0, 0) == 1);
  CHECK(l.at(1, 1) == 1);
  CHECK(l.at(3, 0) == 2);
  CHECK(l.at(3, 2) == 3);
  CHECK(l.at(0, 3) == 4);
}

TEST_CASE("components match a flood fill", "[mask_codec]") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const BitMask m = oracle::random_mask(rng, 33, 29, 0.35 + (i % 5) * 0.05);
    const auto l = connected_components(m);
    const auto f = oracle::flood_fill(m);
    CHECK(l.component_count == f.count);
    CHECK(l.labels == f.labels);
  }
}

TEST_CASE("component corner points", "[mask_codec]") {
  const auto one = connected_components(from_rows({"...", ".#.", "..."}));
  CHECK(component_corner_points(one, 1) == std::vector<Point2>{{1, 1}, {1, 2}, {2, 1}, {2, 2}});
  const auto block = connected_components(from_rows({"##", "##"}));
  CHECK(component_corner_points(block, 1).size() == 9);
  CHECK_THROWS_AS(component_corner_points(block, 2), Error);
}

TEST_CASE("extreme corners span the same hull as all corners", "[mask_codec]") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const BitMask m = oracle::random_blobs(rng, 60, 40, 1);
    const auto l = connected_components(m);
    if (l.component_count != 1) continue;
    const auto all = component_corner_points(l, 1);
    const auto ext = extreme_corner_points(SpanMask::from_bitmask(m));
    CHECK(area(convex_hull(all)) == area(convex_hull(ext)));
  }
}

TEST_CASE("contour tracing", "[mask_codec]") {
  SECTION("single pixel") {
    const auto l = connected_components(from_rows({"...", ".#.", "..."}));
    const Polygon p = trace_contour(l, 1);
    CHECK(area(p) == 1.0);
    CHECK(p.vertices().size() == 4);
  }
  SECTION("two by two block") {
    const auto l = connected_components(from_rows({"....", ".##.", ".##.", "...."}));
    const Polygon p = trace_contour(l, 1);
    CHECK(area(p) == 4.0);
    CHECK(p.vertices().size() == 4);
  }
  SECTION("diagonal touch stays simple") {
    const auto l = connected_components(from_rows({"##..", "##..", "..##", "..##"}));
    REQUIRE(l.component_count == 1);
    const Polygon p = trace_contour(l, 1);
    CHECK(oracle::rasterize(p.vertices(), 4, 4) == filled_component(l, 1));
  }
  SECTION("random components re-rasterize to the filled component") {
    std::mt19937_64 rng(29);
    int checked = 0;
    for (int i = 0; i < 80; ++i) {
      const BitMask m = oracle::random_blobs(rng, 48, 40, 3);
      const auto l = connected_components(m);
      for (int label = 1; label <= l.component_count; ++label) {
        const Polygon p = trace_contour(l, label);
        CHECK(detail::signed_area(p.vertices()) > 0);
        CHECK(oracle::rasterize(p.vertices(), 48, 40) == filled_component(l, label));
        ++checked;
      }
    }
    CHECK(checked > 80);
  }
}
