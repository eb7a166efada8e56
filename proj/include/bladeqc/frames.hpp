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

#ifndef BLADEQC_FRAMES_HPP_
#define BLADEQC_FRAMES_HPP_

// Native camera frame vs. downsampled working frame. Axes are scaled
// independently: 1500/5456 and 998/3632 differ in the fourth decimal and no
// letterboxing is assumed.

#include <cmath>
#include <string>
#include <string_view>

#include "bladeqc/error.hpp"
#include "bladeqc/geometry.hpp"

namespace bladeqc {

struct Resolution {
  int width = 0;
  int height = 0;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

inline constexpr Resolution kNativeResolution{5456, 3632};
inline constexpr Resolution kWorkingResolution{1500, 998};

enum class Frame { native, working };

inline std::string_view to_string(Frame f) { return f == Frame::native ? "native" : "working"; }

inline Frame parse_frame(std::string_view s) {
  if (s == "native") return Frame::native;
  if (s == "working") return Frame::working;
  fail(ErrorCode::validation, "unknown frame '" + std::string(s) + "'");
}

struct ImageFrames {
  Resolution native = kNativeResolution;
  Resolution working = kWorkingResolution;

  Resolution of(Frame f) const { return f == Frame::native ? native : working; }

  void validate() const {
    if (native.width < 1 || native.height < 1 || working.width < 1 || working.height < 1) {
      fail(ErrorCode::validation, "image resolutions must be positive");
    }
    const double a = double(native.width) / native.height;
    const double b = double(working.width) / working.height;
    if (std::abs(a - b) > 0.01 * a) {
      fail(ErrorCode::validation, "native and working aspect ratios differ by more than 1%");
    }
  }

  friend bool operator==(const ImageFrames&, const ImageFrames&) = default;
};

namespace detail {

inline void check_in(Point2 p, Resolution r, std::string_view what) {
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= r.width && p.y <= r.height)) {
    fail(ErrorCode::validation, "point outside the " + std::string(what) + " frame");
  }
}

}  // namespace detail

inline Point2 to_native(Point2 working_point, const ImageFrames& f) {
  detail::check_in(working_point, f.working, "working");
  return {working_point.x * f.native.width / f.working.width,
          working_point.y * f.native.height / f.working.height};
}

inline Point2 to_working(Point2 native_point, const ImageFrames& f) {
  detail::check_in(native_point, f.native, "native");
  return {native_point.x * f.working.width / f.native.width,
          native_point.y * f.working.height / f.native.height};
}

}  // namespace bladeqc

#endif  // BLADEQC_FRAMES_HPP_
