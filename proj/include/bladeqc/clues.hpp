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

#ifndef BLADEQC_CLUES_HPP_
#define BLADEQC_CLUES_HPP_

// Clue generation: score-filter model instances and wrap each instance's
// mask in its minimum-area rectangle, in the native frame.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "bladeqc/error.hpp"
#include "bladeqc/frames.hpp"
#include "bladeqc/geometry.hpp"
#include "bladeqc/mask_codec.hpp"
#include "bladeqc/raster.hpp"

namespace bladeqc {

inline constexpr double kDefaultScoreThreshold = 0.5;

struct PredictionInstance {
  std::string id;
  std::string image_id;
  RleMask mask;
  double score = 0.0;
  Frame frame = Frame::native;  // frame the mask was emitted in
};

enum class ClueStatus { proposed, converted, modified, dismissed };

inline std::string_view to_string(ClueStatus s) {
  switch (s) {
    case ClueStatus::proposed: return "proposed";
    case ClueStatus::converted: return "converted";
    case ClueStatus::modified: return "modified";
    case ClueStatus::dismissed: return "dismissed";
  }
  return "proposed";
}

inline ClueStatus parse_clue_status(std::string_view s) {
  if (s == "proposed") return ClueStatus::proposed;
  if (s == "converted") return ClueStatus::converted;
  if (s == "modified") return ClueStatus::modified;
  if (s == "dismissed") return ClueStatus::dismissed;
  fail(ErrorCode::validation, "unknown clue status '" + std::string(s) + "'");
}

struct Clue {
  std::string id;  // unique within its image
  std::string image_id;
  RotatedRect rect;  // native frame
  double score = 0.0;
  std::string source_instance;
  ClueStatus status = ClueStatus::proposed;
};

using FrameLookup = std::function<ImageFrames(const std::string& image_id)>;

namespace detail {

inline void check_instance(const PredictionInstance& inst, const ImageFrames& frames) {
  if (!(inst.score >= 0.0 && inst.score <= 1.0)) {
    fail(ErrorCode::validation, "instance '" + inst.id + "' has a score outside [0, 1]");
  }
  const Resolution expected = frames.of(inst.frame);
  if (inst.mask.width != expected.width || inst.mask.height != expected.height) {
    fail(ErrorCode::validation,
         "instance '" + inst.id + "' mask does not match the " +
             std::string(to_string(inst.frame)) + " frame of image '" + inst.image_id + "'",
         std::to_string(inst.mask.width) + "x" + std::to_string(inst.mask.height) + " vs " +
             std::to_string(expected.width) + "x" + std::to_string(expected.height));
  }
  validate(inst.mask);
}

/// Extreme pixel corners of the instance, mapped to the native frame.
inline std::vector<Point2> native_corner_points(const PredictionInstance& inst,
                                                const ImageFrames& frames) {
  std::vector<Point2> pts = extreme_corner_points(to_spans(inst.mask));
  if (inst.frame == Frame::working) {
    for (auto& p : pts) p = to_native(p, frames);
  }
  return pts;
}

}  // namespace detail

/// One clue per instance with score >= threshold and at least one foreground
/// pixel. All components of an instance share one rectangle. Output is
/// sorted by descending score, then image id, then instance id; clue ids are
/// "c1", "c2", ... per image in that order.
inline std::vector<Clue> generate_clues(std::span<const PredictionInstance> instances,
                                        double score_threshold, const FrameLookup& frames) {
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    fail(ErrorCode::validation, "score threshold must lie in [0, 1]");
  }
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<Clue> clues;
  for (const auto& inst : instances) {
    if (!seen.insert({inst.image_id, inst.id}).second) {
      fail(ErrorCode::validation, "duplicate instance id '" + inst.id + "' in image '" +
                                      inst.image_id + "'");
    }
    const ImageFrames f = frames(inst.image_id);
    detail::check_instance(inst, f);
    if (inst.score < score_threshold || foreground_count(inst.mask) == 0) continue;
    clues.push_back(Clue{"", inst.image_id, min_area_rect(detail::native_corner_points(inst, f)),
                         inst.score, inst.id, ClueStatus::proposed});
  }
  std::sort(clues.begin(), clues.end(), [](const Clue& a, const Clue& b) {
    return std::tie(b.score, a.image_id, a.source_instance) <
           std::tie(a.score, b.image_id, b.source_instance);
  });
  std::map<std::string, int> ordinal;
  for (auto& c : clues) c.id = "c" + std::to_string(++ordinal[c.image_id]);
  return clues;
}

inline std::vector<Clue> generate_clues(std::span<const PredictionInstance> instances,
                                        double score_threshold, const ImageFrames& frames) {
  return generate_clues(instances, score_threshold,
                        [&](const std::string&) { return frames; });
}

/// True iff all four corners of every foreground pixel lie inside or on the
/// clue rectangle (tolerance 1e-6 px). Checking the extreme corners of each
/// row suffices because the rectangle is convex.
inline bool clue_containment_check(const Clue& c, const PredictionInstance& inst,
                                   const ImageFrames& frames) {
  if (c.source_instance != inst.id || c.image_id != inst.image_id) {
    fail(ErrorCode::validation, "clue '" + c.id + "' was not generated from instance '" +
                                    inst.id + "'");
  }
  detail::check_instance(inst, frames);
  if (foreground_count(inst.mask) == 0) {
    fail(ErrorCode::validation, "instance '" + inst.id + "' has an empty mask; no clue exists");
  }
  constexpr double kTol = 1e-6;
  for (const auto& p : detail::native_corner_points(inst, frames)) {
    if (!c.rect.contains(p, kTol)) return false;
  }
  return true;
}

}  // namespace bladeqc

#endif  // BLADEQC_CLUES_HPP_
