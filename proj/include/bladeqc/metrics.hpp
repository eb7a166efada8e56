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

#ifndef BLADEQC_METRICS_HPP_
#define BLADEQC_METRICS_HPP_

// Damage-level detection metrics. A ground truth is detected when the IoU
// between it and the union of one or more predictions reaches the threshold;
// more than one prediction per damage is fine. Pixel-level recall is never
// computed.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bladeqc/error.hpp"
#include "bladeqc/frames.hpp"
#include "bladeqc/geometry.hpp"
#include "bladeqc/mask_codec.hpp"
#include "bladeqc/raster.hpp"

namespace bladeqc {

inline constexpr double kDefaultIouThreshold = 0.3;

struct EvalPrediction {
  std::string id;
  std::variant<RleMask, Polygon> region;
  double score = 1.0;
};

struct EvalImage {
  std::string image_id;
  Resolution frame;
  std::vector<Polygon> ground_truths;
  std::vector<EvalPrediction> predictions;
};

struct GroundTruthMatch {
  bool matched = false;
  double union_iou = 0.0;
  std::vector<std::size_t> contributors;  // prediction indices, in selection order
};

struct MatchResult {
  std::string image_id;
  std::vector<GroundTruthMatch> ground_truths;
  std::vector<bool> prediction_is_tp;
  std::vector<std::string> prediction_ids;
};

struct MetricsReport {
  double iou_threshold = kDefaultIouThreshold;
  double score_threshold = 0.0;
  std::int64_t n_images = 0;
  std::int64_t n_ground_truths = 0;
  std::int64_t n_predictions = 0;
  std::int64_t tp_ground_truths = 0;
  std::int64_t tp_predictions = 0;
  // Predictions credited to more than one matched ground truth.
  std::int64_t shared_predictions = 0;
  std::optional<double> damage_recall;     // absent without ground truths
  std::optional<double> damage_precision;  // absent without predictions

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct SubsetResult {
  std::vector<std::size_t> subset;
  double union_iou = 0.0;
};

inline SpanMask region_spans(const std::variant<RleMask, Polygon>& region, Resolution frame) {
  if (const auto* rle = std::get_if<RleMask>(&region)) {
    if (rle->width != frame.width || rle->height != frame.height) {
      fail(ErrorCode::validation, "prediction mask does not match the image frame");
    }
    return to_spans(*rle);
  }
  return rasterize_spans(std::get<Polygon>(region), frame.width, frame.height);
}

namespace detail {

inline void check_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) fail(ErrorCode::validation, "IoU threshold must lie in (0, 1]");
}

}  // namespace detail

/// Greedy union growth for one ground truth: start from the candidate with
/// the best single IoU, then keep adding whichever candidate raises the
/// union-IoU most, until nothing improves it.
inline GroundTruthMatch match_ground_truth(const SpanMask& gt, std::span<const SpanMask> preds,
                                           double iou_threshold) {
  GroundTruthMatch m;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (intersection_count(gt, preds[i]) > 0) candidates.push_back(i);
  }
  if (candidates.empty()) return m;

  std::size_t first = candidates.front();
  double best = -1.0;
  for (const auto c : candidates) {
    const double v = iou(gt, preds[c]);
    if (v > best) {
      best = v;
      first = c;
    }
  }
  std::vector<bool> taken(preds.size(), false);
  taken[first] = true;
  m.contributors.push_back(first);
  SpanMask uni = preds[first];
  double current = best;
  while (true) {
    std::size_t pick = preds.size();
    double pick_value = current;
    SpanMask pick_union(gt.width(), gt.height());
    for (const auto c : candidates) {
      if (taken[c]) continue;
      SpanMask grown = unite(uni, preds[c]);
      const double v = iou(gt, grown);
      if (v > pick_value) {
        pick_value = v;
        pick = c;
        pick_union = std::move(grown);
      }
    }
    if (pick == preds.size()) break;
    taken[pick] = true;
    m.contributors.push_back(pick);
    uni = std::move(pick_union);
    current = pick_value;
  }
  m.union_iou = current;
  m.matched = current >= iou_threshold;
  return m;
}

inline MatchResult match_image(const EvalImage& img, double iou_threshold) {
  detail::check_threshold(iou_threshold);
  std::vector<SpanMask> gts;
  gts.reserve(img.ground_truths.size());
  for (const auto& g : img.ground_truths) {
    gts.push_back(rasterize_spans(g, img.frame.width, img.frame.height));
  }
  std::vector<SpanMask> preds;
  preds.reserve(img.predictions.size());
  for (const auto& p : img.predictions) preds.push_back(region_spans(p.region, img.frame));

  MatchResult r;
  r.image_id = img.image_id;
  r.prediction_is_tp.assign(preds.size(), false);
  for (const auto& p : img.predictions) r.prediction_ids.push_back(p.id);
  for (const auto& g : gts) {
    GroundTruthMatch m = match_ground_truth(g, preds, iou_threshold);
    if (m.matched) {
      for (const auto c : m.contributors) r.prediction_is_tp[c] = true;
    }
    r.ground_truths.push_back(std::move(m));
  }
  return r;
}

/// Drops predictions scoring below the threshold.
inline EvalImage filter_by_score(EvalImage img, double score_threshold) {
  std::erase_if(img.predictions,
                [&](const EvalPrediction& p) { return p.score < score_threshold; });
  return img;
}

/// Micro-averaged over images: counts are summed before dividing.
inline MetricsReport evaluate_dataset(std::span<const EvalImage> images, double iou_threshold,
                                      double score_threshold = 0.0) {
  detail::check_threshold(iou_threshold);
  if (images.empty()) fail(ErrorCode::validation, "evaluation needs at least one image");
  MetricsReport rep;
  rep.iou_threshold = iou_threshold;
  rep.score_threshold = score_threshold;
  for (const auto& original : images) {
    const EvalImage img = filter_by_score(original, score_threshold);
    const MatchResult m = match_image(img, iou_threshold);
    ++rep.n_images;
    rep.n_ground_truths += static_cast<std::int64_t>(m.ground_truths.size());
    rep.n_predictions += static_cast<std::int64_t>(m.prediction_is_tp.size());
    std::vector<int> credit(m.prediction_is_tp.size(), 0);
    for (const auto& g : m.ground_truths) {
      if (!g.matched) continue;
      ++rep.tp_ground_truths;
      for (const auto c : g.contributors) ++credit[c];
    }
    for (const int c : credit) {
      if (c > 0) ++rep.tp_predictions;
      if (c > 1) ++rep.shared_predictions;
    }
  }
  if (rep.n_ground_truths > 0) {
    rep.damage_recall = double(rep.tp_ground_truths) / double(rep.n_ground_truths);
  }
  if (rep.n_predictions > 0) {
    rep.damage_precision = double(rep.tp_predictions) / double(rep.n_predictions);
  }
  return rep;
}

inline std::vector<std::pair<double, MetricsReport>> threshold_sweep(
    std::span<const EvalImage> images, std::span<const double> thresholds,
    double score_threshold = 0.0) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    detail::check_threshold(thresholds[i]);
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      fail(ErrorCode::validation, "sweep thresholds must be strictly increasing");
    }
  }
  std::vector<std::pair<double, MetricsReport>> out;
  for (const double t : thresholds) {
    out.emplace_back(t, evaluate_dataset(images, t, score_threshold));
  }
  return out;
}

/// Exhaustive search for the subset of candidates with the highest
/// union-IoU against gt. Ties go to the smaller subset. At most 12
/// candidates (4095 subsets).
inline SubsetResult best_subset_oracle(const SpanMask& gt, std::span<const SpanMask> candidates) {
  constexpr std::size_t kMaxCandidates = 12;
  if (candidates.size() > kMaxCandidates) {
    fail(ErrorCode::validation, "best_subset_oracle supports at most 12 candidates");
  }
  const unsigned n = static_cast<unsigned>(candidates.size());
  const unsigned gt_bit = 1u << n;

  // Pixel count per coverage pattern (which candidates cover it, plus
  // whether gt does). Every subset is then scored from this histogram.
  std::map<unsigned, std::int64_t> hist;
  std::vector<std::pair<int, unsigned>> edges;
  for (int y = 0; y < gt.height(); ++y) {
    edges.clear();
    auto collect = [&](const SpanMask& m, unsigned bit) {
      for (const auto& r : m.row(y)) {
        edges.emplace_back(r.begin, bit);
        edges.emplace_back(r.end, bit);
      }
    };
    collect(gt, gt_bit);
    for (unsigned i = 0; i < n; ++i) collect(candidates[i], 1u << i);
    std::sort(edges.begin(), edges.end());
    unsigned active = 0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (k > 0 && active != 0 && edges[k].first > edges[k - 1].first) {
        hist[active] += edges[k].first - edges[k - 1].first;
      }
      active ^= edges[k].second;  // runs within one mask never overlap
    }
  }
  std::int64_t gt_count = 0;
  for (const auto& [pattern, count] : hist) {
    if (pattern & gt_bit) gt_count += count;
  }

  SubsetResult best;
  int best_size = 0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::int64_t inter = 0, extra = 0;
    for (const auto& [pattern, count] : hist) {
      if ((pattern & mask) == 0) continue;
      (pattern & gt_bit ? inter : extra) += count;
    }
    const std::int64_t uni = gt_count + extra;
    const double v = uni == 0 ? 0.0 : double(inter) / double(uni);
    const int size = std::popcount(mask);
    if (v > best.union_iou || (v == best.union_iou && v > 0.0 && size < best_size)) {
      best.union_iou = v;
      best_size = size;
      best.subset.clear();
      for (unsigned i = 0; i < n; ++i) {
        if (mask & (1u << i)) best.subset.push_back(i);
      }
    }
  }
  return best;
}

inline SubsetResult best_subset_oracle(const Polygon& gt,
                                       std::span<const std::variant<RleMask, Polygon>> candidates,
                                       Resolution frame) {
  std::vector<SpanMask> spans;
  for (const auto& c : candidates) spans.push_back(region_spans(c, frame));
  return best_subset_oracle(rasterize_spans(gt, frame.width, frame.height), spans);
}

}  // namespace bladeqc

#endif  // BLADEQC_METRICS_HPP_
