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

#ifndef BLADEQC_WIRE_HPP_
#define BLADEQC_WIRE_HPP_

// JSON wire formats: polygons as flat coordinate lists, RLE masks, clues,
// annotations, job manifests, prediction files, eval inputs, journal lines.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bladeqc/clues.hpp"
#include "bladeqc/error.hpp"
#include "bladeqc/frames.hpp"
#include "bladeqc/geometry.hpp"
#include "bladeqc/mask_codec.hpp"
#include "bladeqc/metrics.hpp"
#include "bladeqc/raster.hpp"
#include "bladeqc/records.hpp"
#include "bladeqc/workflow.hpp"

namespace bladeqc::wire {

using json = nlohmann::json;

template <typename T>
T get(const json& j, std::string_view key) {
  if (!j.is_object()) fail(ErrorCode::validation, "expected an object with field '" + std::string(key) + "'");
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::validation, "missing field '" + std::string(key) + "'");
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::validation, "field '" + std::string(key) + "' has the wrong type");
  }
}

inline const json& at(const json& j, std::string_view key) {
  if (!j.is_object()) fail(ErrorCode::validation, "expected an object with field '" + std::string(key) + "'");
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::validation, "missing field '" + std::string(key) + "'");
  return *it;
}

template <typename T>
T get_or(const json& j, std::string_view key, T fallback) {
  if (!j.is_object()) return fallback;
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::validation, "field '" + std::string(key) + "' has the wrong type");
  }
}

inline json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::validation, "malformed JSON document", e.what());
  }
}

// -- geometry ---------------------------------------------------------------

inline json to_json(const Polygon& p) { return p.flat(); }

inline Polygon polygon_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::validation, "polygon must be a flat coordinate list");
  std::vector<double> flat;
  flat.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) fail(ErrorCode::validation, "polygon coordinates must be numbers");
    flat.push_back(v.get<double>());
  }
  return Polygon::from_flat(flat);
}

inline json to_json(const RotatedRect& r) {
  json out = json::array();
  for (const auto& c : r.corners()) {
    out.push_back(c.x);
    out.push_back(c.y);
  }
  return out;
}

inline RotatedRect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 8) {
    fail(ErrorCode::validation, "rectangle corners must be 8 numbers");
  }
  std::array<Point2, 4> c;
  try {
    for (int i = 0; i < 4; ++i) c[i] = {j[2 * i].get<double>(), j[2 * i + 1].get<double>()};
  } catch (const json::exception&) {
    fail(ErrorCode::validation, "rectangle corners must be numbers");
  }
  return RotatedRect::from_corners(c);
}

inline json to_json(const RleMask& m) {
  return {{"width", m.width}, {"height", m.height}, {"counts", m.runs}};
}

inline RleMask rle_from_json(const json& j) {
  RleMask m{get<int>(j, "width"), get<int>(j, "height"),
            get<std::vector<std::int64_t>>(j, "counts")};
  validate(m);
  return m;
}

inline Resolution resolution_from_json(const json& j, Resolution fallback) {
  if (j.is_null()) return fallback;
  if (j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer()) {
    return {j[0].get<int>(), j[1].get<int>()};
  }
  if (j.is_object()) return {get<int>(j, "width"), get<int>(j, "height")};
  fail(ErrorCode::validation, "resolution must be [width, height]");
}

inline json to_json(Resolution r) { return json::array({r.width, r.height}); }

// -- clues and annotations --------------------------------------------------

inline json to_json(const Clue& c) {
  return {{"id", c.id},
          {"image_id", c.image_id},
          {"corners", to_json(c.rect)},
          {"score", c.score},
          {"source_instance", c.source_instance},
          {"status", to_string(c.status)}};
}

inline Clue clue_from_json(const json& j) {
  return Clue{get<std::string>(j, "id"),
              get<std::string>(j, "image_id"),
              rect_from_json(at(j, "corners")),
              get<double>(j, "score"),
              get<std::string>(j, "source_instance"),
              parse_clue_status(get<std::string>(j, "status"))};
}

inline json to_json(const Provenance& p) {
  json out = {{"type", to_string(p.kind)}};
  if (p.from_clue()) out["clue_id"] = p.clue_id;
  return out;
}

inline Provenance provenance_from_json(const json& j) {
  if (j.is_string()) return {parse_provenance_kind(j.get<std::string>()), {}};
  Provenance p{parse_provenance_kind(get<std::string>(j, "type")),
               get_or<std::string>(j, "clue_id", "")};
  if (p.from_clue() && p.clue_id.empty()) {
    fail(ErrorCode::validation, "clue provenance needs a clue_id");
  }
  return p;
}

inline json to_json(const Annotation& a, bool with_image_id = true) {
  json out = {{"id", a.annotation_id},
              {"polygon", to_json(a.polygon)},
              {"provenance", to_json(a.provenance)},
              {"damage_label", a.damage_label ? json(*a.damage_label) : json(nullptr)},
              {"author", a.author},
              {"stage", to_string(a.stage)},
              {"created_at", a.created_at},
              {"approved", a.approved}};
  if (with_image_id) out["image_id"] = a.image_id;
  return out;
}

inline Annotation annotation_from_json(const json& j, std::string image_id = {}) {
  if (image_id.empty()) image_id = get<std::string>(j, "image_id");
  std::optional<std::string> label;
  if (j.contains("damage_label") && !j["damage_label"].is_null()) {
    label = get<std::string>(j, "damage_label");
  }
  return Annotation{get<std::string>(j, "id"),
                    std::move(image_id),
                    polygon_from_json(at(j, "polygon")),
                    provenance_from_json(at(j, "provenance")),
                    std::move(label),
                    get<std::string>(j, "author"),
                    parse_stage(get<std::string>(j, "stage")),
                    get<std::int64_t>(j, "created_at"),
                    get_or<bool>(j, "approved", false)};
}

/// Annotation export document for one image.
inline json annotation_export(const std::string& image_id, const std::vector<Annotation>& anns) {
  json list = json::array();
  for (const auto& a : anns) list.push_back(to_json(a, false));
  return {{"image_id", image_id}, {"annotations", std::move(list)}};
}

// -- jobs and images --------------------------------------------------------

inline json to_json(const InspectionJob& j) {
  return {{"job_id", j.job_id},       {"turbine_id", j.turbine_id},
          {"arm", to_string(j.arm)},  {"image_ids", j.image_ids},
          {"created_at", j.created_at}, {"score_threshold", j.score_threshold}};
}

inline InspectionJob job_from_json(const json& j) {
  return InspectionJob{get<std::string>(j, "job_id"),
                       get<std::string>(j, "turbine_id"),
                       parse_arm(get<std::string>(j, "arm")),
                       get<std::vector<std::string>>(j, "image_ids"),
                       get<std::int64_t>(j, "created_at"),
                       get<double>(j, "score_threshold")};
}

inline json to_json(const ImageRecord& r) {
  return {{"image_id", r.image_id},
          {"job_id", r.job_id},
          {"file_ref", r.file_ref},
          {"native_resolution", to_json(r.frames.native)},
          {"working_resolution", to_json(r.frames.working)},
          {"metadata", r.metadata}};
}

inline ImageRecord image_from_json(const json& j, const std::string& job_id) {
  ImageRecord r;
  r.image_id = get<std::string>(j, "image_id");
  r.job_id = job_id.empty() ? get<std::string>(j, "job_id") : job_id;
  r.file_ref = get_or<std::string>(j, "file_ref", "");
  r.frames.native = resolution_from_json(j.value("native_resolution", json()), kNativeResolution);
  r.frames.working = resolution_from_json(j.value("working_resolution", json()), kWorkingResolution);
  if (j.contains("metadata") && !j["metadata"].is_null()) {
    if (!j["metadata"].is_object()) fail(ErrorCode::validation, "image metadata must be an object");
    r.metadata = j["metadata"];
  }
  if (r.image_id.empty()) fail(ErrorCode::validation, "image_id must not be empty");
  r.frames.validate();
  return r;
}

struct Manifest {
  InspectionJob job;  // arm and created_at are filled in at ingest
  bool has_created_at = false;
  std::vector<ImageRecord> images;
  json canonical;  // normalized document used for idempotency checks
};

inline Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.job.job_id = get<std::string>(j, "job_id");
  m.job.turbine_id = get_or<std::string>(j, "turbine_id", "");
  m.job.score_threshold = get_or<double>(j, "score_threshold", kDefaultScoreThreshold);
  if (!(m.job.score_threshold >= 0.0 && m.job.score_threshold <= 1.0)) {
    fail(ErrorCode::validation, "score_threshold must lie in [0, 1]");
  }
  if (j.contains("created_at") && !j["created_at"].is_null()) {
    m.job.created_at = get<std::int64_t>(j, "created_at");
    m.has_created_at = true;
  }
  if (m.job.job_id.empty()) fail(ErrorCode::validation, "job_id must not be empty");
  const json images = j.value("images", json::array());
  if (!images.is_array() || images.empty()) {
    fail(ErrorCode::validation, "manifest must list at least one image");
  }
  std::set<std::string> ids;
  json canon_images = json::array();
  for (const auto& ij : images) {
    ImageRecord r = image_from_json(ij, m.job.job_id);
    if (!ids.insert(r.image_id).second) {
      fail(ErrorCode::validation, "duplicate image_id '" + r.image_id + "' in manifest");
    }
    m.job.image_ids.push_back(r.image_id);
    canon_images.push_back(to_json(r));
    m.images.push_back(std::move(r));
  }
  m.canonical = {{"job_id", m.job.job_id},
                 {"turbine_id", m.job.turbine_id},
                 {"score_threshold", m.job.score_threshold},
                 {"created_at", m.has_created_at ? json(m.job.created_at) : json(nullptr)},
                 {"images", std::move(canon_images)}};
  return m;
}

// -- predictions ------------------------------------------------------------

struct PredictionFile {
  std::string image_id;
  std::vector<PredictionInstance> instances;
};

/// Parses one prediction document. Polygon instances are rasterized in
/// their declared frame so every instance carries an RLE mask.
inline PredictionFile prediction_file_from_json(const json& j, const ImageFrames& frames) {
  PredictionFile f;
  f.image_id = get<std::string>(j, "image_id");
  const json instances = j.value("instances", json::array());
  if (!instances.is_array()) fail(ErrorCode::validation, "instances must be a list");
  for (const auto& ij : instances) {
    PredictionInstance inst;
    inst.id = get<std::string>(ij, "id");
    inst.image_id = f.image_id;
    inst.score = get<double>(ij, "score");
    inst.frame = parse_frame(get_or<std::string>(ij, "frame", "native"));
    if (ij.contains("mask") && !ij["mask"].is_null()) {
      inst.mask = rle_from_json(ij["mask"]);
    } else if (ij.contains("polygon") && !ij["polygon"].is_null()) {
      const Resolution r = frames.of(inst.frame);
      inst.mask = rle_encode(rasterize_spans(polygon_from_json(ij["polygon"]), r.width, r.height));
    } else {
      fail(ErrorCode::validation, "instance '" + inst.id + "' has neither mask nor polygon");
    }
    f.instances.push_back(std::move(inst));
  }
  return f;
}

// -- journal ----------------------------------------------------------------

inline json to_json(const EventRecord& e) {
  json payload = e.payload.is_null() ? json::object() : e.payload;
  if (!e.image_id.empty()) payload["image_id"] = e.image_id;
  return {{"seq", e.seq},
          {"job_id", e.job_id},
          {"timestamp", e.timestamp_ms},
          {"actor", e.actor},
          {"action", to_string(e.action)},
          {"payload", std::move(payload)}};
}

inline EventRecord event_from_json(const json& j) {
  EventRecord e;
  e.seq = get<std::int64_t>(j, "seq");
  e.job_id = get<std::string>(j, "job_id");
  e.timestamp_ms = get<std::int64_t>(j, "timestamp");
  e.actor = get<std::string>(j, "actor");
  e.action = parse_action(get<std::string>(j, "action"));
  e.payload = j.value("payload", json::object());
  if (!e.payload.is_object()) fail(ErrorCode::validation, "event payload must be an object");
  if (e.payload.contains("image_id")) {
    e.image_id = get<std::string>(e.payload, "image_id");
    e.payload.erase("image_id");
  }
  return e;
}

// -- evaluation -------------------------------------------------------------

inline EvalImage eval_image_from_json(const json& j) {
  EvalImage img;
  img.image_id = get<std::string>(j, "image_id");
  if (j.contains("frame")) {
    img.frame = resolution_from_json(j["frame"], kNativeResolution);
  } else if (j.contains("width")) {
    img.frame = {get<int>(j, "width"), get<int>(j, "height")};
  } else {
    img.frame = kNativeResolution;
  }
  if (img.frame.width < 1 || img.frame.height < 1) {
    fail(ErrorCode::validation, "eval frame must be positive");
  }
  const json gts = j.contains("annotations") ? j["annotations"] : j.value("ground_truths", json::array());
  if (!gts.is_array()) fail(ErrorCode::validation, "ground truths must be a list");
  for (const auto& g : gts) {
    img.ground_truths.push_back(polygon_from_json(g.is_object() ? at(g, "polygon") : g));
  }
  const json preds = j.contains("instances") ? j["instances"] : j.value("predictions", json::array());
  if (!preds.is_array()) fail(ErrorCode::validation, "predictions must be a list");
  for (const auto& p : preds) {
    EvalPrediction ep;
    ep.id = get<std::string>(p, "id");
    ep.score = get_or<double>(p, "score", 1.0);
    if (p.contains("mask") && !p["mask"].is_null()) {
      ep.region = rle_from_json(p["mask"]);
    } else {
      ep.region = polygon_from_json(at(p, "polygon"));
    }
    img.predictions.push_back(std::move(ep));
  }
  return img;
}

inline std::vector<EvalImage> eval_images_from_json(const json& j) {
  const json& list = j.is_array() ? j : at(j, "images");
  if (!list.is_array()) fail(ErrorCode::validation, "eval input must be a list of images");
  std::vector<EvalImage> out;
  for (const auto& item : list) out.push_back(eval_image_from_json(item));
  return out;
}

inline json to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"iou_threshold", r.iou_threshold},
          {"score_threshold", r.score_threshold},
          {"n_images", r.n_images},
          {"n_ground_truths", r.n_ground_truths},
          {"n_predictions", r.n_predictions},
          {"tp_ground_truths", r.tp_ground_truths},
          {"tp_predictions", r.tp_predictions},
          {"shared_predictions", r.shared_predictions},
          {"prediction_reuse", "allowed"},
          {"damage_recall", opt(r.damage_recall)},
          {"damage_precision", opt(r.damage_precision)}};
}

inline MetricsReport metrics_report_from_json(const json& j) {
  MetricsReport r;
  r.iou_threshold = get<double>(j, "iou_threshold");
  r.score_threshold = get<double>(j, "score_threshold");
  r.n_images = get<std::int64_t>(j, "n_images");
  r.n_ground_truths = get<std::int64_t>(j, "n_ground_truths");
  r.n_predictions = get<std::int64_t>(j, "n_predictions");
  r.tp_ground_truths = get<std::int64_t>(j, "tp_ground_truths");
  r.tp_predictions = get<std::int64_t>(j, "tp_predictions");
  r.shared_predictions = get<std::int64_t>(j, "shared_predictions");
  if (!at(j, "damage_recall").is_null()) r.damage_recall = get<double>(j, "damage_recall");
  if (!at(j, "damage_precision").is_null()) r.damage_precision = get<double>(j, "damage_precision");
  return r;
}

inline json to_json(const MatchResult& m) {
  json gts = json::array();
  for (std::size_t i = 0; i < m.ground_truths.size(); ++i) {
    const auto& g = m.ground_truths[i];
    json contributors = json::array();
    for (const auto c : g.contributors) contributors.push_back(m.prediction_ids[c]);
    gts.push_back({{"index", i},
                   {"matched", g.matched},
                   {"union_iou", g.union_iou},
                   {"contributors", std::move(contributors)}});
  }
  json preds = json::array();
  for (std::size_t i = 0; i < m.prediction_ids.size(); ++i) {
    preds.push_back({{"id", m.prediction_ids[i]}, {"is_true_positive", bool(m.prediction_is_tp[i])}});
  }
  return {{"image_id", m.image_id}, {"ground_truths", std::move(gts)}, {"predictions", std::move(preds)}};
}

}  // namespace bladeqc::wire

#endif  // BLADEQC_WIRE_HPP_
