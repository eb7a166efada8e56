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

#ifndef BLADEQC_RECORDS_HPP_
#define BLADEQC_RECORDS_HPP_

// Persistent entities of an inspection: jobs, images and annotations.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bladeqc/error.hpp"
#include "bladeqc/frames.hpp"
#include "bladeqc/geometry.hpp"
#include "bladeqc/workflow.hpp"

namespace bladeqc {

/// One turbine inspection; the unit of A/B assignment.
struct InspectionJob {
  std::string job_id;
  std::string turbine_id;
  Arm arm = Arm::control;
  std::vector<std::string> image_ids;
  std::int64_t created_at = 0;  // ms since epoch
  double score_threshold = 0.5;

  friend bool operator==(const InspectionJob&, const InspectionJob&) = default;
};

struct ImageRecord {
  std::string image_id;
  std::string job_id;
  std::string file_ref;  // opaque; image bytes are never read here
  ImageFrames frames;
  nlohmann::json metadata = nlohmann::json::object();

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

inline Point2 to_native(Point2 working_point, const ImageRecord& img) {
  return to_native(working_point, img.frames);
}
inline Point2 to_working(Point2 native_point, const ImageRecord& img) {
  return to_working(native_point, img.frames);
}

enum class Stage { qc1, qc2 };

inline std::string_view to_string(Stage s) { return s == Stage::qc1 ? "qc1" : "qc2"; }
inline Stage parse_stage(std::string_view s) {
  if (s == "qc1") return Stage::qc1;
  if (s == "qc2") return Stage::qc2;
  fail(ErrorCode::validation, "unknown stage '" + std::string(s) + "'");
}

enum class ProvenanceKind { manual, clue_converted, clue_modified };

inline std::string_view to_string(ProvenanceKind k) {
  switch (k) {
    case ProvenanceKind::manual: return "manual";
    case ProvenanceKind::clue_converted: return "clue_converted";
    case ProvenanceKind::clue_modified: return "clue_modified";
  }
  return "manual";
}

inline ProvenanceKind parse_provenance_kind(std::string_view s) {
  if (s == "manual") return ProvenanceKind::manual;
  if (s == "clue_converted") return ProvenanceKind::clue_converted;
  if (s == "clue_modified") return ProvenanceKind::clue_modified;
  fail(ErrorCode::validation, "unknown provenance '" + std::string(s) + "'");
}

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::manual;
  std::string clue_id;  // set for clue_* kinds

  bool from_clue() const { return kind != ProvenanceKind::manual; }
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Annotation {
  std::string annotation_id;  // unique within its image
  std::string image_id;
  Polygon polygon;  // native frame
  Provenance provenance;
  std::optional<std::string> damage_label;  // only ever set by a human
  std::string author;
  Stage stage = Stage::qc1;
  std::int64_t created_at = 0;
  bool approved = false;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

}  // namespace bladeqc

#endif  // BLADEQC_RECORDS_HPP_
