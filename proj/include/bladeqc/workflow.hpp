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

#ifndef BLADEQC_WORKFLOW_HPP_
#define BLADEQC_WORKFLOW_HPP_

// Per-image QC process: ingest -> (predictions -> clue review) -> QC1 -> QC2,
// with A/B arm assignment per inspection job. Control-arm images never see
// clues and go straight from INGESTED to QC1.
//
// Besides its WorkflowState an image carries a session flag: whether an
// analyst currently has it open. QC stages are entered by the first *_open,
// and *_complete is only legal once the session is closed again.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bladeqc/error.hpp"

namespace bladeqc {

enum class Arm { control, treatment };

inline std::string_view to_string(Arm a) { return a == Arm::control ? "control" : "treatment"; }

inline Arm parse_arm(std::string_view s) {
  if (s == "control") return Arm::control;
  if (s == "treatment") return Arm::treatment;
  fail(ErrorCode::validation, "unknown arm '" + std::string(s) + "'");
}

inline constexpr double kDefaultControlRatio = 0.8;
inline constexpr std::string_view kDefaultArmSalt = "bladeqc-ab-v1";

/// FNV-1a over "salt\0job_id" followed by the splitmix64 finalizer.
inline std::uint64_t stable_hash64(std::string_view salt, std::string_view job_id) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ull;
  };
  for (const char c : salt) mix(static_cast<unsigned char>(c));
  mix(0);
  for (const char c : job_id) mix(static_cast<unsigned char>(c));
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

/// Deterministic bucketing: hash scaled to [0, 1); below ratio -> control.
inline Arm assign_arm(std::string_view job_id, double control_ratio = kDefaultControlRatio,
                      std::string_view salt = kDefaultArmSalt) {
  if (!(control_ratio > 0.0 && control_ratio < 1.0)) {
    fail(ErrorCode::validation, "control ratio must lie in (0, 1)");
  }
  const double u = static_cast<double>(stable_hash64(salt, job_id) >> 11) * 0x1.0p-53;
  return u < control_ratio ? Arm::control : Arm::treatment;
}

enum class WorkflowState { ingested, predicted, qc1_open, qc1_done, qc2_open, qc2_done };

inline constexpr std::array kAllStates = {WorkflowState::ingested, WorkflowState::predicted,
                                          WorkflowState::qc1_open, WorkflowState::qc1_done,
                                          WorkflowState::qc2_open, WorkflowState::qc2_done};

inline std::string_view to_string(WorkflowState s) {
  switch (s) {
    case WorkflowState::ingested: return "INGESTED";
    case WorkflowState::predicted: return "PREDICTED";
    case WorkflowState::qc1_open: return "QC1_OPEN";
    case WorkflowState::qc1_done: return "QC1_DONE";
    case WorkflowState::qc2_open: return "QC2_OPEN";
    case WorkflowState::qc2_done: return "QC2_DONE";
  }
  return "INGESTED";
}

inline WorkflowState parse_state(std::string_view s) {
  for (const auto st : kAllStates) {
    if (to_string(st) == s) return st;
  }
  fail(ErrorCode::validation, "unknown workflow state '" + std::string(s) + "'");
}

enum class Action {
  job_ingested,  // job-level, not part of the image transition table
  predictions_ingested,
  qc1_open,
  clue_converted,
  clue_modified,
  clue_dismissed,
  annotation_drawn,
  annotation_edited,
  qc1_close,
  qc1_complete,
  qc2_open,
  annotation_approved,
  missed_damage_flagged,
  qc2_close,
  qc2_complete,
};

inline constexpr std::array kImageActions = {
    Action::predictions_ingested, Action::qc1_open,          Action::clue_converted,
    Action::clue_modified,        Action::clue_dismissed,    Action::annotation_drawn,
    Action::annotation_edited,    Action::qc1_close,         Action::qc1_complete,
    Action::qc2_open,             Action::annotation_approved, Action::missed_damage_flagged,
    Action::qc2_close,            Action::qc2_complete};

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::job_ingested: return "job_ingested";
    case Action::predictions_ingested: return "predictions_ingested";
    case Action::qc1_open: return "qc1_open";
    case Action::clue_converted: return "clue_converted";
    case Action::clue_modified: return "clue_modified";
    case Action::clue_dismissed: return "clue_dismissed";
    case Action::annotation_drawn: return "annotation_drawn";
    case Action::annotation_edited: return "annotation_edited";
    case Action::qc1_close: return "qc1_close";
    case Action::qc1_complete: return "qc1_complete";
    case Action::qc2_open: return "qc2_open";
    case Action::annotation_approved: return "annotation_approved";
    case Action::missed_damage_flagged: return "missed_damage_flagged";
    case Action::qc2_close: return "qc2_close";
    case Action::qc2_complete: return "qc2_complete";
  }
  return "job_ingested";
}

inline Action parse_action(std::string_view s) {
  if (s == "job_ingested") return Action::job_ingested;
  for (const auto a : kImageActions) {
    if (to_string(a) == s) return a;
  }
  fail(ErrorCode::validation, "unknown action '" + std::string(s) + "'");
}

struct ImageFlow {
  WorkflowState state = WorkflowState::ingested;
  bool session_active = false;
  friend bool operator==(const ImageFlow&, const ImageFlow&) = default;
};

struct TransitionRule {
  WorkflowState from;
  bool session_active;
  Action action;
  WorkflowState to;
  bool session_after;
  bool control;    // legal on control-arm images
  bool treatment;  // legal on treatment-arm images
};

namespace detail {
using S = WorkflowState;
using A = Action;
}  // namespace detail

// clang-format off
inline constexpr std::array<TransitionRule, 19> kTransitionTable = {{
  {detail::S::ingested,  false, detail::A::predictions_ingested,  detail::S::predicted, false, false, true},
  {detail::S::ingested,  false, detail::A::qc1_open,              detail::S::qc1_open,  true,  true,  false},
  {detail::S::predicted, false, detail::A::qc1_open,              detail::S::qc1_open,  true,  false, true},
  {detail::S::qc1_open,  true,  detail::A::clue_converted,        detail::S::qc1_open,  true,  false, true},
  {detail::S::qc1_open,  true,  detail::A::clue_modified,         detail::S::qc1_open,  true,  false, true},
  {detail::S::qc1_open,  true,  detail::A::clue_dismissed,        detail::S::qc1_open,  true,  false, true},
  {detail::S::qc1_open,  true,  detail::A::annotation_drawn,      detail::S::qc1_open,  true,  true,  true},
  {detail::S::qc1_open,  true,  detail::A::annotation_edited,     detail::S::qc1_open,  true,  true,  true},
  {detail::S::qc1_open,  true,  detail::A::qc1_close,             detail::S::qc1_open,  false, true,  true},
  {detail::S::qc1_open,  false, detail::A::qc1_open,              detail::S::qc1_open,  true,  true,  true},
  {detail::S::qc1_open,  false, detail::A::qc1_complete,          detail::S::qc1_done,  false, true,  true},
  {detail::S::qc1_done,  false, detail::A::qc2_open,              detail::S::qc2_open,  true,  true,  true},
  {detail::S::qc2_open,  true,  detail::A::annotation_approved,   detail::S::qc2_open,  true,  true,  true},
  {detail::S::qc2_open,  true,  detail::A::missed_damage_flagged, detail::S::qc2_open,  true,  true,  true},
  {detail::S::qc2_open,  true,  detail::A::annotation_drawn,      detail::S::qc2_open,  true,  true,  true},
  {detail::S::qc2_open,  true,  detail::A::annotation_edited,     detail::S::qc2_open,  true,  true,  true},
  {detail::S::qc2_open,  true,  detail::A::qc2_close,             detail::S::qc2_open,  false, true,  true},
  {detail::S::qc2_open,  false, detail::A::qc2_open,              detail::S::qc2_open,  true,  true,  true},
  {detail::S::qc2_open,  false, detail::A::qc2_complete,          detail::S::qc2_done,  false, true,  true},
}};
// clang-format on

inline const TransitionRule* find_rule(ImageFlow flow, Action action) {
  for (const auto& r : kTransitionTable) {
    if (r.from == flow.state && r.session_active == flow.session_active && r.action == action) {
      return &r;
    }
  }
  return nullptr;
}

/// Next flow, or nullopt when (state, session, arm, action) is not legal.
inline std::optional<ImageFlow> transition(ImageFlow flow, Arm arm, Action action) {
  const TransitionRule* r = find_rule(flow, action);
  if (r == nullptr) return std::nullopt;
  if (!(arm == Arm::control ? r->control : r->treatment)) return std::nullopt;
  return ImageFlow{r->to, r->session_after};
}

struct EventRecord {
  std::int64_t seq = 0;  // per job, starting at 1
  std::string job_id;
  std::string image_id;  // empty for job-level events
  std::string actor;
  std::int64_t timestamp_ms = 0;
  Action action = Action::job_ingested;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

inline bool is_clue_action(Action a) {
  return a == Action::predictions_ingested || a == Action::clue_converted ||
         a == Action::clue_modified || a == Action::clue_dismissed;
}

inline std::string describe(ImageFlow flow) {
  return std::string(to_string(flow.state)) + (flow.session_active ? " (session open)" : "");
}

/// Validates the event against the transition table and returns the new
/// flow. Rejections name the current state and the attempted action.
inline ImageFlow apply_event(ImageFlow flow, Arm arm, const EventRecord& e) {
  if (e.action == Action::job_ingested) {
    fail(ErrorCode::illegal_transition, "job_ingested is not an image transition");
  }
  if (auto next = transition(flow, arm, e.action)) return *next;
  if (arm == Arm::control && is_clue_action(e.action)) {
    fail(ErrorCode::illegal_transition,
         "rejected " + std::string(to_string(e.action)) + ": clue actions are not available on "
         "control-arm images",
         "state " + describe(flow));
  }
  fail(ErrorCode::illegal_transition,
       "illegal transition: " + std::string(to_string(e.action)) + " in state " + describe(flow));
}

struct QcDurations {
  std::int64_t qc1_ms = 0;
  std::int64_t qc2_ms = 0;
  double qc1_minutes() const { return double(qc1_ms) / 60000.0; }
  double qc2_minutes() const { return double(qc2_ms) / 60000.0; }
};

/// Sums (close - open) intervals per stage for one image's events.
inline QcDurations qc_durations(std::span<const EventRecord> events) {
  QcDurations d;
  std::optional<std::int64_t> open1, open2;
  const std::string* image = nullptr;
  auto interval = [](std::optional<std::int64_t>& open, std::int64_t now, std::int64_t& total,
                     bool opening, std::string_view stage) {
    if (opening) {
      if (open) fail(ErrorCode::validation, std::string(stage) + " opened twice without close");
      open = now;
      return;
    }
    if (!open) fail(ErrorCode::validation, std::string(stage) + " closed without open");
    if (now < *open) fail(ErrorCode::validation, std::string(stage) + " closed before it opened");
    total += now - *open;
    open.reset();
  };
  for (const auto& e : events) {
    if (image == nullptr) {
      image = &e.image_id;
    } else if (e.image_id != *image) {
      fail(ErrorCode::validation, "qc_durations expects events of a single image");
    }
    switch (e.action) {
      case Action::qc1_open: interval(open1, e.timestamp_ms, d.qc1_ms, true, "qc1"); break;
      case Action::qc1_close: interval(open1, e.timestamp_ms, d.qc1_ms, false, "qc1"); break;
      case Action::qc2_open: interval(open2, e.timestamp_ms, d.qc2_ms, true, "qc2"); break;
      case Action::qc2_close: interval(open2, e.timestamp_ms, d.qc2_ms, false, "qc2"); break;
      default: break;
    }
  }
  if (open1 || open2) {
    fail(ErrorCode::validation, "image not yet closed: dangling QC session");
  }
  return d;
}

}  // namespace bladeqc

#endif  // BLADEQC_WORKFLOW_HPP_
