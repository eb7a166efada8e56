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

#ifndef BLADEQC_ENGINE_HPP_
#define BLADEQC_ENGINE_HPP_

// Command layer over the store. Every mutating command becomes exactly one
// journal event (prediction ingest: one per image) and its response is a
// pure function of the events written, so idempotent replays and restarts
// return the same documents.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bladeqc/analytics.hpp"
#include "bladeqc/clues.hpp"
#include "bladeqc/error.hpp"
#include "bladeqc/metrics.hpp"
#include "bladeqc/records.hpp"
#include "bladeqc/store.hpp"
#include "bladeqc/wire.hpp"
#include "bladeqc/workflow.hpp"

namespace bladeqc {

using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

struct EngineConfig {
  double control_ratio = kDefaultControlRatio;
  std::string arm_salt = std::string(kDefaultArmSalt);
};

struct CommandContext {
  std::string actor = "anonymous";
  std::string idempotency_key;             // empty: not idempotent
  std::optional<std::int64_t> expected_seq;  // last job seq the caller saw
};

// -- evaluation entry point shared by the CLI and the HTTP API ---------------

struct EvalOptions {
  double iou_threshold = kDefaultIouThreshold;
  double score_threshold = kDefaultScoreThreshold;
  bool dump_matches = false;
};

inline nlohmann::json run_eval(const nlohmann::json& doc, const EvalOptions& opt) {
  const auto images = wire::eval_images_from_json(doc);
  if (images.empty()) fail(ErrorCode::validation, "eval input has no images");
  nlohmann::json out = wire::to_json(evaluate_dataset(images, opt.iou_threshold, opt.score_threshold));
  if (opt.dump_matches) {
    nlohmann::json matches = nlohmann::json::array();
    for (const auto& img : images) {
      matches.push_back(wire::to_json(match_image(filter_by_score(img, opt.score_threshold), opt.iou_threshold)));
    }
    out["matches"] = std::move(matches);
  }
  return out;
}

inline nlohmann::json transitions_json() {
  using nlohmann::json;
  json states = json::array();
  for (const auto s : kAllStates) states.push_back(to_string(s));
  json actions = json::array();
  for (const auto a : kImageActions) actions.push_back(to_string(a));
  json rules = json::array();
  for (const auto& r : kTransitionTable) {
    json arms = json::array();
    if (r.control) arms.push_back("control");
    if (r.treatment) arms.push_back("treatment");
    rules.push_back({{"from", to_string(r.from)},
                     {"session_active", r.session_active},
                     {"action", to_string(r.action)},
                     {"to", to_string(r.to)},
                     {"session_after", r.session_after},
                     {"arms", std::move(arms)}});
  }
  // matrix[arm][state(+"*" when a session is open)][action] = next state or null
  json matrix = json::object();
  for (const auto arm : {Arm::control, Arm::treatment}) {
    json per_state = json::object();
    for (const auto s : kAllStates) {
      for (const bool active : {false, true}) {
        json row = json::object();
        for (const auto a : kImageActions) {
          const auto next = transition(ImageFlow{s, active}, arm, a);
          row[std::string(to_string(a))] = next ? json(to_string(next->state)) : json(nullptr);
        }
        per_state[std::string(to_string(s)) + (active ? "*" : "")] = std::move(row);
      }
    }
    matrix[std::string(to_string(arm))] = std::move(per_state);
  }
  return {{"states", std::move(states)}, {"actions", std::move(actions)},
          {"rules", std::move(rules)},   {"matrix", std::move(matrix)}};
}

class QcEngine {
 public:
  explicit QcEngine(Store& store, EngineConfig config = {}, Clock clock = system_clock_ms)
      : store_(store), config_(std::move(config)), clock_(std::move(clock)) {
    // Rebuild idempotency results from the journal.
    std::map<std::string, std::vector<EventRecord>> keyed;
    for (const auto& [id, job] : store_.state().jobs()) {
      for (const auto& e : job.journal) {
        if (const auto k = wire::get_or<std::string>(e.payload, "idempotency_key", ""); !k.empty()) {
          keyed[k].push_back(e);
        }
      }
    }
    for (const auto& [k, events] : keyed) idempotent_[k] = response_for(events);
  }

  const EngineConfig& config() const { return config_; }

  /// Runs f(state) under a shared lock.
  template <typename F>
  auto read(F&& f) const {
    std::shared_lock lock(mutex_);
    return f(store_.state());
  }

  // -- commands -------------------------------------------------------------

  nlohmann::json ingest_job(const nlohmann::json& manifest_doc, const CommandContext& ctx) {
    return command(ctx, [&] {
      wire::Manifest m = wire::manifest_from_json(manifest_doc);
      const StoreState& st = store_.state();
      if (const JobEntry* existing = st.find_job(m.job.job_id)) {
        if (existing->manifest != m.canonical) {
          fail(ErrorCode::conflict, "job '" + m.job.job_id + "' already exists with different content");
        }
        return job_response(existing->journal.front());
      }
      m.job.arm = assign_arm(m.job.job_id, config_.control_ratio, config_.arm_salt);
      if (!m.has_created_at) m.job.created_at = clock_();
      nlohmann::json images = nlohmann::json::array();
      for (const auto& r : m.images) images.push_back(wire::to_json(r));
      nlohmann::json payload = {{"job", wire::to_json(m.job)}, {"manifest", m.canonical}, {"images", images}};
      return job_response(append(m.job.job_id, "", Action::job_ingested, std::move(payload), ctx));
    });
  }

  /// Accepts one prediction document, a list of them, or {"images": [...]}.
  nlohmann::json ingest_predictions(const std::string& job_id, const nlohmann::json& doc, const CommandContext& ctx) {
    return command(ctx, [&] {
      const StoreState& st = store_.state();
      const JobEntry& job = st.job(job_id);
      const nlohmann::json& docs = doc.is_array() ? doc : doc.contains("images") ? wire::at(doc, "images") : doc;
      std::vector<nlohmann::json> list;
      if (docs.is_array()) {
        list.assign(docs.begin(), docs.end());
      } else {
        list.push_back(docs);
      }
      if (list.empty()) fail(ErrorCode::validation, "prediction upload has no images");

      std::vector<std::pair<std::string, nlohmann::json>> prepared;
      std::set<std::string> seen;
      for (const auto& d : list) {
        const auto image_id = wire::get<std::string>(d, "image_id");
        const ImageEntry& img = st.image(image_id);
        if (img.record.job_id != job_id) {
          fail(ErrorCode::validation, "image '" + image_id + "' does not belong to job '" + job_id + "'");
        }
        if (!seen.insert(image_id).second) {
          fail(ErrorCode::validation, "image '" + image_id + "' appears twice in the upload");
        }
        check_legal(img, Action::predictions_ingested, ctx);
        const auto file = wire::prediction_file_from_json(d, img.record.frames);
        const auto clues = generate_clues(file.instances, job.job.score_threshold, img.record.frames);
        std::set<Frame> frames;
        for (const auto& inst : file.instances) frames.insert(inst.frame);
        const std::string received = frames.empty()        ? "none"
                                     : frames.size() > 1   ? "mixed"
                                                           : std::string(to_string(*frames.begin()));
        nlohmann::json cj = nlohmann::json::array();
        for (const auto& c : clues) cj.push_back(wire::to_json(c));
        prepared.emplace_back(image_id, nlohmann::json{{"clues", std::move(cj)},
                                                       {"frame_received", received},
                                                       {"n_instances", file.instances.size()}});
      }
      std::vector<EventRecord> written;
      CommandContext each = ctx;
      for (auto& [image_id, payload] : prepared) {
        written.push_back(append(job_id, image_id, Action::predictions_ingested, std::move(payload), each));
        each.expected_seq.reset();
      }
      return response_for(written);
    });
  }

  nlohmann::json convert_clue(const std::string& image_id, const std::string& clue_id,
                              const std::optional<Polygon>& edited, const std::optional<std::string>& label,
                              const CommandContext& ctx) {
    return command(ctx, [&] {
      const ImageEntry& img = store_.state().image(image_id);
      check_legal(img, edited ? Action::clue_modified : Action::clue_converted, ctx);
      const Clue* clue = img.find_clue(clue_id);
      if (clue == nullptr) fail(ErrorCode::not_found, "unknown clue '" + clue_id + "' on image '" + image_id + "'");
      Annotation a = new_annotation(img, ctx);
      a.polygon = edited ? *edited : clue->rect.to_polygon();
      a.provenance = {edited ? ProvenanceKind::clue_modified : ProvenanceKind::clue_converted, clue_id};
      a.damage_label = label;
      const Action action = edited ? Action::clue_modified : Action::clue_converted;
      return response_for(append(img.record.job_id, image_id, action,
                                 {{"clue_id", clue_id}, {"annotation", wire::to_json(a, false)}}, ctx));
    });
  }

  nlohmann::json dismiss_clue(const std::string& image_id, const std::string& clue_id, const CommandContext& ctx) {
    return command(ctx, [&] {
      const ImageEntry& img = store_.state().image(image_id);
      check_legal(img, Action::clue_dismissed, ctx);
      return response_for(append(img.record.job_id, image_id, Action::clue_dismissed, {{"clue_id", clue_id}}, ctx));
    });
  }

  nlohmann::json draw_annotation(const std::string& image_id, const Polygon& polygon,
                                 const std::optional<std::string>& label, const CommandContext& ctx) {
    return command(ctx, [&] {
      const ImageEntry& img = store_.state().image(image_id);
      Annotation a = new_annotation(img, ctx);
      a.polygon = polygon;
      a.damage_label = label;
      return response_for(append(img.record.job_id, image_id, Action::annotation_drawn,
                                 {{"annotation", wire::to_json(a, false)}}, ctx));
    });
  }

  /// label: nullopt leaves it unchanged; an empty inner optional clears it.
  nlohmann::json edit_annotation(const std::string& image_id, const std::string& annotation_id,
                                 const std::optional<Polygon>& polygon,
                                 const std::optional<std::optional<std::string>>& label, const CommandContext& ctx) {
    return command(ctx, [&] {
      const ImageEntry& img = store_.state().image(image_id);
      const Annotation* old = img.find_annotation(annotation_id);
      if (old == nullptr) fail(ErrorCode::not_found, "unknown annotation '" + annotation_id + "'");
      Annotation a = *old;
      if (polygon) a.polygon = *polygon;
      if (label) a.damage_label = *label;
      return response_for(append(img.record.job_id, image_id, Action::annotation_edited,
                                 {{"annotation", wire::to_json(a, false)}}, ctx));
    });
  }

  nlohmann::json approve_annotation(const std::string& image_id, const std::string& annotation_id,
                                    const CommandContext& ctx) {
    return command(ctx, [&] {
      const ImageEntry& img = store_.state().image(image_id);
      const Annotation* old = img.find_annotation(annotation_id);
      if (old == nullptr) fail(ErrorCode::not_found, "unknown annotation '" + annotation_id + "'");
      return response_for(append(img.record.job_id, image_id, Action::annotation_approved,
                                 {{"annotation_id", annotation_id}}, ctx));
    });
  }

  /// qc1_open, qc1_close, qc1_complete and the qc2 equivalents.
  nlohmann::json qc_step(const std::string& image_id, Action action, const CommandContext& ctx) {
    if (!is_session_action(action)) {
      fail(ErrorCode::validation, "'" + std::string(to_string(action)) + "' is not a QC session action");
    }
    return command(ctx, [&] {
      const ImageEntry& img = store_.state().image(image_id);
      return response_for(append(img.record.job_id, image_id, action, nlohmann::json::object(), ctx));
    });
  }

  nlohmann::json flag_missed(const std::string& image_id, const std::optional<std::string>& note,
                             const CommandContext& ctx) {
    return command(ctx, [&] {
      const ImageEntry& img = store_.state().image(image_id);
      nlohmann::json payload = nlohmann::json::object();
      if (note) payload["note"] = *note;
      return response_for(append(img.record.job_id, image_id, Action::missed_damage_flagged, std::move(payload), ctx));
    });
  }

  // -- reads ----------------------------------------------------------------

  nlohmann::json job_view(const std::string& job_id) const {
    return read([&](const StoreState& st) {
      const JobEntry& job = st.job(job_id);
      nlohmann::json images = nlohmann::json::array();
      std::int64_t missed = 0;
      for (const auto& id : job.job.image_ids) {
        const ImageEntry& img = st.image(id);
        missed += img.missed_damages;
        images.push_back(image_summary(img));
      }
      return nlohmann::json{{"job", wire::to_json(job.job)},
                            {"images", std::move(images)},
                            {"missed_damages", missed},
                            {"last_seq", job.last_seq()}};
    });
  }

  nlohmann::json image_view(const std::string& image_id) const {
    return read([&](const StoreState& st) {
      const ImageEntry& img = st.image(image_id);
      nlohmann::json j = image_summary(img);
      j["record"] = wire::to_json(img.record);
      j["arm"] = to_string(st.job(img.record.job_id).job.arm);
      j["last_seq"] = st.job(img.record.job_id).last_seq();
      return j;
    });
  }

  nlohmann::json clues_view(const std::string& image_id) const {
    return read([&](const StoreState& st) {
      const ImageEntry& img = st.image(image_id);
      nlohmann::json clues = nlohmann::json::array();
      for (const auto& c : img.clues) clues.push_back(wire::to_json(c));
      return nlohmann::json{{"image_id", image_id},
                            {"arm", to_string(st.job(img.record.job_id).job.arm)},
                            {"state", to_string(img.flow.state)},
                            {"session_active", img.flow.session_active},
                            {"clues", std::move(clues)}};
    });
  }

  nlohmann::json annotations_view(const std::string& image_id) const {
    return read([&](const StoreState& st) {
      const ImageEntry& img = st.image(image_id);
      return wire::annotation_export(image_id, img.annotations);
    });
  }

  /// Given job: that job. Otherwise every treatment job past QC1.
  std::vector<ConversionRow> conversion(const std::optional<std::string>& job_id) const {
    return read([&](const StoreState& st) {
      std::vector<JobActivity> jobs;
      if (job_id) {
        jobs.push_back(job_activity(st, *job_id));
      } else {
        for (auto& j : all_job_activity(st)) {
          if (j.arm == Arm::treatment && j.all_at_least(WorkflowState::qc1_done)) jobs.push_back(std::move(j));
        }
      }
      return conversion_table(jobs);
    });
  }

  /// Terminal jobs only; an arm filter narrows further.
  ProductivityReport productivity(std::optional<Arm> arm) const {
    return read([&](const StoreState& st) { return productivity_report(terminal_jobs(st), arm); });
  }

  ArmComparison comparison() const {
    return read([&](const StoreState& st) { return arm_comparison(terminal_jobs(st)); });
  }

 private:
  static bool is_session_action(Action a) {
    switch (a) {
      case Action::qc1_open:
      case Action::qc1_close:
      case Action::qc1_complete:
      case Action::qc2_open:
      case Action::qc2_close:
      case Action::qc2_complete:
        return true;
      default:
        return false;
    }
  }

  static std::vector<JobActivity> terminal_jobs(const StoreState& st) {
    std::vector<JobActivity> out;
    for (auto& j : all_job_activity(st)) {
      if (j.terminal()) out.push_back(std::move(j));
    }
    return out;
  }

  static nlohmann::json image_summary(const ImageEntry& img) {
    return {{"image_id", img.record.image_id},
            {"job_id", img.record.job_id},
            {"file_ref", img.record.file_ref},
            {"state", to_string(img.flow.state)},
            {"session_active", img.flow.session_active},
            {"n_clues", img.clues.size()},
            {"n_annotations", img.annotations.size()},
            {"missed_damages", img.missed_damages},
            {"prediction_frame", img.prediction_frame ? nlohmann::json(*img.prediction_frame) : nlohmann::json()}};
  }

  /// Throws the workflow's own rejection if `action` is illegal right now.
  void check_legal(const ImageEntry& img, Action action, const CommandContext& ctx) const {
    const Arm arm = store_.state().job(img.record.job_id).job.arm;
    if (!transition(img.flow, arm, action)) {
      apply_event(img.flow, arm, EventRecord{0, img.record.job_id, img.record.image_id, ctx.actor, 0, action, {}});
    }
  }

  Annotation new_annotation(const ImageEntry& img, const CommandContext& ctx) const {
    Annotation a{.annotation_id = "a" + std::to_string(img.annotations.size() + 1),
                 .image_id = img.record.image_id,
                 .polygon = Polygon({{0, 0}, {1, 0}, {0, 1}}),
                 .provenance = {},
                 .damage_label = std::nullopt,
                 .author = ctx.actor,
                 .stage = img.flow.state == WorkflowState::qc2_open ? Stage::qc2 : Stage::qc1,
                 .created_at = clock_(),
                 .approved = false};
    return a;
  }

  template <typename F>
  nlohmann::json command(const CommandContext& ctx, F&& f) {
    std::unique_lock lock(mutex_);
    if (!ctx.idempotency_key.empty()) {
      if (const auto it = idempotent_.find(ctx.idempotency_key); it != idempotent_.end()) return it->second;
    }
    nlohmann::json result = f();
    if (!ctx.idempotency_key.empty()) idempotent_[ctx.idempotency_key] = result;
    return result;
  }

  EventRecord append(const std::string& job_id, const std::string& image_id, Action action, nlohmann::json payload,
                     const CommandContext& ctx) {
    EventRecord e;
    e.job_id = job_id;
    e.image_id = image_id;
    e.actor = ctx.actor;
    e.timestamp_ms = clock_();
    e.action = action;
    e.seq = (ctx.expected_seq ? *ctx.expected_seq : store_.state().last_seq(job_id)) + 1;
    if (!ctx.idempotency_key.empty()) payload["idempotency_key"] = ctx.idempotency_key;
    e.payload = std::move(payload);
    store_.append(e);
    return e;
  }

  static nlohmann::json event_header(const EventRecord& e) {
    return {{"job_id", e.job_id}, {"image_id", e.image_id}, {"seq", e.seq}, {"action", to_string(e.action)}};
  }

  static nlohmann::json job_response(const EventRecord& e) {
    return {{"job", e.payload.at("job")}, {"images", e.payload.at("images")}};
  }

  static nlohmann::json response_for(const std::vector<EventRecord>& events) {
    if (events.empty()) return nlohmann::json::object();
    if (events.front().action == Action::predictions_ingested) {
      nlohmann::json images = nlohmann::json::array();
      for (const auto& e : events) {
        images.push_back({{"image_id", e.image_id},
                          {"seq", e.seq},
                          {"frame_received", e.payload.at("frame_received")},
                          {"clues", e.payload.at("clues")}});
      }
      return {{"job_id", events.front().job_id}, {"images", std::move(images)}};
    }
    return response_for(events.front());
  }

  static nlohmann::json response_for(const EventRecord& e) {
    using nlohmann::json;
    switch (e.action) {
      case Action::job_ingested:
        return job_response(e);
      case Action::predictions_ingested:
        return response_for(std::vector<EventRecord>{e});
      case Action::clue_converted:
      case Action::clue_modified:
      case Action::annotation_drawn:
      case Action::annotation_edited: {
        json a = e.payload.at("annotation");
        a["image_id"] = e.image_id;
        return {{"event", event_header(e)}, {"annotation", std::move(a)}};
      }
      case Action::clue_dismissed:
        return {{"event", event_header(e)}, {"clue_id", e.payload.at("clue_id")}, {"status", "dismissed"}};
      case Action::annotation_approved:
        return {{"event", event_header(e)}, {"annotation_id", e.payload.at("annotation_id")}, {"approved", true}};
      default: {
        // Each session action has a single target in the transition table.
        json out = {{"event", event_header(e)}};
        for (const auto& r : kTransitionTable) {
          if (r.action == e.action) {
            out["state"] = to_string(r.to);
            out["session_active"] = r.session_after;
            break;
          }
        }
        if (e.payload.contains("note")) out["note"] = e.payload["note"];
        return out;
      }
    }
  }

  Store& store_;
  EngineConfig config_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, nlohmann::json> idempotent_;
};

}  // namespace bladeqc

#endif  // BLADEQC_ENGINE_HPP_
