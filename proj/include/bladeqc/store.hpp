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

#ifndef BLADEQC_STORE_HPP_
#define BLADEQC_STORE_HPP_

// Event-sourced inspection store. The journal (one JSON record per line) is
// the only source of truth; StoreState is derived by applying events in
// order, so replaying a journal from empty reproduces the state exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bladeqc/clues.hpp"
#include "bladeqc/error.hpp"
#include "bladeqc/records.hpp"
#include "bladeqc/wire.hpp"
#include "bladeqc/workflow.hpp"

namespace bladeqc {

// -- dataset split ----------------------------------------------------------

enum class Split { train, val, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

struct DatasetSplit {
  std::map<std::string, Split> assignment;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};  // train, val, test
  std::array<std::size_t, 3> counts{};
};

/// Largest-remainder apportionment of n items; ties go to the earlier split.
inline std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rest{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * double(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rest[i] = exact - double(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rest[a] > rest[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

/// Seeded shuffle (Fisher-Yates over mt19937_64 with rejection sampling, so
/// the permutation is identical on every platform) then a largest-remainder
/// cut. Input order does not matter: ids are sorted first.
inline DatasetSplit split_dataset(std::span<const std::string> image_ids,
                                  std::array<double, 3> ratios = {0.8, 0.1, 0.1},
                                  std::uint64_t seed = 0) {
  if (image_ids.empty()) fail(ErrorCode::validation, "split needs at least one image id");
  double sum = 0.0;
  for (const double r : ratios) {
    if (!(r >= 0.0)) fail(ErrorCode::validation, "split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::validation, "split ratios must sum to 1");

  std::vector<std::string> ids(image_ids.begin(), image_ids.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    fail(ErrorCode::validation, "split ids must be unique");
  }
  std::mt19937_64 rng(seed);
  auto bounded = [&](std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = rng();
    } while (x >= limit);
    return x % n;
  };
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[bounded(i + 1)]);
  }

  DatasetSplit out;
  out.seed = seed;
  out.ratios = ratios;
  out.counts = largest_remainder(ids.size(), ratios);
  std::size_t pos = 0;
  for (int s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < out.counts[s]; ++k) out.assignment[ids[pos++]] = Split(s);
  }
  return out;
}

// -- derived state ----------------------------------------------------------

struct ImageEntry {
  ImageRecord record;
  ImageFlow flow;
  std::vector<Clue> clues;
  std::vector<Annotation> annotations;
  std::int64_t missed_damages = 0;
  std::optional<std::string> prediction_frame;  // "native", "working" or "mixed"
  std::vector<std::int64_t> event_seqs;         // image-level seqs in the job journal

  const Clue* find_clue(const std::string& id) const {
    for (const auto& c : clues) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }
  const Annotation* find_annotation(const std::string& id) const {
    for (const auto& a : annotations) {
      if (a.annotation_id == id) return &a;
    }
    return nullptr;
  }
};

struct JobEntry {
  InspectionJob job;
  nlohmann::json manifest;
  std::vector<EventRecord> journal;

  std::int64_t last_seq() const { return static_cast<std::int64_t>(journal.size()); }
};

class StoreState {
 public:
  const std::map<std::string, JobEntry>& jobs() const { return jobs_; }
  const std::map<std::string, ImageEntry>& images() const { return images_; }

  const JobEntry* find_job(const std::string& id) const {
    const auto it = jobs_.find(id);
    return it == jobs_.end() ? nullptr : &it->second;
  }
  const ImageEntry* find_image(const std::string& id) const {
    const auto it = images_.find(id);
    return it == images_.end() ? nullptr : &it->second;
  }
  const JobEntry& job(const std::string& id) const {
    if (const auto* j = find_job(id)) return *j;
    fail(ErrorCode::not_found, "unknown job '" + id + "'");
  }
  const ImageEntry& image(const std::string& id) const {
    if (const auto* i = find_image(id)) return *i;
    fail(ErrorCode::not_found, "unknown image '" + id + "'");
  }

  std::int64_t last_seq(const std::string& job_id) const {
    const auto* j = find_job(job_id);
    return j == nullptr ? 0 : j->last_seq();
  }

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& [id, j] : jobs_) n += j.journal.size();
    return n;
  }

  std::vector<EventRecord> image_events(const std::string& image_id) const {
    const ImageEntry& img = image(image_id);
    const JobEntry& j = job(img.record.job_id);
    std::vector<EventRecord> out;
    out.reserve(img.event_seqs.size());
    for (const auto seq : img.event_seqs) out.push_back(j.journal[static_cast<std::size_t>(seq - 1)]);
    return out;
  }

  /// Validates then applies. Throws without modifying state on rejection.
  void apply(const EventRecord& e) { commit(prepare(e)); }

  /// Throws if e cannot be applied to the current state.
  void validate(const EventRecord& e) const { (void)prepare(e); }

  /// Canonical JSON of the entire derived state (keys sorted).
  nlohmann::json to_json() const {
    using nlohmann::json;
    json jobs = json::object();
    for (const auto& [id, j] : jobs_) {
      jobs[id] = {{"job", wire::to_json(j.job)}, {"manifest", j.manifest}, {"last_seq", j.last_seq()}};
    }
    json images = json::object();
    for (const auto& [id, img] : images_) {
      json clues = json::array();
      for (const auto& c : img.clues) clues.push_back(wire::to_json(c));
      json anns = json::array();
      for (const auto& a : img.annotations) anns.push_back(wire::to_json(a));
      images[id] = {{"record", wire::to_json(img.record)},
                    {"state", to_string(img.flow.state)},
                    {"session_active", img.flow.session_active},
                    {"clues", std::move(clues)},
                    {"annotations", std::move(anns)},
                    {"missed_damages", img.missed_damages},
                    {"prediction_frame", img.prediction_frame ? json(*img.prediction_frame) : json()},
                    {"event_seqs", img.event_seqs}};
    }
    return {{"jobs", std::move(jobs)}, {"images", std::move(images)}};
  }

 private:
  struct Prepared {
    const EventRecord* event = nullptr;
    ImageEntry* image = nullptr;
    ImageFlow next_flow;
    std::optional<wire::Manifest> manifest;
    InspectionJob job;
    std::vector<Clue> clues;
    std::optional<std::string> frame;
    std::optional<Annotation> annotation;  // added, or replacing one with the same id
    std::string clue_id;
    ClueStatus clue_status = ClueStatus::proposed;
  };

  static void check_in_native_frame(const Polygon& p, const ImageRecord& r) {
    for (const auto& v : p.vertices()) {
      if (v.x < 0.0 || v.y < 0.0 || v.x > r.frames.native.width || v.y > r.frames.native.height) {
        fail(ErrorCode::validation, "annotation polygon lies outside the native frame of '" +
                                        r.image_id + "'");
      }
    }
  }

  static bool polygon_is_rect(const Polygon& p, const RotatedRect& r) {
    const auto& v = p.vertices();
    return v.size() == 4 && std::equal(v.begin(), v.end(), r.corners().begin());
  }

  Prepared prepare(const EventRecord& e) const {
    Prepared p;
    p.event = &e;
    const JobEntry* job = find_job(e.job_id);

    if (e.action == Action::job_ingested) {
      if (job != nullptr) fail(ErrorCode::conflict, "job '" + e.job_id + "' already exists");
      if (e.seq != 1) fail(ErrorCode::conflict, "stale expected sequence for job '" + e.job_id + "'");
      p.job = wire::job_from_json(wire::at(e.payload, "job"));
      if (p.job.job_id != e.job_id) fail(ErrorCode::validation, "job payload does not match job_id");
      p.manifest = wire::Manifest{};
      p.manifest->canonical = wire::at(e.payload, "manifest");
      const auto& imgs = wire::at(e.payload, "images");
      if (!imgs.is_array() || imgs.empty()) fail(ErrorCode::validation, "job needs at least one image");
      std::vector<std::string> ids;
      for (const auto& ij : imgs) {
        ImageRecord r = wire::image_from_json(ij, "");
        if (r.job_id != e.job_id) fail(ErrorCode::validation, "image belongs to another job");
        if (find_image(r.image_id) != nullptr) {
          fail(ErrorCode::conflict, "image '" + r.image_id + "' is already registered");
        }
        ids.push_back(r.image_id);
        p.manifest->images.push_back(std::move(r));
      }
      if (ids != p.job.image_ids) fail(ErrorCode::validation, "job image list does not match images");
      if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
        fail(ErrorCode::validation, "duplicate image ids in job");
      }
      return p;
    }

    if (job == nullptr) fail(ErrorCode::not_found, "unknown job '" + e.job_id + "'");
    if (e.seq != job->last_seq() + 1) {
      fail(ErrorCode::conflict, "stale expected sequence for job '" + e.job_id + "'",
           "expected " + std::to_string(job->last_seq() + 1) + ", got " + std::to_string(e.seq));
    }
    const auto it = images_.find(e.image_id);
    if (it == images_.end()) fail(ErrorCode::not_found, "unknown image '" + e.image_id + "'");
    if (it->second.record.job_id != e.job_id) {
      fail(ErrorCode::validation, "image '" + e.image_id + "' does not belong to job '" + e.job_id + "'");
    }
    p.image = const_cast<ImageEntry*>(&it->second);
    const ImageEntry& img = it->second;
    p.next_flow = apply_event(img.flow, job->job.arm, e);

    auto proposed_clue = [&](const std::string& clue_id) -> const Clue& {
      const Clue* c = img.find_clue(clue_id);
      if (c == nullptr) fail(ErrorCode::not_found, "unknown clue '" + clue_id + "' on image '" + e.image_id + "'");
      if (c->status != ClueStatus::proposed) {
        fail(ErrorCode::conflict, "clue '" + clue_id + "' is already " + std::string(to_string(c->status)));
      }
      return *c;
    };
    auto new_annotation = [&](ProvenanceKind kind) {
      Annotation a = wire::annotation_from_json(wire::at(e.payload, "annotation"), e.image_id);
      if (a.image_id != e.image_id) fail(ErrorCode::validation, "annotation belongs to another image");
      if (img.find_annotation(a.annotation_id) != nullptr) {
        fail(ErrorCode::conflict, "annotation '" + a.annotation_id + "' already exists");
      }
      if (a.provenance.kind != kind) fail(ErrorCode::validation, "annotation provenance does not match action");
      const Stage stage = img.flow.state == WorkflowState::qc1_open ? Stage::qc1 : Stage::qc2;
      if (a.stage != stage) fail(ErrorCode::validation, "annotation stage does not match the open stage");
      return a;
    };

    switch (e.action) {
      case Action::predictions_ingested: {
        const auto& list = wire::at(e.payload, "clues");
        if (!list.is_array()) fail(ErrorCode::validation, "clues must be a list");
        std::set<std::string> ids;
        for (const auto& cj : list) {
          Clue c = wire::clue_from_json(cj);
          if (c.image_id != e.image_id) fail(ErrorCode::validation, "clue belongs to another image");
          if (c.status != ClueStatus::proposed) fail(ErrorCode::validation, "new clues must be proposed");
          if (!ids.insert(c.id).second) fail(ErrorCode::validation, "duplicate clue id '" + c.id + "'");
          p.clues.push_back(std::move(c));
        }
        p.frame = wire::get_or<std::string>(e.payload, "frame_received", "native");
        break;
      }
      case Action::clue_converted: {
        p.clue_id = wire::get<std::string>(e.payload, "clue_id");
        const Clue& c = proposed_clue(p.clue_id);
        Annotation a = new_annotation(ProvenanceKind::clue_converted);
        if (a.provenance.clue_id != c.id || !polygon_is_rect(a.polygon, c.rect)) {
          fail(ErrorCode::validation, "converted annotation must reproduce the clue corners");
        }
        p.clue_status = ClueStatus::converted;
        p.annotation = std::move(a);
        break;
      }
      case Action::clue_modified: {
        p.clue_id = wire::get<std::string>(e.payload, "clue_id");
        const Clue& c = proposed_clue(p.clue_id);
        Annotation a = new_annotation(ProvenanceKind::clue_modified);
        if (a.provenance.clue_id != c.id) fail(ErrorCode::validation, "annotation references another clue");
        check_in_native_frame(a.polygon, img.record);
        p.clue_status = ClueStatus::modified;
        p.annotation = std::move(a);
        break;
      }
      case Action::clue_dismissed:
        p.clue_id = wire::get<std::string>(e.payload, "clue_id");
        proposed_clue(p.clue_id);
        p.clue_status = ClueStatus::dismissed;
        break;
      case Action::annotation_drawn: {
        Annotation a = new_annotation(ProvenanceKind::manual);
        check_in_native_frame(a.polygon, img.record);
        p.annotation = std::move(a);
        break;
      }
      case Action::annotation_edited: {
        Annotation a = wire::annotation_from_json(wire::at(e.payload, "annotation"), e.image_id);
        const Annotation* old = a.image_id == e.image_id ? img.find_annotation(a.annotation_id) : nullptr;
        if (old == nullptr) fail(ErrorCode::not_found, "unknown annotation '" + a.annotation_id + "'");
        if (a.provenance != old->provenance || a.author != old->author || a.stage != old->stage ||
            a.created_at != old->created_at || a.approved != old->approved) {
          fail(ErrorCode::validation, "only polygon and damage_label can be edited");
        }
        if (a.polygon != old->polygon) check_in_native_frame(a.polygon, img.record);
        p.annotation = std::move(a);
        break;
      }
      case Action::annotation_approved: {
        const auto id = wire::get<std::string>(e.payload, "annotation_id");
        const Annotation* old = img.find_annotation(id);
        if (old == nullptr) fail(ErrorCode::not_found, "unknown annotation '" + id + "'");
        Annotation a = *old;
        a.approved = true;
        p.annotation = std::move(a);
        break;
      }
      default:
        break;
    }
    return p;
  }

  void commit(Prepared p) {
    const EventRecord& e = *p.event;
    if (e.action == Action::job_ingested) {
      JobEntry entry{p.job, p.manifest->canonical, {}};
      for (auto& r : p.manifest->images) {
        ImageEntry img;
        img.record = std::move(r);
        images_.emplace(img.record.image_id, std::move(img));
      }
      entry.journal.push_back(e);
      jobs_.emplace(e.job_id, std::move(entry));
      return;
    }
    ImageEntry& img = *p.image;
    img.flow = p.next_flow;
    switch (e.action) {
      case Action::predictions_ingested:
        img.clues = std::move(p.clues);
        img.prediction_frame = p.frame;
        break;
      case Action::clue_converted:
      case Action::clue_modified:
      case Action::clue_dismissed:
        for (auto& c : img.clues) {
          if (c.id == p.clue_id) c.status = p.clue_status;
        }
        if (p.annotation) img.annotations.push_back(std::move(*p.annotation));
        break;
      case Action::annotation_drawn:
        img.annotations.push_back(std::move(*p.annotation));
        break;
      case Action::annotation_edited:
      case Action::annotation_approved:
        for (auto& a : img.annotations) {
          if (a.annotation_id == p.annotation->annotation_id) a = *p.annotation;
        }
        break;
      case Action::missed_damage_flagged:
        ++img.missed_damages;
        break;
      default:
        break;
    }
    img.event_seqs.push_back(e.seq);
    jobs_.at(e.job_id).journal.push_back(e);
  }

  std::map<std::string, JobEntry> jobs_;
  std::map<std::string, ImageEntry> images_;
};

// -- journal persistence ----------------------------------------------------

/// Rebuilds state from a journal stream, one JSON event per line.
inline StoreState replay(std::istream& in) {
  StoreState state;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      state.apply(wire::event_from_json(wire::parse(line)));
    } catch (const Error& err) {
      throw Error(err.code(), "journal line " + std::to_string(line_no) + ": " + err.what(), err.detail());
    }
  }
  return state;
}

inline StoreState replay_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open journal '" + path.string() + "'");
  return replay(in);
}

/// Append-only journal plus its derived state. Appends are serialized; an
/// append whose seq is not last_seq + 1 for its job is a stale write and is
/// rejected with a conflict so the caller can re-read and retry.
class Store {
 public:
  Store() = default;

  explicit Store(std::filesystem::path journal_path) : path_(std::move(journal_path)) {
    if (std::filesystem::exists(*path_)) state_ = replay_file(*path_);
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    out_.open(*path_, std::ios::app);
    if (!out_) fail(ErrorCode::io, "cannot open journal '" + path_->string() + "' for append");
  }

  const StoreState& state() const { return state_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

  std::int64_t append(const EventRecord& e) {
    std::lock_guard lock(mutex_);
    state_.validate(e);
    if (out_.is_open()) {
      out_ << wire::to_json(e).dump() << '\n';
      out_.flush();
      if (!out_) fail(ErrorCode::io, "journal write failed");
    }
    state_.apply(e);
    return e.seq;
  }

 private:
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
  StoreState state_;
  std::mutex mutex_;
};

}  // namespace bladeqc

#endif  // BLADEQC_STORE_HPP_
