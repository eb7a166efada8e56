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

#ifndef BLADEQC_ANALYTICS_HPP_
#define BLADEQC_ANALYTICS_HPP_

// Production reports: clue conversion per job, per-picture QC times and
// misses per inspection, and the control/treatment comparison.
//
// Every figure is kept as an exact ratio of integer totals and rounded
// half-up only when formatted, so the printed strings do not depend on
// floating-point summation order.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bladeqc/error.hpp"
#include "bladeqc/records.hpp"
#include "bladeqc/store.hpp"
#include "bladeqc/wire.hpp"
#include "bladeqc/workflow.hpp"

namespace bladeqc {

/// num/den as a decimal string with `decimals` places, rounded half away
/// from zero. Trailing ".0..." is kept; callers strip it where wanted.
inline std::string format_fixed(__int128 num, __int128 den, int decimals) {
  if (den == 0) fail(ErrorCode::validation, "division by zero in report");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const bool negative = num < 0;
  if (negative) num = -num;
  __int128 scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const __int128 q = (2 * num * scale + den) / (2 * den);
  const auto whole = static_cast<long long>(q / scale);
  const auto frac = static_cast<long long>(q % scale);
  char buf[64];
  if (decimals > 0) {
    std::snprintf(buf, sizeof buf, "%s%lld.%0*lld", negative && q != 0 ? "-" : "", whole, decimals, frac);
  } else {
    std::snprintf(buf, sizeof buf, "%s%lld", negative && q != 0 ? "-" : "", whole);
  }
  return buf;
}

inline double fixed_value(__int128 num, __int128 den, int decimals) {
  return std::stod(format_fixed(num, den, decimals));
}

inline constexpr int kTimeDecimals = 3;
inline constexpr int kMissDecimals = 4;
inline constexpr int kPercentDecimals = 1;
inline constexpr std::string_view kWeighting = "per_picture_global";

// -- per-job activity extracted from the store ------------------------------

struct ImageActivity {
  std::string image_id;
  WorkflowState state = WorkflowState::ingested;
  QcDurations durations;  // empty while a session is still open
  std::int64_t missed_damages = 0;
};

struct JobActivity {
  std::string job_id;
  Arm arm = Arm::control;
  std::int64_t n_annotations = 0;
  std::int64_t n_from_clues = 0;
  std::vector<ImageActivity> images;

  bool all_at_least(WorkflowState s) const {
    return std::all_of(images.begin(), images.end(),
                       [&](const ImageActivity& i) { return int(i.state) >= int(s); });
  }
  bool terminal() const { return all_at_least(WorkflowState::qc2_done); }
};

inline JobActivity job_activity(const StoreState& state, const std::string& job_id) {
  const JobEntry& job = state.job(job_id);
  JobActivity out{job.job.job_id, job.job.arm, 0, 0, {}};
  for (const auto& image_id : job.job.image_ids) {
    const ImageEntry& img = state.image(image_id);
    ImageActivity a{image_id, img.flow.state, {}, img.missed_damages};
    if (!img.flow.session_active) {
      const auto events = state.image_events(image_id);
      a.durations = qc_durations(events);
    }
    for (const auto& ann : img.annotations) {
      ++out.n_annotations;
      if (ann.provenance.from_clue()) ++out.n_from_clues;
    }
    out.images.push_back(std::move(a));
  }
  return out;
}

inline std::vector<JobActivity> all_job_activity(const StoreState& state) {
  std::vector<JobActivity> out;
  for (const auto& [id, j] : state.jobs()) out.push_back(job_activity(state, id));
  return out;
}

// -- conversion -------------------------------------------------------------

struct ConversionRow {
  std::string job_id;
  std::int64_t n_annotations = 0;
  std::int64_t n_from_clues = 0;

  /// Percentage at one decimal; absent when the job has no annotations.
  std::optional<double> pct_converted() const {
    if (n_annotations == 0) return std::nullopt;
    return fixed_value(100 * __int128(n_from_clues), n_annotations, kPercentDecimals);
  }
  /// "97.3%", "100%", or "n/a".
  std::string pct_text() const {
    if (n_annotations == 0) return "n/a";
    std::string s = format_fixed(100 * __int128(n_from_clues), n_annotations, kPercentDecimals);
    if (s.size() > 2 && s.ends_with(".0")) s.resize(s.size() - 2);
    return s + "%";
  }
  bool operator==(const ConversionRow&) const = default;
};

inline ConversionRow conversion_row(std::string job_id, std::int64_t n_annotations, std::int64_t n_from_clues) {
  if (n_annotations < 0 || n_from_clues < 0 || n_from_clues > n_annotations) {
    fail(ErrorCode::validation, "conversion counts for job '" + job_id + "' are inconsistent");
  }
  return {std::move(job_id), n_annotations, n_from_clues};
}

/// One row per job, in input order. Every job must be past QC1.
inline std::vector<ConversionRow> conversion_table(std::span<const JobActivity> jobs) {
  std::vector<ConversionRow> rows;
  for (const auto& j : jobs) {
    if (!j.all_at_least(WorkflowState::qc1_done)) {
      fail(ErrorCode::validation, "job '" + j.job_id + "' has not completed QC1");
    }
    rows.push_back(conversion_row(j.job_id, j.n_annotations, j.n_from_clues));
  }
  return rows;
}

// -- productivity -----------------------------------------------------------

struct ProductivityReport {
  std::optional<Arm> arm;
  std::int64_t n_pictures = 0;
  std::int64_t n_inspections = 0;
  std::int64_t total_qc1_ms = 0;
  std::int64_t total_qc2_ms = 0;
  std::int64_t total_missed = 0;

  std::string avg_qc1_text() const { return format_fixed(total_qc1_ms, 60000 * __int128(n_pictures), kTimeDecimals); }
  std::string avg_qc2_text() const { return format_fixed(total_qc2_ms, 60000 * __int128(n_pictures), kTimeDecimals); }
  std::string avg_missed_text() const { return format_fixed(total_missed, n_inspections, kMissDecimals); }
  double avg_qc1_min_per_picture() const { return std::stod(avg_qc1_text()); }
  double avg_qc2_min_per_picture() const { return std::stod(avg_qc2_text()); }
  double avg_missed_per_inspection() const { return std::stod(avg_missed_text()); }

  bool operator==(const ProductivityReport&) const = default;
};

/// Global per-picture weighting: totals over all pictures divided once.
inline ProductivityReport productivity_report(std::span<const JobActivity> jobs, std::optional<Arm> arm) {
  ProductivityReport r;
  r.arm = arm;
  for (const auto& j : jobs) {
    if (arm && j.arm != *arm) continue;
    if (!j.terminal()) fail(ErrorCode::validation, "job '" + j.job_id + "' has not completed QC2");
    ++r.n_inspections;
    for (const auto& img : j.images) {
      ++r.n_pictures;
      r.total_qc1_ms += img.durations.qc1_ms;
      r.total_qc2_ms += img.durations.qc2_ms;
      r.total_missed += img.missed_damages;
    }
  }
  if (r.n_inspections == 0 || r.n_pictures == 0) {
    fail(ErrorCode::validation,
         arm ? "no completed jobs in the " + std::string(to_string(*arm)) + " arm" : "no completed jobs");
  }
  return r;
}

struct ArmComparison {
  ProductivityReport control;
  ProductivityReport treatment;

  // treatment - control, exact
  std::string delta_qc1_text() const { return delta_minutes(treatment.total_qc1_ms, control.total_qc1_ms); }
  std::string delta_qc2_text() const { return delta_minutes(treatment.total_qc2_ms, control.total_qc2_ms); }
  std::string delta_missed_text() const {
    return format_fixed(__int128(treatment.total_missed) * control.n_inspections -
                            __int128(control.total_missed) * treatment.n_inspections,
                        __int128(treatment.n_inspections) * control.n_inspections, kMissDecimals);
  }

  bool operator==(const ArmComparison&) const = default;

 private:
  std::string delta_minutes(std::int64_t t_ms, std::int64_t c_ms) const {
    return format_fixed(__int128(t_ms) * control.n_pictures - __int128(c_ms) * treatment.n_pictures,
                        60000 * __int128(treatment.n_pictures) * control.n_pictures, kTimeDecimals);
  }
};

inline ArmComparison arm_comparison(std::span<const JobActivity> jobs) {
  return {productivity_report(jobs, Arm::control), productivity_report(jobs, Arm::treatment)};
}

// -- export -----------------------------------------------------------------

enum class ReportFormat { structured, tabular };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "structured" || s == "json") return ReportFormat::structured;
  if (s == "tabular" || s == "table") return ReportFormat::tabular;
  fail(ErrorCode::validation, "unknown report format '" + std::string(s) + "'");
}

namespace detail {

/// Fixed-width text table; columns separated by two spaces.
inline std::string render_table(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string l;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) l += "  ";
      l += cells[c];
      if (c + 1 < cells.size()) l.append(width[c] - cells[c].size(), ' ');
    }
    out += l + '\n';
  };
  line(header);
  std::vector<std::string> rule;
  for (const auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : rows) line(r);
  return out;
}

inline std::string clues_used(const std::optional<Arm>& arm) {
  if (!arm) return "all";
  return *arm == Arm::treatment ? "yes" : "no";
}

}  // namespace detail

inline nlohmann::json to_json(const ConversionRow& r) {
  const auto pct = r.pct_converted();
  return {{"job_id", r.job_id},
          {"n_annotations", r.n_annotations},
          {"n_from_clues", r.n_from_clues},
          {"pct_converted", pct ? nlohmann::json(*pct) : nlohmann::json()}};
}

inline nlohmann::json to_json(const ProductivityReport& r) {
  return {{"arm", r.arm ? nlohmann::json(to_string(*r.arm)) : nlohmann::json()},
          {"n_pictures", r.n_pictures},
          {"n_inspections", r.n_inspections},
          {"total_qc1_ms", r.total_qc1_ms},
          {"total_qc2_ms", r.total_qc2_ms},
          {"total_missed", r.total_missed},
          {"avg_qc1_min_per_picture", r.avg_qc1_min_per_picture()},
          {"avg_qc2_min_per_picture", r.avg_qc2_min_per_picture()},
          {"avg_missed_per_inspection", r.avg_missed_per_inspection()},
          {"weighting", kWeighting}};
}

inline nlohmann::json to_json(const ArmComparison& c) {
  return {{"control", to_json(c.control)},
          {"treatment", to_json(c.treatment)},
          {"delta", {{"avg_qc1_min_per_picture", std::stod(c.delta_qc1_text())},
                     {"avg_qc2_min_per_picture", std::stod(c.delta_qc2_text())},
                     {"avg_missed_per_inspection", std::stod(c.delta_missed_text())}}}};
}

inline std::string export_report(std::span<const ConversionRow> rows, ReportFormat f) {
  if (f == ReportFormat::structured) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : rows) list.push_back(to_json(r));
    return nlohmann::json{{"report", "conversion"}, {"rows", std::move(list)}}.dump(2) + "\n";
  }
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.job_id, std::to_string(r.n_annotations), std::to_string(r.n_from_clues), r.pct_text()});
  }
  return detail::render_table(
      {"Job No.", "No. of annotations", "No. of clues converted", "% of clues converted"}, cells);
}

namespace detail {
inline const std::vector<std::string> kProductivityHeader = {
    "Clues Used (yes/no)", "Average QC1 minutes (per picture)", "Average QC2 minutes (per picture)",
    "Average number of missed damages (per inspection)"};

inline std::vector<std::string> productivity_cells(const ProductivityReport& r) {
  return {clues_used(r.arm), r.avg_qc1_text(), r.avg_qc2_text(), r.avg_missed_text()};
}
}  // namespace detail

inline std::string export_report(const ProductivityReport& r, ReportFormat f) {
  if (f == ReportFormat::structured) {
    nlohmann::json j = to_json(r);
    j["report"] = "productivity";
    return j.dump(2) + "\n";
  }
  return detail::render_table(detail::kProductivityHeader, {detail::productivity_cells(r)});
}

inline std::string export_report(const ArmComparison& c, ReportFormat f) {
  if (f == ReportFormat::structured) {
    nlohmann::json j = to_json(c);
    j["report"] = "comparison";
    return j.dump(2) + "\n";
  }
  return detail::render_table(
      detail::kProductivityHeader,
      {detail::productivity_cells(c.control), detail::productivity_cells(c.treatment),
       {"delta", c.delta_qc1_text(), c.delta_qc2_text(), c.delta_missed_text()}});
}

// -- parsing structured exports ---------------------------------------------

inline std::vector<ConversionRow> conversion_rows_from_json(const nlohmann::json& j) {
  std::vector<ConversionRow> rows;
  const auto& list = wire::at(j, "rows");
  if (!list.is_array()) fail(ErrorCode::validation, "rows must be a list");
  for (const auto& r : list) {
    rows.push_back(conversion_row(wire::get<std::string>(r, "job_id"), wire::get<std::int64_t>(r, "n_annotations"),
                                  wire::get<std::int64_t>(r, "n_from_clues")));
  }
  return rows;
}

inline ProductivityReport productivity_from_json(const nlohmann::json& j) {
  ProductivityReport r;
  if (const auto arm = wire::get_or<std::string>(j, "arm", ""); !arm.empty()) r.arm = parse_arm(arm);
  r.n_pictures = wire::get<std::int64_t>(j, "n_pictures");
  r.n_inspections = wire::get<std::int64_t>(j, "n_inspections");
  r.total_qc1_ms = wire::get<std::int64_t>(j, "total_qc1_ms");
  r.total_qc2_ms = wire::get<std::int64_t>(j, "total_qc2_ms");
  r.total_missed = wire::get<std::int64_t>(j, "total_missed");
  if (r.n_pictures < 1 || r.n_inspections < 1) fail(ErrorCode::validation, "report counts must be positive");
  return r;
}

inline ArmComparison comparison_from_json(const nlohmann::json& j) {
  return {productivity_from_json(wire::at(j, "control")), productivity_from_json(wire::at(j, "treatment"))};
}

}  // namespace bladeqc

#endif  // BLADEQC_ANALYTICS_HPP_
