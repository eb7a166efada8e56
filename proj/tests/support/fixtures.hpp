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

#ifndef BLADEQC_TESTS_FIXTURES_HPP_
#define BLADEQC_TESTS_FIXTURES_HPP_

// Journals and datasets built by construction: production-table journals
// whose totals divide to known values, the 18-GT headline dataset, and a
// random workflow driver for replay tests.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "bladeqc/engine.hpp"
#include "bladeqc/metrics.hpp"
#include "bladeqc/workflow.hpp"
#include "support/oracles.hpp"

namespace fixture {

using bladeqc::Action;
using bladeqc::Arm;
using bladeqc::CommandContext;
using bladeqc::QcEngine;
using nlohmann::json;

struct FakeClock {
  std::shared_ptr<std::int64_t> now = std::make_shared<std::int64_t>(1'760'000'000'000);
  bladeqc::Clock fn() const {
    auto p = now;
    return [p] { return *p; };
  }
  void advance(std::int64_t ms) const { *now += ms; }
};

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("bladeqc-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline CommandContext as(const std::string& actor) {
  CommandContext c;
  c.actor = actor;
  return c;
}

/// Job ids with the given prefix that hash into `arm` under the defaults.
inline std::vector<std::string> job_ids_in_arm(Arm arm, std::size_t count, const std::string& prefix) {
  std::vector<std::string> out;
  for (int i = 0; out.size() < count; ++i) {
    std::string id = prefix + "-" + std::to_string(i);
    if (bladeqc::assign_arm(id) == arm) out.push_back(std::move(id));
  }
  return out;
}

inline json manifest(const std::string& job_id, int n_images) {
  json images = json::array();
  for (int i = 1; i <= n_images; ++i) {
    images.push_back({{"image_id", job_id + "-img" + std::to_string(i)},
                      {"file_ref", "blob://" + job_id + "/" + std::to_string(i) + ".jpg"},
                      {"metadata", {{"blade", "A"}, {"side", i % 2 ? "leading" : "trailing"}}}});
  }
  return {{"job_id", job_id}, {"turbine_id", "WTG-" + job_id}, {"images", images}};
}

inline json square(double x, double y, double s) { return json::array({x, y, x + s, y, x + s, y + s, x, y + s}); }

/// One 100 px square instance per clue, laid out on a grid.
inline json grid_predictions(const std::string& image_id, int n) {
  json inst = json::array();
  for (int i = 0; i < n; ++i) {
    inst.push_back({{"id", "p" + std::to_string(i)},
                    {"score", 0.95 - 0.0005 * i},
                    {"polygon", square(20 + (i % 40) * 130, 20 + (i / 40) * 130, 100)}});
  }
  return {{"image_id", image_id}, {"instances", inst}};
}

inline void qc_session(QcEngine& eng, const FakeClock& clock, const std::string& image, Action open, Action close,
                       std::int64_t ms) {
  eng.qc_step(image, open, as("analyst"));
  clock.advance(ms);
  eng.qc_step(image, close, as("analyst"));
  clock.advance(1000);
}

// -- clue conversion jobs ---------------------------------------------------

struct ConversionCounts {
  std::int64_t n_annotations;
  std::int64_t n_from_clues;
};

inline constexpr std::array<ConversionCounts, 5> kConversionPlan = {{{183, 178}, {192, 184}, {124, 124}, {192, 184}, {192, 184}}};

/// Five treatment jobs of one image each. Every job gets three spare clues
/// that are dismissed; every seventh used clue is edited before conversion.
inline std::vector<std::string> build_conversion_jobs(QcEngine& eng, const FakeClock& clock) {
  const auto ids = job_ids_in_arm(Arm::treatment, kConversionPlan.size(), "conv-job");
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto [n_ann, n_clues] = kConversionPlan[j];
    eng.ingest_job(manifest(ids[j], 1), as("portal"));
    const std::string image = ids[j] + "-img1";
    const json r = eng.ingest_predictions(ids[j], grid_predictions(image, int(n_clues) + 3), as("model"));
    const json& clues = r["images"][0]["clues"];
    eng.qc_step(image, Action::qc1_open, as("analyst"));
    for (std::size_t c = 0; c < clues.size(); ++c) {
      const auto cid = clues[c]["id"].get<std::string>();
      clock.advance(50);
      if (static_cast<std::int64_t>(c) >= n_clues) {
        eng.dismiss_clue(image, cid, as("analyst"));
      } else if (c % 7 == 6) {
        const auto rect = bladeqc::wire::rect_from_json(clues[c]["corners"]);
        const auto& k = rect.corners();
        eng.convert_clue(image, cid, bladeqc::Polygon({k[0], k[1], k[2]}), "crack", as("analyst"));
      } else {
        eng.convert_clue(image, cid, std::nullopt, std::nullopt, as("analyst"));
      }
    }
    for (std::int64_t m = 0; m < n_ann - n_clues; ++m) {
      eng.draw_annotation(image, bladeqc::Polygon::from_flat(std::vector<double>{
                                     100.0 + 50 * m, 3000, 140.0 + 50 * m, 3000, 120.0 + 50 * m, 3040}),
                          "erosion", as("analyst"));
    }
    clock.advance(60'000);
    eng.qc_step(image, Action::qc1_close, as("analyst"));
    eng.qc_step(image, Action::qc1_complete, as("analyst"));
  }
  return ids;
}

// -- per-picture QC time and misses -----------------------------------------

struct ArmPlan {
  Arm arm;
  int jobs;
  int pictures_per_job;
  std::int64_t qc1_ms_per_picture;  // split over two sessions on odd pictures
  std::int64_t qc2_ms_per_picture;
  int misses;  // spread over the first jobs, one per job
};

// control: 12720 ms = 0.212 min, 5400 ms = 0.090 min, 2/250 = 0.0080
// treatment: 12300 ms = 0.205 min, 5160 ms = 0.086 min, 9/1250 = 0.0072
inline constexpr ArmPlan kProductivityControl{Arm::control, 250, 4, 12720, 5400, 2};
inline constexpr ArmPlan kProductivityTreatment{Arm::treatment, 1250, 1, 12300, 5160, 9};

inline void build_arm(QcEngine& eng, const FakeClock& clock, const ArmPlan& plan, const std::string& prefix) {
  const auto ids = job_ids_in_arm(plan.arm, plan.jobs, prefix);
  for (int j = 0; j < plan.jobs; ++j) {
    eng.ingest_job(manifest(ids[j], plan.pictures_per_job), as("portal"));
    for (int p = 1; p <= plan.pictures_per_job; ++p) {
      const std::string image = ids[j] + "-img" + std::to_string(p);
      if (plan.arm == Arm::treatment) {
        eng.ingest_predictions(ids[j], json{{"image_id", image}, {"instances", json::array()}}, as("model"));
      }
      if (p % 2 == 1) {
        qc_session(eng, clock, image, Action::qc1_open, Action::qc1_close, 6000);
        qc_session(eng, clock, image, Action::qc1_open, Action::qc1_close, plan.qc1_ms_per_picture - 6000);
      } else {
        qc_session(eng, clock, image, Action::qc1_open, Action::qc1_close, plan.qc1_ms_per_picture);
      }
      eng.qc_step(image, Action::qc1_complete, as("analyst"));
      eng.qc_step(image, Action::qc2_open, as("reviewer"));
      clock.advance(plan.qc2_ms_per_picture / 2);
      if (p == 1 && j < plan.misses) eng.flag_missed(image, "tip erosion", as("reviewer"));
      clock.advance(plan.qc2_ms_per_picture - plan.qc2_ms_per_picture / 2);
      eng.qc_step(image, Action::qc2_close, as("reviewer"));
      eng.qc_step(image, Action::qc2_complete, as("reviewer"));
      clock.advance(2000);
    }
  }
}

inline void build_productivity_jobs(QcEngine& eng, const FakeClock& clock) {
  build_arm(eng, clock, kProductivityControl, "t2-ctl");
  build_arm(eng, clock, kProductivityTreatment, "t2-trt");
}

// -- evaluation datasets ----------------------------------------------------

/// 18 ground truths over six 512x512 images. 17 have an identical
/// prediction; the last has none. 25 further predictions touch nothing.
inline json headline_eval_doc() {
  json images = json::array();
  int disjoint = 0;
  for (int i = 0; i < 6; ++i) {
    json gts = json::array(), preds = json::array();
    for (int g = 0; g < 3; ++g) {
      const json sq = square(30 + 160 * g, 40, 90);
      gts.push_back(sq);
      if (!(i == 5 && g == 2)) {
        preds.push_back({{"id", "m" + std::to_string(i) + "-" + std::to_string(g)}, {"score", 0.9}, {"polygon", sq}});
      }
    }
    const int extra = i < 5 ? 4 : 5;
    for (int k = 0; k < extra; ++k, ++disjoint) {
      preds.push_back({{"id", "fp" + std::to_string(disjoint)},
                       {"score", 0.8},
                       {"polygon", square(20 + 95 * k, 300, 60)}});
    }
    images.push_back({{"image_id", "eval-" + std::to_string(i)},
                      {"frame", {512, 512}},
                      {"ground_truths", gts},
                      {"predictions", preds}});
  }
  return {{"images", images}};
}

/// Random image: up to max_gt convex ground truths; predictions are jittered
/// copies, halves of ground truths, or random shapes.
inline bladeqc::EvalImage random_eval_image(std::mt19937_64& rng, int id, int size = 512, int max_gt = 6,
                                           int max_pred = 10) {
  using bladeqc::Polygon;
  std::uniform_int_distribution<int> n_gt(1, max_gt), n_pred(0, max_pred), nv(3, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto blob = [&](double cx, double cy, double r) {
    const double rx = r * (0.6 + 0.4 * u(rng)), ry = r * (0.6 + 0.4 * u(rng));
    cx = std::clamp(cx, rx + 1.0, size - rx - 1.0);
    cy = std::clamp(cy, rx + 1.0, size - rx - 1.0);
    return Polygon(oracle::random_convex(rng, {cx, cy}, rx, std::min(ry, rx), nv(rng)));
  };
  bladeqc::EvalImage img;
  img.image_id = "rand-" + std::to_string(id);
  img.frame = {size, size};
  const int g = n_gt(rng);
  std::vector<std::pair<bladeqc::Point2, double>> centres;
  for (int k = 0; k < g; ++k) {
    const double r = 15 + 50 * u(rng);
    const bladeqc::Point2 c{r + 1 + (size - 2 * r - 2) * u(rng), r + 1 + (size - 2 * r - 2) * u(rng)};
    centres.emplace_back(c, r);
    img.ground_truths.push_back(blob(c.x, c.y, r));
  }
  const int p = n_pred(rng);
  for (int k = 0; k < p; ++k) {
    const auto& [c, r] = centres[rng() % centres.size()];
    const double kind = u(rng);
    std::optional<Polygon> poly;
    if (kind < 0.5) {
      poly = blob(c.x + (u(rng) - 0.5) * r, c.y + (u(rng) - 0.5) * r, r * (0.5 + 0.8 * u(rng)));
    } else if (kind < 0.8) {
      const double x0 = c.x - r, x1 = c.x + r, y0 = c.y - r, y1 = c.y + r;
      const double mx = (x0 + x1) / 2 + (u(rng) - 0.5) * r * 0.4;
      const bool left = rng() & 1;
      const double a = std::max(1.0, left ? x0 : mx), b = std::min(size - 1.0, left ? mx : x1);
      poly = Polygon::from_flat(std::vector<double>{a, std::max(1.0, y0), b, std::max(1.0, y0), b,
                                                    std::min(size - 1.0, y1), a, std::min(size - 1.0, y1)});
    } else {
      poly = blob(20 + (size - 40) * u(rng), 20 + (size - 40) * u(rng), 10 + 40 * u(rng));
    }
    img.predictions.push_back({"p" + std::to_string(k), *poly, 0.5 + 0.5 * u(rng)});
  }
  return img;
}

// -- random workflow driver -------------------------------------------------

/// Drives random but legal traffic through the engine until the store holds
/// at least `target` events. Leaves some jobs mid-flight.
inline void drive_random_workflow(QcEngine& eng, const FakeClock& clock, std::mt19937_64& rng, std::size_t target) {
  using bladeqc::Polygon;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto events = [&] { return eng.read([](const bladeqc::StoreState& st) { return st.event_count(); }); };
  auto tick = [&] { clock.advance(200 + static_cast<std::int64_t>(rng() % 9000)); };
  auto tri = [&](double x, double y) {
    return Polygon::from_flat(std::vector<double>{x, y, x + 40 + 200 * u(rng), y + 10, x + 20, y + 30 + 150 * u(rng)});
  };
  for (int job = 0; events() < target; ++job) {
    const std::string job_id = "syn-" + std::to_string(job);
    const int n_images = 1 + static_cast<int>(rng() % 4);
    const json r = eng.ingest_job(manifest(job_id, n_images), as("portal"));
    const bool treatment = r["job"]["arm"] == "treatment";
    for (int i = 1; i <= n_images; ++i) {
      const std::string image = job_id + "-img" + std::to_string(i);
      if (treatment) {
        json inst = json::array();
        const int n = static_cast<int>(rng() % 7);
        for (int k = 0; k < n; ++k) {
          const bool working = u(rng) < 0.3;
          const double s = working ? 1500.0 / 5456.0 : 1.0;
          const auto pts = oracle::random_convex(rng, {(300 + 4800 * u(rng)) * s, (300 + 3000 * u(rng)) * s},
                                                 (20 + 200 * u(rng)) * s, (10 + 100 * u(rng)) * s, 3 + int(rng() % 8));
          json flat = json::array();
          for (const auto& p : pts) {
            flat.push_back(p.x);
            flat.push_back(p.y);
          }
          inst.push_back({{"id", "i" + std::to_string(k)},
                          {"score", u(rng)},
                          {"frame", working ? "working" : "native"},
                          {"polygon", flat}});
        }
        eng.ingest_predictions(job_id, json{{"image_id", image}, {"instances", inst}}, as("model"));
      }
      const int sessions = 1 + static_cast<int>(rng() % 2);
      for (int s = 0; s < sessions; ++s) {
        eng.qc_step(image, Action::qc1_open, as("analyst"));
        tick();
        if (treatment && s == 0) {
          const json clues = eng.clues_view(image)["clues"];
          for (const auto& c : clues) {
            const auto cid = c["id"].get<std::string>();
            const double x = u(rng);
            tick();
            if (x < 0.6) {
              eng.convert_clue(image, cid, std::nullopt, std::nullopt, as("analyst"));
            } else if (x < 0.75) {
              eng.convert_clue(image, cid, tri(100 + 4000 * u(rng), 100 + 3000 * u(rng)), "crack", as("analyst"));
            } else if (x < 0.9) {
              eng.dismiss_clue(image, cid, as("analyst"));
            }
          }
        }
        const int drawn = static_cast<int>(rng() % 3);
        for (int d = 0; d < drawn; ++d) {
          tick();
          eng.draw_annotation(image, tri(100 + 4000 * u(rng), 100 + 3000 * u(rng)), std::nullopt, as("analyst"));
        }
        if (drawn > 0 && u(rng) < 0.3) {
          tick();
          eng.edit_annotation(image, "a1", std::nullopt, std::optional<std::string>("pitting"), as("analyst"));
        }
        eng.qc_step(image, Action::qc1_close, as("analyst"));
        tick();
      }
      eng.qc_step(image, Action::qc1_complete, as("analyst"));
      if (u(rng) < 0.1) continue;  // waits for QC2
      eng.qc_step(image, Action::qc2_open, as("reviewer"));
      tick();
      const auto n_ann = eng.read([&](const bladeqc::StoreState& st) { return st.image(image).annotations.size(); });
      for (std::size_t a = 1; a <= n_ann; ++a) {
        if (u(rng) < 0.7) eng.approve_annotation(image, "a" + std::to_string(a), as("reviewer"));
      }
      if (u(rng) < 0.2) eng.flag_missed(image, std::nullopt, as("reviewer"));
      if (u(rng) < 0.1) eng.draw_annotation(image, tri(200, 200), "missed", as("reviewer"));
      tick();
      eng.qc_step(image, Action::qc2_close, as("reviewer"));
      if (u(rng) < 0.05) continue;  // QC2 reopened later
      eng.qc_step(image, Action::qc2_complete, as("reviewer"));
    }
  }
}

}  // namespace fixture

#endif  // BLADEQC_TESTS_FIXTURES_HPP_
