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

#ifndef BLADEQC_CLI_HPP_
#define BLADEQC_CLI_HPP_

// Command-line front end. Exit codes: 0 success, 1 bad input (usage,
// validation, conflict, unknown entity, illegal transition), 2 I/O failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bladeqc/analytics.hpp"
#include "bladeqc/engine.hpp"
#include "bladeqc/error.hpp"
#include "bladeqc/service.hpp"
#include "bladeqc/store.hpp"
#include "bladeqc/wire.hpp"

namespace bladeqc {

inline int exit_code(ErrorCode c) { return c == ErrorCode::io ? 2 : 1; }

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return wire::parse(ss.str());
}

namespace detail {

inline std::string eval_text(const nlohmann::json& r) {
  auto pct = [](const nlohmann::json& v) {
    if (v.is_null()) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v.get<double>());
    return std::string(buf);
  };
  std::ostringstream o;
  o << "iou_threshold     " << r["iou_threshold"].get<double>() << '\n'
    << "score_threshold   " << r["score_threshold"].get<double>() << '\n'
    << "images            " << r["n_images"] << '\n'
    << "ground_truths     " << r["tp_ground_truths"] << " / " << r["n_ground_truths"] << " matched\n"
    << "predictions       " << r["tp_predictions"] << " / " << r["n_predictions"] << " true positive\n"
    << "shared            " << r["shared_predictions"] << '\n'
    << "damage_recall     " << pct(r["damage_recall"]) << '\n'
    << "damage_precision  " << pct(r["damage_precision"]) << '\n';
  return o.str();
}

}  // namespace detail

/// Runs one command line. Output goes to `out`, diagnostics to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blade inspection QC: clue generation, QC workflow, metrics and reports", "bladeqc"};
  app.require_subcommand(1);

  std::string data_dir = "bladeqc-data";
  std::string format_name = "tabular";
  std::string actor = "cli";
  app.add_option("--data-dir", data_dir, "Directory holding journal.jsonl")->capture_default_str();
  app.add_option("--format", format_name, "Output format: tabular or structured")
      ->check(CLI::IsMember({"tabular", "structured"}))
      ->capture_default_str();
  app.add_option("--actor", actor, "Actor recorded on journal events")->capture_default_str();

  std::string manifest_path;
  auto* ingest = app.add_subcommand("ingest", "Ingest a job manifest");
  ingest->add_option("manifest", manifest_path, "Manifest file")->required();

  std::string predictions_path, predictions_job;
  auto* predictions = app.add_subcommand("predictions", "Ingest a prediction file and generate clues");
  predictions->add_option("file", predictions_path, "Prediction file")->required();
  predictions->add_option("--job", predictions_job, "Job id (default: owner of the first image)");

  std::string clues_image;
  auto* clues = app.add_subcommand("clues", "List the clues of an image");
  clues->add_option("image", clues_image, "Image id")->required();

  std::string eval_path;
  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "Compute damage recall and precision");
  eval->add_option("file", eval_path, "Eval input file")->required();
  eval->add_option("--iou-threshold", eval_opt.iou_threshold, "IoU threshold in (0,1]")->capture_default_str();
  eval->add_option("--score-threshold", eval_opt.score_threshold, "Prediction score filter")->capture_default_str();
  eval->add_flag("--dump-matches", eval_opt.dump_matches, "Include per-image match details");

  std::string report_kind, report_job, report_arm;
  auto* rep = app.add_subcommand("report", "Production reports");
  rep->add_option("kind", report_kind, "conversion, productivity or comparison")
      ->required()
      ->check(CLI::IsMember({"conversion", "productivity", "comparison"}));
  rep->add_option("--job", report_job, "Conversion: restrict to one job");
  rep->add_option("--arm", report_arm, "Productivity: control or treatment")
      ->check(CLI::IsMember({"control", "treatment"}));

  int port = 8080;
  std::string host = "0.0.0.0", ui_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--port", port, "Listen port")->capture_default_str();
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--ui-dir", ui_dir, "Static review UI assets served under /ui");

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Rebuild state from a journal and summarize it");
  replay_cmd->add_option("journal", replay_path, "Journal file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const bool structured = format_name == "structured";
  const auto journal = std::filesystem::path(data_dir) / "journal.jsonl";
  auto print_json = [&](const nlohmann::json& j) { out << j.dump(2) << '\n'; };
  CommandContext ctx;
  ctx.actor = actor;

  try {
    if (*eval) {
      const nlohmann::json report = run_eval(read_json_file(eval_path), eval_opt);
      if (structured) {
        print_json(report);
      } else {
        out << detail::eval_text(report);
      }
      return 0;
    }
    if (*replay_cmd) {
      const StoreState st = replay_file(replay_path);
      const nlohmann::json summary = {
          {"events", st.event_count()}, {"jobs", st.jobs().size()}, {"images", st.images().size()}};
      if (structured) {
        print_json({{"summary", summary}, {"state", st.to_json()}});
      } else {
        out << "events  " << summary["events"] << "\njobs    " << summary["jobs"] << "\nimages  "
            << summary["images"] << '\n';
      }
      return 0;
    }

    Store store(journal);
    QcEngine engine(store);

    if (*serve) {
      ServiceOptions opt;
      if (!ui_dir.empty()) opt.ui_dir = ui_dir;
      QcService service(engine, opt);
      out << "listening on " << host << ':' << port << std::endl;
      if (!service.listen(host, port)) fail(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
      return 0;
    }
    if (*ingest) {
      const auto r = engine.ingest_job(read_json_file(manifest_path), ctx);
      if (structured) {
        print_json(r);
      } else {
        out << "job " << r["job"]["job_id"].get<std::string>() << "  arm " << r["job"]["arm"].get<std::string>()
            << "  images " << r["images"].size() << '\n';
      }
      return 0;
    }
    if (*predictions) {
      const nlohmann::json doc = read_json_file(predictions_path);
      std::string job_id = predictions_job;
      if (job_id.empty()) {
        const nlohmann::json& first = doc.is_array() ? doc.at(0) : doc.contains("images") ? doc["images"].at(0) : doc;
        const auto image_id = wire::get<std::string>(first, "image_id");
        job_id = engine.read([&](const StoreState& st) { return st.image(image_id).record.job_id; });
      }
      const auto r = engine.ingest_predictions(job_id, doc, ctx);
      if (structured) {
        print_json(r);
      } else {
        std::vector<std::vector<std::string>> rows;
        for (const auto& i : r["images"]) {
          rows.push_back({i["image_id"].get<std::string>(), i["frame_received"].get<std::string>(),
                          std::to_string(i["clues"].size())});
        }
        out << detail::render_table({"image", "frame", "clues"}, rows);
      }
      return 0;
    }
    if (*clues) {
      const auto r = engine.clues_view(clues_image);
      if (structured) {
        print_json(r);
      } else {
        std::vector<std::vector<std::string>> rows;
        for (const auto& c : r["clues"]) {
          const auto rect = wire::rect_from_json(c["corners"]);
          char buf[128];
          std::snprintf(buf, sizeof buf, "%.1fx%.1f@%.2f", rect.width(), rect.height(), rect.angle_degrees());
          char score[16];
          std::snprintf(score, sizeof score, "%.3f", c["score"].get<double>());
          rows.push_back({c["id"].get<std::string>(), score, c["status"].get<std::string>(),
                          c["source_instance"].get<std::string>(), buf});
        }
        out << detail::render_table({"clue", "score", "status", "instance", "rect"}, rows);
      }
      return 0;
    }
    if (*rep) {
      const ReportFormat f = structured ? ReportFormat::structured : ReportFormat::tabular;
      if (report_kind == "conversion") {
        const auto rows = engine.conversion(report_job.empty() ? std::nullopt : std::optional(report_job));
        out << export_report(std::span<const ConversionRow>(rows), f);
      } else if (report_kind == "productivity") {
        out << export_report(engine.productivity(report_arm.empty() ? std::nullopt
                                                                    : std::optional(parse_arm(report_arm))),
                             f);
      } else {
        out << export_report(engine.comparison(), f);
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what();
    if (!e.detail().empty()) err << " (" << e.detail() << ")";
    err << '\n';
    return exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io_error: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace bladeqc

#endif  // BLADEQC_CLI_HPP_
