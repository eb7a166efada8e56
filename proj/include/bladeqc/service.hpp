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

#ifndef BLADEQC_SERVICE_HPP_
#define BLADEQC_SERVICE_HPP_

// HTTP JSON API. Successful responses are {"data": ...}; failures are
// {"error": {"code", "message", "detail"}} with a stable status per code.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "bladeqc/analytics.hpp"
#include "bladeqc/engine.hpp"
#include "bladeqc/error.hpp"
#include "bladeqc/wire.hpp"

namespace bladeqc {

inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::validation: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::illegal_transition: return 422;
    case ErrorCode::io: return 500;
  }
  return 500;
}

struct ServiceOptions {
  std::optional<std::filesystem::path> ui_dir;  // served under /ui
};

class QcService {
 public:
  explicit QcService(QcEngine& engine, ServiceOptions options = {}) : engine_(engine) {
    if (options.ui_dir) {
      if (!server_.set_mount_point("/ui", options.ui_dir->string())) {
        fail(ErrorCode::io, "ui directory '" + options.ui_dir->string() + "' does not exist");
      }
    }
    routes();
  }

  httplib::Server& server() { return server_; }

  /// Blocks until stop(). Returns false if the socket could not be bound.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

 private:
  using Req = httplib::Request;
  using Res = httplib::Response;
  using json = nlohmann::json;

  static void send(Res& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(Res& res, ErrorCode code, const std::string& message, const std::string& detail) {
    send(res, http_status(code),
         {{"error", {{"code", to_string(code)}, {"message", message}, {"detail", detail}}}});
  }

  template <typename F>
  static httplib::Server::Handler wrap(F f) {
    return [f = std::move(f)](const Req& req, Res& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what(), e.detail());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, ErrorCode::validation, "malformed request document", e.what());
      } catch (const std::exception& e) {
        send(res, 500, {{"error", {{"code", "internal_error"}, {"message", e.what()}, {"detail", ""}}}});
      }
    };
  }

  static void ok(Res& res, json data) { send(res, 200, {{"data", std::move(data)}}); }

  static json body_of(const Req& req) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    return wire::parse(req.body);
  }

  static CommandContext context(const Req& req, const json& body) {
    CommandContext ctx;
    if (req.has_header("X-Actor")) ctx.actor = req.get_header_value("X-Actor");
    if (ctx.actor.empty()) ctx.actor = "anonymous";
    if (req.has_header("Idempotency-Key")) ctx.idempotency_key = req.get_header_value("Idempotency-Key");
    if (body.is_object() && body.contains("expected_seq") && !body["expected_seq"].is_null()) {
      ctx.expected_seq = wire::get<std::int64_t>(body, "expected_seq");
    } else if (req.has_header("X-Expected-Seq")) {
      ctx.expected_seq = parse_int(req.get_header_value("X-Expected-Seq"), "X-Expected-Seq");
    }
    return ctx;
  }

  static std::int64_t parse_int(const std::string& s, const std::string& what) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoll(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::validation, what + " must be an integer");
  }

  static double parse_real(const std::string& s, const std::string& what) {
    try {
      std::size_t pos = 0;
      const auto v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::validation, what + " must be a number");
  }

  static std::optional<Polygon> optional_polygon(const json& body) {
    if (!body.is_object() || !body.contains("polygon") || body["polygon"].is_null()) return std::nullopt;
    return wire::polygon_from_json(body["polygon"]);
  }

  static std::optional<std::string> optional_label(const json& body) {
    return body.is_object() && body.contains("damage_label") && !body["damage_label"].is_null()
               ? std::optional(wire::get<std::string>(body, "damage_label"))
               : std::nullopt;
  }

  static ReportFormat format_of(const Req& req) {
    return req.has_param("format") ? parse_report_format(req.get_param_value("format")) : ReportFormat::structured;
  }

  /// Structured reports go in the envelope; tabular ones are plain text.
  template <typename R>
  static void report(const Req& req, Res& res, const R& r, std::string_view name) {
    if (format_of(req) == ReportFormat::tabular) {
      res.status = 200;
      res.set_content(export_report(r, ReportFormat::tabular), "text/plain; charset=utf-8");
      return;
    }
    json j = json::parse(export_report(r, ReportFormat::structured));
    j["report"] = name;
    ok(res, std::move(j));
  }

  void routes() {
    auto& s = server_;
    QcEngine& eng = engine_;

    s.Get("/healthz", wrap([&eng](const Req&, Res& res) {
      ok(res, {{"status", "ok"}, {"events", eng.read([](const StoreState& st) { return st.event_count(); })}});
    }));
    s.Get("/transitions", wrap([](const Req&, Res& res) { ok(res, transitions_json()); }));

    s.Post("/jobs", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      ok(res, eng.ingest_job(body, context(req, body)));
    }));
    s.Get("/jobs/:id", wrap([&eng](const Req& req, Res& res) { ok(res, eng.job_view(req.path_params.at("id"))); }));
    s.Post("/jobs/:id/predictions", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      ok(res, eng.ingest_predictions(req.path_params.at("id"), body, context(req, body)));
    }));

    s.Get("/images/:id", wrap([&eng](const Req& req, Res& res) { ok(res, eng.image_view(req.path_params.at("id"))); }));
    s.Get("/images/:id/clues",
          wrap([&eng](const Req& req, Res& res) { ok(res, eng.clues_view(req.path_params.at("id"))); }));
    s.Post("/images/:id/clues/:cid/convert", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      ok(res, eng.convert_clue(req.path_params.at("id"), req.path_params.at("cid"), optional_polygon(body),
                               optional_label(body), context(req, body)));
    }));
    s.Post("/images/:id/clues/:cid/dismiss", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      ok(res, eng.dismiss_clue(req.path_params.at("id"), req.path_params.at("cid"), context(req, body)));
    }));

    s.Get("/images/:id/annotations",
          wrap([&eng](const Req& req, Res& res) { ok(res, eng.annotations_view(req.path_params.at("id"))); }));
    s.Post("/images/:id/annotations", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      ok(res, eng.draw_annotation(req.path_params.at("id"), wire::polygon_from_json(wire::at(body, "polygon")),
                                  optional_label(body), context(req, body)));
    }));
    s.Post("/images/:id/annotations/:aid/approve", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      ok(res, eng.approve_annotation(req.path_params.at("id"), req.path_params.at("aid"), context(req, body)));
    }));
    s.Post("/images/:id/annotations/:aid", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      std::optional<std::optional<std::string>> label;
      if (body.is_object() && body.contains("damage_label")) label = optional_label(body);
      ok(res, eng.edit_annotation(req.path_params.at("id"), req.path_params.at("aid"), optional_polygon(body), label,
                                  context(req, body)));
    }));

    for (const Action a : {Action::qc1_open, Action::qc1_close, Action::qc1_complete, Action::qc2_open,
                           Action::qc2_close, Action::qc2_complete}) {
      std::string name(to_string(a));  // "qc1_open" -> "/qc1/open"
      const std::string path = "/images/:id/" + name.substr(0, 3) + "/" + name.substr(4);
      s.Post(path, wrap([&eng, a](const Req& req, Res& res) {
        const json body = body_of(req);
        ok(res, eng.qc_step(req.path_params.at("id"), a, context(req, body)));
      }));
    }
    s.Post("/images/:id/missed", wrap([&eng](const Req& req, Res& res) {
      const json body = body_of(req);
      const auto note = body.is_object() && body.contains("note") && !body["note"].is_null()
                            ? std::optional(wire::get<std::string>(body, "note"))
                            : std::nullopt;
      ok(res, eng.flag_missed(req.path_params.at("id"), note, context(req, body)));
    }));

    s.Get("/reports/conversion", wrap([&eng](const Req& req, Res& res) {
      const auto rows = eng.conversion(req.has_param("job") ? std::optional(req.get_param_value("job")) : std::nullopt);
      report(req, res, std::span<const ConversionRow>(rows), "conversion");
    }));
    s.Get("/reports/productivity", wrap([&eng](const Req& req, Res& res) {
      const auto arm = req.has_param("arm") ? std::optional(parse_arm(req.get_param_value("arm"))) : std::nullopt;
      report(req, res, eng.productivity(arm), "productivity");
    }));
    s.Get("/reports/comparison",
          wrap([&eng](const Req& req, Res& res) { report(req, res, eng.comparison(), "comparison"); }));

    s.Post("/eval", wrap([](const Req& req, Res& res) {
      const json body = body_of(req);
      EvalOptions opt;
      if (body.is_object()) {
        opt.iou_threshold = wire::get_or<double>(body, "iou_threshold", opt.iou_threshold);
        opt.score_threshold = wire::get_or<double>(body, "score_threshold", opt.score_threshold);
        opt.dump_matches = wire::get_or<bool>(body, "dump_matches", false);
      }
      if (req.has_param("iou_threshold")) opt.iou_threshold = parse_real(req.get_param_value("iou_threshold"), "iou_threshold");
      if (req.has_param("score_threshold")) {
        opt.score_threshold = parse_real(req.get_param_value("score_threshold"), "score_threshold");
      }
      if (req.has_param("dump_matches")) opt.dump_matches = req.get_param_value("dump_matches") == "true";
      ok(res, run_eval(body, opt));
    }));
  }

  QcEngine& engine_;
  httplib::Server server_;
};

}  // namespace bladeqc

#endif  // BLADEQC_SERVICE_HPP_
