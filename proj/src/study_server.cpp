// Copyright 2026 The Emojinize Authors
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


#include <httplib.h>

#include "emojinize/error.hpp"
#include "emojinize/study.hpp"

namespace emojinize::study {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kJson = "application/json";

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
      return 404;
    case ErrorCode::SessionComplete:
    case ErrorCode::WrongItem:
    case ErrorCode::CorpusExhausted:
      return 409;
    case ErrorCode::InvalidEmoji:
      return 422;
    case ErrorCode::InvalidArgument:
      return 400;
    default:
      return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                bool submit = false) {
  ordered_json body;
  if (submit) body["accepted"] = false;
  body["error"] = ordered_json{{"code", code}, {"message", message}};
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

// Runs `f`, mapping library errors and malformed JSON to error responses.
template <typename F>
void guarded(httplib::Response& res, bool submit, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, status_for(e.code()), to_string(e.code()), e.message(), submit);
  } catch (const json::exception& e) {
    send_error(res, 400, "InvalidArgument", e.what(), submit);
  } catch (const std::exception& e) {
    send_error(res, 500, "InternalError", e.what(), submit);
  }
}

}  // namespace

struct StudyServer::Impl {
  StudyService& service;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  bool bound = false;

  Impl(StudyService& s, ServerOptions o) : service(s), options(std::move(o)) { routes(); }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, false, [&] {
        const auto body = req.body.empty() ? json::object() : json::parse(req.body);
        const auto kind = parse_task_kind(body.at("task").get<std::string>());
        const auto s = service.create_session(kind);
        send_json(res, 201,
                  ordered_json{{"session_id", s.session_id},
                               {"task", to_string(s.task_kind)},
                               {"total", s.items.size()},
                               {"created_at", s.created_at}});
      });
    });
    server.Get(R"(/sessions/([0-9A-Za-z_-]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, false, [&] { send_json(res, 200, service.next_item(req.matches[1].str())); });
    });
    server.Post(R"(/sessions/([0-9A-Za-z_-]+)/submit)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, true, [&] {
        const auto body = json::parse(req.body);
        const auto r = service.submit(req.matches[1].str(), body.at("item_id").get<std::string>(),
                                      body.at("payload").get<std::string>());
        send_json(res, 200,
                  ordered_json{{"accepted", r.accepted},
                               {"duplicate", r.duplicate},
                               {"cursor", r.cursor},
                               {"complete", r.complete}});
      });
    });
    server.Get("/emoji", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(service.emoji_inventory_json(), kJson);
    });
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200,
                ordered_json{{"status", "ok"},
                             {"sessions", service.session_count()},
                             {"samples", service.corpus().entries.size()}});
    });
    if (!options.static_dir.empty()) {
      if (!server.set_mount_point("/", options.static_dir.string())) {
        throw Error(ErrorCode::ConfigInvalid, "static directory not found: " + options.static_dir.string());
      }
    }
  }
};

StudyServer::StudyServer(StudyService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

StudyServer::~StudyServer() { stop(); }

namespace {

int bind(httplib::Server& server, const ServerOptions& options) {
  const int port = options.port == 0 ? server.bind_to_any_port(options.host)
                                     : (server.bind_to_port(options.host, options.port) ? options.port : -1);
  if (port <= 0) {
    throw Error(ErrorCode::IoError, "cannot bind " + options.host + ":" + std::to_string(options.port));
  }
  return port;
}

}  // namespace

int StudyServer::start() {
  if (!impl_->bound) {
    port_ = bind(impl_->server, impl_->options);
    impl_->bound = true;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void StudyServer::run() {
  if (!impl_->bound) {
    port_ = bind(impl_->server, impl_->options);
    impl_->bound = true;
  }
  impl_->server.listen_after_bind();
}

void StudyServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace emojinize::study
