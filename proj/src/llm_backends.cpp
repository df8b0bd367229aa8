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

#include "emojinize/llm_backends.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <thread>

#include "emojinize/error.hpp"

namespace emojinize::llm {

// ---------------------------------------------------------------------------
// ScriptedBackend

bool ScriptedBackend::Match::accepts(const ChatRequest& request) const {
  if (model && *model != request.model) return false;
  if (sample_index && *sample_index != request.sample_index) return false;
  const std::string& system = request.system_content();
  for (const auto& s : system_contains) {
    if (system.find(s) == std::string::npos) return false;
  }
  const std::string& user = request.last_user_content();
  for (const auto& s : user_contains) {
    if (user.find(s) == std::string::npos) return false;
  }
  return true;
}

std::vector<ScriptedBackend::Rule> ScriptedBackend::parse_rules(const nlohmann::json& script) {
  if (!script.is_object() || !script.contains("rules") || !script["rules"].is_array()) {
    throw Error(ErrorCode::ConfigInvalid, "backend script must be an object with a \"rules\" array");
  }
  std::vector<Rule> rules;
  for (const auto& r : script["rules"]) {
    Rule rule;
    const auto m = r.value("match", nlohmann::json::object());
    if (m.contains("model")) rule.match.model = m["model"].get<std::string>();
    if (m.contains("sample_index")) rule.match.sample_index = m["sample_index"].get<int>();
    rule.match.system_contains = m.value("system_contains", std::vector<std::string>{});
    rule.match.user_contains = m.value("user_contains", std::vector<std::string>{});
    rule.replies = r.at("replies").get<std::vector<std::string>>();
    if (rule.replies.empty()) throw Error(ErrorCode::ConfigInvalid, "script rule without replies");
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<ScriptedBackend::Rule> ScriptedBackend::load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open backend script " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, "backend script is not valid JSON: " + path.string());
  return parse_rules(j);
}

void ScriptedBackend::add_rule(Rule rule) {
  if (rule.replies.empty()) throw Error(ErrorCode::InvalidArgument, "script rule without replies");
  rules_.push_back(std::move(rule));
}

void ScriptedBackend::on_user(std::string needle, std::vector<std::string> replies) {
  Rule rule;
  rule.match.user_contains.push_back(std::move(needle));
  rule.replies = std::move(replies);
  add_rule(std::move(rule));
}

void ScriptedBackend::set_responder(Responder responder) { responder_ = std::move(responder); }

ChatResponse ScriptedBackend::send(const ChatRequest& request) {
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    ++active_;
    peak_ = std::max(peak_, active_);
    received_.push_back(request);
  }
  struct Leave {
    ScriptedBackend* self;
    ~Leave() {
      std::lock_guard lock(self->mutex_);
      --self->active_;
    }
  } leave{this};

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  for (const auto& rule : rules_) {
    if (!rule.match.accepts(request)) continue;
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(request.sample_index), rule.replies.size() - 1);
    return ChatResponse{rule.replies[idx], "stop", {}};
  }
  if (responder_) {
    if (auto reply = responder_(request)) return ChatResponse{*reply, "stop", {}};
  }
  std::string user = request.last_user_content().substr(0, 120);
  throw Error(ErrorCode::NoScriptMatch, "no script rule matches request (model=" + request.model +
                                            ", sample_index=" + std::to_string(request.sample_index) +
                                            ", user: \"" + user + "\")");
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t ScriptedBackend::peak_concurrency() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

std::vector<ChatRequest> ScriptedBackend::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

void ScriptedBackend::reset_counters() {
  std::lock_guard lock(mutex_);
  calls_ = 0;
  peak_ = active_;
  received_.clear();
}

// ---------------------------------------------------------------------------
// HttpBackend

struct HttpBackend::Target {
  std::string scheme_host_port;
  std::string path;
};

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)),
      keys_(std::make_unique<KeyPool>(options_.api_keys, options_.rate_limit_cooldown)),
      target_(std::make_unique<Target>()) {
  std::string url = options_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigInvalid, "endpoint URL needs a scheme: " + options_.base_url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  target_->scheme_host_port = url.substr(0, path_start);
  target_->path = (path_start == std::string::npos ? std::string() : url.substr(path_start)) + "/chat/completions";
  if (options_.max_retries < 0) throw Error(ErrorCode::ConfigInvalid, "max_retries must be >= 0");
}

HttpBackend::~HttpBackend() = default;

ChatResponse HttpBackend::send(const ChatRequest& request) {
  const std::string body = to_wire(request).dump();
  int transport_failures = 0;
  auto backoff = options_.initial_backoff;
  std::string last_error;

  for (;;) {
    const std::string key = keys_->next_key();
    httplib::Client client(target_->scheme_host_port);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count());
    client.set_read_timeout(options_.timeout.count());
    client.set_write_timeout(options_.timeout.count());
    client.set_bearer_token_auth(key);

    auto res = client.Post(target_->path, body, "application/json");
    if (res && res->status == 200) {
      nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded()) throw Error(ErrorCode::TransportError, "endpoint returned a non-JSON body");
      return from_wire(j);
    }
    if (res && res->status == 429) {
      keys_->report_rate_limited(key);
      continue;
    }
    if (res && (res->status == 401 || res->status == 403)) {
      keys_->report_rejected(key);
      continue;
    }
    if (res && res->status >= 400 && res->status < 500) {
      throw Error(ErrorCode::BackendRefused,
                  "endpoint refused request with HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (transport_failures++ >= options_.max_retries) {
      throw Error(ErrorCode::TransportError, "giving up after " + std::to_string(options_.max_retries) +
                                                 " retries: " + last_error);
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace emojinize::llm
