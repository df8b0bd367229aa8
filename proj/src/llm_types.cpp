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

#include "emojinize/llm_types.hpp"

#include "emojinize/error.hpp"

namespace emojinize::llm {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  throw Error(ErrorCode::InvalidArgument, "unknown chat role '" + std::string(name) + "'");
}

void ChatRequest::validate() const {
  if (model.empty()) throw Error(ErrorCode::InvalidArgument, "chat request without model");
  if (messages.empty() || messages.front().role != Role::system) {
    throw Error(ErrorCode::InvalidArgument, "chat request must start with a system message");
  }
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i > 0 && messages[i].role == Role::system) {
      throw Error(ErrorCode::InvalidArgument, "chat request has more than one system message");
    }
    if (messages[i].content.empty()) {
      throw Error(ErrorCode::InvalidArgument, "chat message " + std::to_string(i) + " is empty");
    }
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
  }
  if (max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
  if (sample_index < 0) throw Error(ErrorCode::InvalidArgument, "sample_index must be non-negative");
}

const std::string& ChatRequest::system_content() const {
  static const std::string kEmpty;
  return !messages.empty() && messages.front().role == Role::system ? messages.front().content : kEmpty;
}

const std::string& ChatRequest::last_user_content() const {
  static const std::string kEmpty;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::user) return it->content;
  }
  return kEmpty;
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
  j = nlohmann::json{{"role", to_string(m.role)}, {"content", m.content}};
}

void from_json(const nlohmann::json& j, ChatMessage& m) {
  m.role = parse_role(j.at("role").get<std::string>());
  m.content = j.at("content").get<std::string>();
}

void to_json(nlohmann::json& j, const Usage& u) {
  j = nlohmann::json{{"prompt_tokens", u.prompt_tokens},
                     {"completion_tokens", u.completion_tokens},
                     {"total_tokens", u.total_tokens}};
}

void from_json(const nlohmann::json& j, Usage& u) {
  u.prompt_tokens = j.value("prompt_tokens", 0);
  u.completion_tokens = j.value("completion_tokens", 0);
  u.total_tokens = j.value("total_tokens", 0);
}

void to_json(nlohmann::json& j, const ChatResponse& r) {
  j = nlohmann::json{{"content", r.content}, {"finish_reason", r.finish_reason}, {"usage", r.usage}};
}

void from_json(const nlohmann::json& j, ChatResponse& r) {
  r.content = j.at("content").get<std::string>();
  r.finish_reason = j.value("finish_reason", "stop");
  if (j.contains("usage")) r.usage = j.at("usage").get<Usage>();
}

nlohmann::json to_wire(const ChatRequest& request) {
  return nlohmann::json{{"model", request.model},
                        {"messages", request.messages},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_tokens}};
}

ChatResponse from_wire(const nlohmann::json& body) {
  const auto& choices = body.at("choices");
  if (!choices.is_array() || choices.empty()) {
    throw Error(ErrorCode::BackendRefused, "completion response without choices");
  }
  const auto& choice = choices.front();
  ChatResponse r;
  const auto& content = choice.at("message").at("content");
  r.content = content.is_null() ? std::string() : content.get<std::string>();
  if (auto it = choice.find("finish_reason"); it != choice.end() && it->is_string()) {
    r.finish_reason = it->get<std::string>();
  }
  if (body.contains("usage") && body.at("usage").is_object()) r.usage = body.at("usage").get<Usage>();
  return r;
}

}  // namespace emojinize::llm
