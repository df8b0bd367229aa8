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

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace emojinize::llm {

enum class Role { system, user, assistant };

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view name);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline ChatMessage system_message(std::string content) { return {Role::system, std::move(content)}; }
inline ChatMessage user_message(std::string content) { return {Role::user, std::move(content)}; }
inline ChatMessage assistant_message(std::string content) { return {Role::assistant, std::move(content)}; }

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  // Distinguishes independent samples drawn with otherwise identical
  // parameters; part of the cache key.
  int sample_index = 0;

  /// Throws Error(InvalidArgument) unless: model set, exactly one system
  /// message and it comes first, no empty content, 0 <= temperature <= 2,
  /// max_tokens > 0, sample_index >= 0.
  void validate() const;

  [[nodiscard]] const std::string& system_content() const;
  /// Content of the final user message ("" if none).
  [[nodiscard]] const std::string& last_user_content() const;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int total_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason = "stop";
  Usage usage;
};

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
void to_json(nlohmann::json& j, const Usage& u);
void from_json(const nlohmann::json& j, Usage& u);
void to_json(nlohmann::json& j, const ChatResponse& r);
void from_json(const nlohmann::json& j, ChatResponse& r);

/// OpenAI chat-completions request body.
nlohmann::json to_wire(const ChatRequest& request);
/// Parses an OpenAI chat-completions response body (first choice).
ChatResponse from_wire(const nlohmann::json& body);

}  // namespace emojinize::llm
