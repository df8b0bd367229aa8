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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emojinize/llm_gateway.hpp"

namespace emojinize::llm {

/// Deterministic backend answering from a rule script. The first rule whose
/// matcher accepts the request wins; its reply is chosen by sample_index,
/// clamped to the last reply.
class ScriptedBackend final : public Backend {
 public:
  struct Match {
    std::optional<std::string> model;
    std::vector<std::string> system_contains;
    // Substrings of the final user message.
    std::vector<std::string> user_contains;
    std::optional<int> sample_index;

    [[nodiscard]] bool accepts(const ChatRequest& request) const;
  };

  struct Rule {
    Match match;
    std::vector<std::string> replies;
  };

  using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  /// Parses {"rules":[{"match":{...},"replies":[...]}]}.
  static std::vector<Rule> parse_rules(const nlohmann::json& script);
  static std::vector<Rule> load_rules(const std::filesystem::path& path);

  void add_rule(Rule rule);
  /// Convenience: any request whose final user message contains `needle`.
  void on_user(std::string needle, std::vector<std::string> replies);
  /// Consulted after the rules; returning nullopt falls through to
  /// Error(NoScriptMatch).
  void set_responder(Responder responder);
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  ChatResponse send(const ChatRequest& request) override;

  [[nodiscard]] std::size_t calls() const;
  [[nodiscard]] std::size_t peak_concurrency() const;
  [[nodiscard]] std::vector<ChatRequest> received() const;
  void reset_counters();

 private:
  std::vector<Rule> rules_;
  Responder responder_;
  std::chrono::milliseconds latency_{0};

  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
  std::size_t active_ = 0;
  std::size_t peak_ = 0;
  std::vector<ChatRequest> received_;
};

struct HttpBackendOptions {
  // e.g. "https://api.openai.com/v1"; requests go to {base_url}/chat/completions.
  std::string base_url;
  std::vector<std::string> api_keys;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds rate_limit_cooldown{30000};
  std::chrono::seconds timeout{120};
};

/// OpenAI-compatible chat-completions client.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ~HttpBackend() override;

  ChatResponse send(const ChatRequest& request) override;

  [[nodiscard]] KeyPool& keys() noexcept { return *keys_; }

 private:
  struct Target;

  HttpBackendOptions options_;
  std::unique_ptr<KeyPool> keys_;
  std::unique_ptr<Target> target_;
};

}  // namespace emojinize::llm
