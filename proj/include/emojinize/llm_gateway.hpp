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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "emojinize/llm_types.hpp"

namespace emojinize::llm {

/// Anything that can answer a chat request: the HTTP client or a scripted
/// test double.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

/// The request fields that determine a reply, in canonical form.
nlohmann::json digest_fields(std::string_view endpoint_id, const ChatRequest& request);

/// SHA-256 (hex) of the canonical JSON of `digest_fields`.
std::string cache_key(std::string_view endpoint_id, const ChatRequest& request);

struct CacheRecord {
  std::string key;
  nlohmann::json request_digest_fields;
  ChatResponse response;
  std::string created_at;
};

/// Append-only JSONL response cache with an in-memory index. Lookups and
/// inserts may run concurrently; a duplicate key keeps the first record.
class ResponseCache {
 public:
  /// Memory-only cache.
  ResponseCache() = default;
  /// Loads `file` if present (a torn final line is ignored) and appends new
  /// records to it.
  explicit ResponseCache(std::filesystem::path file);

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  [[nodiscard]] std::optional<ChatResponse> lookup(const std::string& key) const;

  /// Indexes `record`; writes it to the file too unless `persist` is false.
  /// Returns false when the key was already present.
  bool insert(const CacheRecord& record, bool persist = true);

  /// Writes already-indexed records to the file in the given order.
  void persist(std::span<const CacheRecord> records);

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  void append_line(const CacheRecord& record);

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheRecord> index_;
  std::optional<std::filesystem::path> path_;
  std::mutex file_mutex_;
  std::ofstream out_;
};

/// Round-robin API key rotation with rate-limit cooldowns.
class KeyPool {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit KeyPool(std::vector<std::string> keys,
                   std::chrono::milliseconds cooldown = std::chrono::seconds(30),
                   Clock clock = [] { return std::chrono::steady_clock::now(); });

  /// Next key not cooling down and not rejected. Throws
  /// Error(AllKeysCoolingDown), or Error(AuthError) once every key has
  /// been rejected.
  std::string next_key();

  void report_rate_limited(const std::string& key);
  void report_rejected(const std::string& key);

  [[nodiscard]] std::size_t size() const { return keys_.size(); }

 private:
  struct Slot {
    std::string key;
    std::chrono::steady_clock::time_point available_at{};
    bool rejected = false;
  };

  std::vector<Slot> keys_;
  std::chrono::milliseconds cooldown_;
  Clock clock_;
  std::size_t cursor_ = 0;
  std::mutex mutex_;
};

struct GatewayOptions {
  // Identifies the remote endpoint in cache keys (e.g. its base URL).
  std::string endpoint_id = "default";
  std::size_t max_in_flight = 8;
  // Cache-only operation: any miss raises Error(CacheMiss).
  bool replay_only = false;
  // Produces CacheRecord::created_at; defaults to the current UTC time.
  std::function<std::string()> timestamp;
};

struct GatewayStats {
  std::size_t requests = 0;
  std::size_t cache_hits = 0;
  std::size_t network_calls = 0;
  std::size_t failures = 0;
};

/// Outcome of one request inside complete_many.
class Completion {
 public:
  explicit Completion(ChatResponse response) : response_(std::move(response)) {}
  explicit Completion(std::exception_ptr error) : error_(std::move(error)) {}

  [[nodiscard]] bool ok() const noexcept { return response_.has_value(); }
  /// The response, or rethrows the stored error.
  [[nodiscard]] const ChatResponse& value() const;
  [[nodiscard]] std::exception_ptr error() const noexcept { return error_; }

 private:
  std::optional<ChatResponse> response_;
  std::exception_ptr error_;
};

/// Cached, deduplicating front door to a Backend.
class Gateway {
 public:
  /// `backend` may be null, which makes the gateway replay-only.
  Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache, GatewayOptions options = {});

  ChatResponse complete(const ChatRequest& request);

  /// Results are positionally aligned with `requests`; failures are
  /// reported per item. `max_in_flight` of 0 uses the configured bound.
  /// New cache records are appended in request order.
  std::vector<Completion> complete_many(std::span<const ChatRequest> requests, std::size_t max_in_flight = 0);

  [[nodiscard]] GatewayStats stats() const;
  [[nodiscard]] const GatewayOptions& options() const noexcept { return options_; }
  [[nodiscard]] ResponseCache& cache() noexcept { return *cache_; }

 private:
  ChatResponse fetch(const ChatRequest& request, std::vector<CacheRecord>* deferred);

  std::shared_ptr<Backend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  GatewayOptions options_;

  std::mutex inflight_mutex_;
  std::unordered_map<std::string, std::shared_future<ChatResponse>> inflight_;

  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> failures_{0};
};

std::string utc_timestamp();

}  // namespace emojinize::llm
