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

#include "emojinize/llm_gateway.hpp"

#include <algorithm>
#include <ctime>
#include <thread>

#include "emojinize/error.hpp"
#include "emojinize/hash.hpp"

namespace emojinize::llm {
namespace {

std::string excerpt(const std::string& s, std::size_t max = 80) {
  std::string out = s.size() <= max ? s : s.substr(0, max) + "...";
  std::replace(out.begin(), out.end(), '\n', ' ');
  return out;
}

nlohmann::json record_to_json(const CacheRecord& r) {
  return nlohmann::json{{"key", r.key},
                        {"request_digest_fields", r.request_digest_fields},
                        {"response", r.response},
                        {"created_at", r.created_at}};
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json digest_fields(std::string_view endpoint_id, const ChatRequest& request) {
  return nlohmann::json{{"endpoint", endpoint_id},
                        {"model", request.model},
                        {"messages", request.messages},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_tokens},
                        {"sample_index", request.sample_index}};
}

std::string cache_key(std::string_view endpoint_id, const ChatRequest& request) {
  return sha256_hex(digest_fields(endpoint_id, request).dump());
}

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(std::filesystem::path file) : path_(std::move(file)) {
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  if (std::ifstream in(*path_); in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded()) {
        if (in.peek() == std::char_traits<char>::eof()) break;  // torn final write
        throw Error(ErrorCode::IoError, path_->string() + ":" + std::to_string(lineno) + ": corrupt cache record");
      }
      CacheRecord r{j.at("key").get<std::string>(), j.at("request_digest_fields"),
                    j.at("response").get<ChatResponse>(), j.value("created_at", std::string())};
      index_.emplace(r.key, std::move(r));
    }
  }
  out_.open(*path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error(ErrorCode::IoError, "cannot open cache file " + path_->string());
}

std::optional<ChatResponse> ResponseCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second.response;
}

bool ResponseCache::insert(const CacheRecord& record, bool persist) {
  {
    std::unique_lock lock(mutex_);
    if (!index_.emplace(record.key, record).second) return false;
  }
  if (persist) append_line(record);
  return true;
}

void ResponseCache::persist(std::span<const CacheRecord> records) {
  for (const auto& r : records) append_line(r);
}

void ResponseCache::append_line(const CacheRecord& record) {
  if (!path_) return;
  const std::string line = record_to_json(record).dump() + "\n";
  std::lock_guard lock(file_mutex_);
  out_ << line;
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "failed to append to cache file " + path_->string());
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

// ---------------------------------------------------------------------------
// KeyPool

KeyPool::KeyPool(std::vector<std::string> keys, std::chrono::milliseconds cooldown, Clock clock)
    : cooldown_(cooldown), clock_(std::move(clock)) {
  if (keys.empty()) throw Error(ErrorCode::InvalidArgument, "key pool needs at least one API key");
  for (auto& k : keys) keys_.push_back(Slot{std::move(k)});
}

std::string KeyPool::next_key() {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  bool any_live = false;
  for (std::size_t step = 0; step < keys_.size(); ++step) {
    Slot& slot = keys_[(cursor_ + step) % keys_.size()];
    if (slot.rejected) continue;
    any_live = true;
    if (slot.available_at <= now) {
      cursor_ = (cursor_ + step + 1) % keys_.size();
      return slot.key;
    }
  }
  if (!any_live) throw Error(ErrorCode::AuthError, "every API key was rejected by the endpoint");
  throw Error(ErrorCode::AllKeysCoolingDown, "all API keys are cooling down after rate limiting");
}

void KeyPool::report_rate_limited(const std::string& key) {
  std::lock_guard lock(mutex_);
  for (auto& slot : keys_) {
    if (slot.key == key) slot.available_at = clock_() + cooldown_;
  }
}

void KeyPool::report_rejected(const std::string& key) {
  std::lock_guard lock(mutex_);
  for (auto& slot : keys_) {
    if (slot.key == key) slot.rejected = true;
  }
}

// ---------------------------------------------------------------------------
// Gateway

const ChatResponse& Completion::value() const {
  if (!response_) std::rethrow_exception(error_);
  return *response_;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache, GatewayOptions options)
    : backend_(std::move(backend)), cache_(std::move(cache)), options_(std::move(options)) {
  if (!cache_) cache_ = std::make_shared<ResponseCache>();
  if (!backend_) options_.replay_only = true;
  if (!options_.timestamp) options_.timestamp = utc_timestamp;
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

ChatResponse Gateway::complete(const ChatRequest& request) { return fetch(request, nullptr); }

ChatResponse Gateway::fetch(const ChatRequest& request, std::vector<CacheRecord>* deferred) {
  request.validate();
  ++requests_;
  const std::string key = cache_key(options_.endpoint_id, request);
  if (auto hit = cache_->lookup(key)) {
    ++hits_;
    return *hit;
  }
  if (options_.replay_only) {
    ++failures_;
    throw Error(ErrorCode::CacheMiss, "no cached response for request " + key.substr(0, 16) +
                                          " (model=" + request.model +
                                          ", sample_index=" + std::to_string(request.sample_index) +
                                          ", last user message: \"" + excerpt(request.last_user_content()) + "\")");
  }

  std::promise<ChatResponse> promise;
  std::shared_future<ChatResponse> waiting;
  {
    std::lock_guard lock(inflight_mutex_);
    // Owners insert into the cache before leaving inflight_, so checking both
    // under this lock cannot miss a finished call.
    if (auto hit = cache_->lookup(key)) {
      ++hits_;
      return *hit;
    }
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      waiting = it->second;
    } else {
      inflight_.emplace(key, promise.get_future().share());
    }
  }
  if (waiting.valid()) {
    ++hits_;
    return waiting.get();
  }

  try {
    ChatResponse response = backend_->send(request);
    ++calls_;
    CacheRecord record{key, digest_fields(options_.endpoint_id, request), response, options_.timestamp()};
    cache_->insert(record, deferred == nullptr);
    if (deferred) deferred->push_back(std::move(record));
    promise.set_value(response);
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    return response;
  } catch (...) {
    ++failures_;
    promise.set_exception(std::current_exception());
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    throw;
  }
}

std::vector<Completion> Gateway::complete_many(std::span<const ChatRequest> requests, std::size_t max_in_flight) {
  const std::size_t n = requests.size();
  if (max_in_flight == 0) max_in_flight = options_.max_in_flight;

  std::vector<std::optional<Completion>> results(n);
  std::vector<std::vector<CacheRecord>> pending(n);
  std::vector<char> done(n, 0);
  std::size_t flushed = 0;
  std::mutex flush_mutex;

  auto run_one = [&](std::size_t i) {
    try {
      results[i].emplace(fetch(requests[i], &pending[i]));
    } catch (...) {
      results[i].emplace(std::current_exception());
    }
    std::lock_guard lock(flush_mutex);
    done[i] = 1;
    while (flushed < n && done[flushed]) {
      cache_->persist(pending[flushed]);
      pending[flushed].clear();
      ++flushed;
    }
  };

  const std::size_t workers = std::min(max_in_flight, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
      });
    }
  }

  std::vector<Completion> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

GatewayStats Gateway::stats() const {
  return GatewayStats{requests_.load(), hits_.load(), calls_.load(), failures_.load()};
}

}  // namespace emojinize::llm
