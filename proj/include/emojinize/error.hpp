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

#include <stdexcept>
#include <string>
#include <string_view>

namespace emojinize {

enum class ErrorCode {
  // emoji text
  EmptySequence,
  NonEmojiContent,
  // llm gateway
  TransportError,
  AuthError,
  BackendRefused,
  AllKeysCoolingDown,
  CacheMiss,
  NoScriptMatch,
  // translator
  MalformedJson,
  MissingSpan,
  ResampleBudgetExhausted,
  NoUnitsFound,
  // corpus
  NoParagraphs,
  NoEligibleToken,
  InsufficientCleanSamples,
  // evaluation
  EmptyRecords,
  EmptyInput,
  InsufficientData,
  DegenerateMargins,
  MissingTranslation,
  // study service
  CorpusExhausted,
  UnknownSession,
  SessionComplete,
  WrongItem,
  InvalidEmoji,
  // pipeline
  ConfigInvalid,
  MissingStageInput,
  // shared
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The one exception type thrown by this library. `code()` identifies the
/// failure; the message carries the detail a human needs to act on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix that what() carries.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace emojinize
