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

#include "emojinize/error.hpp"

namespace emojinize {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::NonEmojiContent: return "NonEmojiContent";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::BackendRefused: return "BackendRefused";
    case ErrorCode::AllKeysCoolingDown: return "AllKeysCoolingDown";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::NoScriptMatch: return "NoScriptMatch";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::MissingSpan: return "MissingSpan";
    case ErrorCode::ResampleBudgetExhausted: return "ResampleBudgetExhausted";
    case ErrorCode::NoUnitsFound: return "NoUnitsFound";
    case ErrorCode::NoParagraphs: return "NoParagraphs";
    case ErrorCode::NoEligibleToken: return "NoEligibleToken";
    case ErrorCode::InsufficientCleanSamples: return "InsufficientCleanSamples";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateMargins: return "DegenerateMargins";
    case ErrorCode::MissingTranslation: return "MissingTranslation";
    case ErrorCode::CorpusExhausted: return "CorpusExhausted";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::WrongItem: return "WrongItem";
    case ErrorCode::InvalidEmoji: return "InvalidEmoji";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::MissingStageInput: return "MissingStageInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace emojinize
