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

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>

#include "emojinize/emoji_text.hpp"

namespace emojinize::eval {

struct AccuracyStat {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline constexpr double kZ95 = 1.96;

/// Wilson score interval. Throws Error(EmptyRecords) when trials == 0.
AccuracyStat accuracy(std::size_t successes, std::size_t trials, double z = kZ95);

struct EmojiUsageStats {
  // Keyed by cluster text.
  std::map<std::string, std::size_t> counts;
  std::size_t distinct = 0;
  std::size_t total = 0;
  // Natural-log units.
  double entropy = 0.0;
};

/// Throws Error(EmptyInput) for an empty list.
EmojiUsageStats emoji_usage_stats(std::span<const text::EmojiSequence> translations);

/// -sum p ln p over the given frequencies (zeros ignored).
double entropy(std::span<const std::size_t> counts);

struct LengthStat {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct BootstrapOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = 20240101;
  double level = 0.95;
};

/// Mean with a percentile-bootstrap interval. Throws Error(InsufficientData)
/// for fewer than two values.
LengthStat mean_with_bootstrap(std::span<const double> values, const BootstrapOptions& options = {});

/// Mean emoji count per translation.
LengthStat mean_length(std::span<const text::EmojiSequence> translations, const BootstrapOptions& options = {});

/// Phi coefficient of paired binary outcomes. Throws Error(InsufficientData)
/// for fewer than two pairs and Error(DegenerateMargins) when either side is
/// constant.
double correlation(std::span<const std::pair<bool, bool>> pairs);

}  // namespace emojinize::eval
