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

#include "emojinize/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "emojinize/error.hpp"

namespace emojinize::eval {

AccuracyStat accuracy(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw Error(ErrorCode::EmptyRecords, "accuracy needs at least one trial");
  if (successes > trials) throw Error(ErrorCode::InvalidArgument, "more successes than trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  AccuracyStat s;
  s.successes = successes;
  s.trials = trials;
  s.accuracy = p;
  s.ci_low = successes == 0 ? 0.0 : std::clamp(centre - half, 0.0, p);
  s.ci_high = successes == trials ? 1.0 : std::clamp(centre + half, p, 1.0);
  return s;
}

double entropy(std::span<const std::size_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

EmojiUsageStats emoji_usage_stats(std::span<const text::EmojiSequence> translations) {
  if (translations.empty()) throw Error(ErrorCode::EmptyInput, "emoji usage needs at least one translation");
  EmojiUsageStats s;
  for (const auto& t : translations) {
    for (const auto& c : t.clusters()) ++s.counts[c.text()];
    s.total += t.size();
  }
  std::vector<std::size_t> freq;
  freq.reserve(s.counts.size());
  for (const auto& [_, n] : s.counts) freq.push_back(n);
  s.distinct = freq.size();
  s.entropy = entropy(freq);
  return s;
}

namespace {

// Linear interpolation between order statistics (R type 7).
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

LengthStat mean_with_bootstrap(std::span<const double> values, const BootstrapOptions& options) {
  if (values.size() < 2) throw Error(ErrorCode::InsufficientData, "bootstrap needs at least two values");
  if (options.resamples == 0) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least one resample");
  const std::size_t n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  LengthStat s;
  s.mean = sum / static_cast<double>(n);

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(options.resamples);
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += values[pick(rng)];
    m = acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - options.level) / 2.0;
  s.ci_low = std::min(quantile(means, alpha), s.mean);
  s.ci_high = std::max(quantile(means, 1.0 - alpha), s.mean);
  return s;
}

LengthStat mean_length(std::span<const text::EmojiSequence> translations, const BootstrapOptions& options) {
  std::vector<double> lengths;
  lengths.reserve(translations.size());
  for (const auto& t : translations) lengths.push_back(static_cast<double>(t.size()));
  return mean_with_bootstrap(lengths, options);
}

double correlation(std::span<const std::pair<bool, bool>> pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::InsufficientData, "correlation needs at least two pairs");
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (const auto& [a, b] : pairs) {
    if (a && b) ++n11;
    else if (a) ++n10;
    else if (b) ++n01;
    else ++n00;
  }
  const double r1 = n11 + n10, r0 = n01 + n00, c1 = n11 + n01, c0 = n10 + n00;
  if (r1 == 0 || r0 == 0 || c1 == 0 || c0 == 0) {
    throw Error(ErrorCode::DegenerateMargins, "correlation is undefined when either outcome is constant");
  }
  return (n11 * n00 - n10 * n01) / std::sqrt(r1 * r0 * c1 * c0);
}

}  // namespace emojinize::eval
