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

#include <string_view>

// Data files compiled into the library (see cmake/embed_resources.cmake).
namespace emojinize::resources {

extern const std::string_view grapheme_break_property;
extern const std::string_view indic_conjunct_break;
extern const std::string_view emoji_data;
extern const std::string_view emoji_test;
extern const std::string_view emoji_text_allowlist;

extern const std::string_view default_demonstrations;
extern const std::string_view stopwords;
extern const std::string_view pos_lexicon;
extern const std::string_view profanity_lexicon;

}  // namespace emojinize::resources
