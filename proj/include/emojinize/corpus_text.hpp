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
#include <string>
#include <string_view>
#include <vector>

#include "emojinize/span.hpp"

namespace emojinize::corpus {

/// Text of every paragraph element, tags stripped, entities decoded and
/// whitespace collapsed, in document order. Script, style and comments are
/// skipped. Throws Error(NoParagraphs) when nothing non-empty is found.
std::vector<std::string> extract_paragraphs(std::string_view html);

/// Decodes named and numeric character references.
std::string decode_entities(std::string_view text);

/// Blank-line separated blocks of a plain-text ebook with whitespace
/// collapsed. Project Gutenberg boilerplate outside the START/END markers is
/// dropped.
std::vector<std::string> extract_ebook_blocks(std::string_view text);

enum class TokenKind { word, number, punctuation };

struct Token {
  std::string text;
  // Code point offsets into the tokenized text.
  Span span;
  TokenKind kind = TokenKind::word;
  // First word token of its sentence.
  bool sentence_initial = false;
};

/// Words (letters and digits, with inner apostrophes and hyphens), numbers,
/// and single punctuation characters. Whitespace is dropped.
std::vector<Token> tokenize(std::string_view text);

std::size_t word_count(std::string_view text);

/// Splits on sentence-final punctuation followed by whitespace, keeping
/// common abbreviations intact.
std::vector<std::string> split_sentences(std::string_view block);

struct PassageBounds {
  std::size_t min_words = 8;
  std::size_t max_words = 60;
};

/// Non-overlapping runs of consecutive sentences, each the shortest run
/// reaching min_words, kept when it does not exceed max_words.
std::vector<std::string> passages_from_block(std::string_view block, const PassageBounds& bounds);

}  // namespace emojinize::corpus
