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

#include "emojinize/corpus_text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "emojinize/error.hpp"
#include "emojinize/utf8.hpp"
#include "strings.hpp"

namespace emojinize::corpus {
namespace {

bool is_unicode_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0xA0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

std::string normalize_space(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char32_t cp : utf8::decode(text).code_points) {
    if (is_unicode_space(cp) || cp == 0x200B || cp == 0xFEFF) {
      pending = cp != 0x200B && cp != 0xFEFF ? true : pending;
      continue;
    }
    if (pending && !out.empty()) out.push_back(' ');
    pending = false;
    utf8::append(out, cp);
  }
  return out;
}

bool istarts_with(std::string_view s, std::size_t at, std::string_view prefix) {
  if (s.size() - at < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[at + i])) != prefix[i]) return false;
  }
  return true;
}

std::size_t ifind(std::string_view s, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
    if (istarts_with(s, i, needle)) return i;
  }
  return std::string_view::npos;
}

// End of a tag starting at `lt` (index of the closing '>'), honoring quotes.
std::size_t tag_end(std::string_view html, std::size_t lt) {
  char quote = 0;
  for (std::size_t i = lt + 1; i < html.size(); ++i) {
    const char c = html[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i;
    }
  }
  return std::string_view::npos;
}

const std::unordered_set<std::string_view>& paragraph_breakers() {
  static const std::unordered_set<std::string_view> tags{
      "address", "article", "aside",  "blockquote", "body",   "dd",     "div",  "dl",      "dt",    "fieldset",
      "figcaption", "figure", "footer", "form",   "h1",     "h2",     "h3",   "h4",      "h5",    "h6",
      "header",  "hr",     "html",   "li",         "main",   "nav",    "ol",   "pre",     "section", "table",
      "td",      "th",     "tr",     "ul"};
  return tags;
}

const std::unordered_map<std::string_view, char32_t>& named_entities() {
  static const std::unordered_map<std::string_view, char32_t> table{
      {"amp", '&'},      {"lt", '<'},        {"gt", '>'},       {"quot", '"'},     {"apos", '\''},
      {"nbsp", 0xA0},    {"ndash", 0x2013},  {"mdash", 0x2014}, {"hellip", 0x2026}, {"lsquo", 0x2018},
      {"rsquo", 0x2019}, {"ldquo", 0x201C},  {"rdquo", 0x201D}, {"laquo", 0xAB},   {"raquo", 0xBB},
      {"copy", 0xA9},    {"reg", 0xAE},      {"trade", 0x2122}, {"euro", 0x20AC},  {"pound", 0xA3},
      {"deg", 0xB0},     {"middot", 0xB7},   {"times", 0xD7},   {"bull", 0x2022},  {"shy", 0xAD},
      {"eacute", 0xE9},  {"egrave", 0xE8},   {"ecirc", 0xEA},   {"aacute", 0xE1},  {"agrave", 0xE0},
      {"acirc", 0xE2},   {"iacute", 0xED},   {"oacute", 0xF3},  {"ocirc", 0xF4},   {"uacute", 0xFA},
      {"uuml", 0xFC},    {"ouml", 0xF6},     {"auml", 0xE4},    {"Uuml", 0xDC},    {"Ouml", 0xD6},
      {"Auml", 0xC4},    {"szlig", 0xDF},    {"ccedil", 0xE7},  {"ntilde", 0xF1},  {"Eacute", 0xC9},
      {"thinsp", 0x2009}, {"ensp", 0x2002},  {"emsp", 0x2003},  {"zwj", 0x200D},   {"zwnj", 0x200C}};
  return table;
}

bool is_sentence_end(char32_t cp) { return cp == '.' || cp == '!' || cp == '?' || cp == 0x2026; }

bool is_closer(char32_t cp) {
  return cp == '"' || cp == '\'' || cp == ')' || cp == ']' || cp == 0x201D || cp == 0x2019 || cp == 0xBB;
}

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> set{
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "inc", "ltd", "co", "corp", "gen", "gov",
      "sen", "rep", "no", "fig", "mt", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
      "nov", "dec", "approx", "dept", "est", "e.g", "i.e", "u.s", "u.k", "a.m", "p.m"};
  return set;
}

bool is_joiner(char32_t cp) { return cp == '\'' || cp == 0x2019 || cp == '-' || cp == 0x2010; }

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    const auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(text[i++]);
      continue;
    }
    const std::string_view name = text.substr(i + 1, semi - i - 1);
    std::optional<char32_t> cp;
    if (!name.empty() && name[0] == '#') {
      const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
      const std::string digits(name.substr(hex ? 2 : 1));
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [&](char c) {
            return hex ? std::isxdigit(static_cast<unsigned char>(c)) != 0 : std::isdigit(static_cast<unsigned char>(c)) != 0;
          })) {
        const unsigned long v = std::stoul(digits, nullptr, hex ? 16 : 10);
        cp = (v == 0 || v > 0x10FFFF || (v >= 0xD800 && v <= 0xDFFF)) ? utf8::kReplacement : static_cast<char32_t>(v);
      }
    } else if (auto it = named_entities().find(name); it != named_entities().end()) {
      cp = it->second;
    }
    if (!cp) {
      out.push_back(text[i++]);
      continue;
    }
    if (*cp != 0xAD) utf8::append(out, *cp);
    i = semi + 1;
  }
  return out;
}

std::vector<std::string> extract_paragraphs(std::string_view html) {
  std::vector<std::string> out;
  bool in_p = false;
  std::string cur;
  auto close_p = [&] {
    if (!in_p) return;
    auto t = normalize_space(decode_entities(cur));
    if (!t.empty()) out.push_back(std::move(t));
    cur.clear();
    in_p = false;
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      if (in_p) cur.push_back(html[i]);
      ++i;
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      const auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    std::size_t j = i + 1;
    const bool closing = j < html.size() && html[j] == '/';
    if (closing) ++j;
    std::string name;
    while (j < html.size() && std::isalnum(static_cast<unsigned char>(html[j]))) {
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(html[j]))));
      ++j;
    }
    const bool declaration = j < html.size() && (html[j] == '!' || html[j] == '?') && j == i + 1;
    if (name.empty() && !declaration) {
      if (in_p) cur.push_back('<');
      ++i;
      continue;
    }
    const auto end = tag_end(html, i);
    if (end == std::string_view::npos) break;
    i = end + 1;
    if (declaration) continue;

    if (!closing && (name == "script" || name == "style" || name == "noscript" || name == "template")) {
      const auto close = ifind(html, "</" + name, i);
      if (close == std::string_view::npos) {
        i = html.size();
      } else {
        const auto close_end = tag_end(html, close);
        i = close_end == std::string_view::npos ? html.size() : close_end + 1;
      }
      continue;
    }
    if (name == "p") {
      close_p();
      if (!closing) in_p = true;
    } else if (paragraph_breakers().count(name)) {
      close_p();
    } else if (name == "br" && in_p) {
      cur.push_back(' ');
    }
  }
  close_p();
  if (out.empty()) throw Error(ErrorCode::NoParagraphs, "document contains no paragraph text");
  return out;
}

std::vector<std::string> extract_ebook_blocks(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::size_t i = 0;
    while (i <= text.size()) {
      auto nl = text.find('\n', i);
      if (nl == std::string_view::npos) nl = text.size();
      std::string line(text.substr(i, nl - i));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      i = nl + 1;
    }
  }
  std::size_t begin = 0, end = lines.size();
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].find("*** START OF") != std::string::npos) {
      begin = k + 1;
      break;
    }
  }
  for (std::size_t k = begin; k < lines.size(); ++k) {
    if (lines[k].find("*** END OF") != std::string::npos) {
      end = k;
      break;
    }
  }
  std::vector<std::string> blocks;
  std::string cur;
  auto flush = [&] {
    std::string block = normalize_space(cur);
    block.erase(std::remove(block.begin(), block.end(), '_'), block.end());
    if (!block.empty()) blocks.push_back(std::move(block));
    cur.clear();
  };
  for (std::size_t k = begin; k < end; ++k) {
    if (detail::trim(lines[k]).empty()) {
      flush();
    } else {
      cur += lines[k];
      cur += ' ';
    }
  }
  flush();
  return blocks;
}

std::vector<Token> tokenize(std::string_view text) {
  const auto decoded = utf8::decode(text);
  const auto& cps = decoded.code_points;
  const auto& offs = decoded.byte_offsets;
  std::vector<Token> out;
  bool initial = true;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i];
    if (is_unicode_space(cp)) {
      ++i;
      continue;
    }
    if (detail::is_word_cp(cp)) {
      std::size_t j = i + 1;
      bool digits = is_digit(cp);
      while (j < cps.size()) {
        if (detail::is_word_cp(cps[j])) {
          digits = digits || is_digit(cps[j]);
          ++j;
        } else if (j + 1 < cps.size() && detail::is_word_cp(cps[j + 1]) &&
                   (is_joiner(cps[j]) || ((cps[j] == '.' || cps[j] == ',') && is_digit(cps[j - 1]) && is_digit(cps[j + 1])))) {
          j += 2;
        } else {
          break;
        }
      }
      Token t{std::string(text.substr(offs[i], offs[j] - offs[i])), {i, j}, digits ? TokenKind::number : TokenKind::word,
              initial};
      initial = false;
      out.push_back(std::move(t));
      i = j;
      continue;
    }
    out.push_back(Token{std::string(text.substr(offs[i], offs[i + 1] - offs[i])), {i, i + 1}, TokenKind::punctuation, false});
    if (is_sentence_end(cp)) initial = true;
    ++i;
  }
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  for (const auto& t : tokenize(text)) n += t.kind != TokenKind::punctuation;
  return n;
}

std::vector<std::string> split_sentences(std::string_view block) {
  const auto decoded = utf8::decode(block);
  const auto& cps = decoded.code_points;
  const auto& offs = decoded.byte_offsets;
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (!is_sentence_end(cps[i])) continue;
    std::size_t j = i + 1;
    while (j < cps.size() && (is_sentence_end(cps[j]) || is_closer(cps[j]))) ++j;
    if (j < cps.size() && !is_unicode_space(cps[j])) continue;
    std::size_t next = j;
    while (next < cps.size() && is_unicode_space(cps[next])) ++next;
    if (next < cps.size() && cps[next] < 0x80 && std::islower(static_cast<int>(cps[next]))) continue;
    if (cps[i] == '.' && j == i + 1) {
      std::size_t w = i;
      while (w > start && (detail::is_word_cp(cps[w - 1]) || cps[w - 1] == '.')) --w;
      std::string word = detail::to_lower_ascii(block.substr(offs[w], offs[i] - offs[w]));
      const bool initial = i - w == 1 && cps[w] < 0x80 && std::isupper(static_cast<int>(cps[w]));
      if (initial || abbreviations().count(word)) continue;
    }
    auto s = detail::trim(block.substr(offs[start], offs[j] - offs[start]));
    if (!s.empty()) out.emplace_back(s);
    start = next;
    i = next == 0 ? 0 : next - 1;
  }
  if (start < cps.size()) {
    auto s = detail::trim(block.substr(offs[start]));
    if (!s.empty()) out.emplace_back(s);
  }
  return out;
}

std::vector<std::string> passages_from_block(std::string_view block, const PassageBounds& bounds) {
  const auto sentences = split_sentences(block);
  std::vector<std::size_t> counts;
  for (const auto& s : sentences) counts.push_back(word_count(s));
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < sentences.size()) {
    std::size_t words = 0, j = i;
    while (j < sentences.size() && words < bounds.min_words) words += counts[j++];
    if (words < bounds.min_words) break;
    if (words > bounds.max_words) {
      ++i;
      continue;
    }
    std::string passage = sentences[i];
    for (std::size_t k = i + 1; k < j; ++k) passage += " " + sentences[k];
    out.push_back(std::move(passage));
    i = j;
  }
  return out;
}

}  // namespace emojinize::corpus
