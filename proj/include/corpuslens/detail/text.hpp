/*
 * Copyright 2026 The corpuslens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// UTF-8 helpers backed by ICU. ASCII input takes a fast path everywhere.

#pragma once

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "corpuslens/error.hpp"

namespace corpuslens::detail {

inline bool is_ascii(std::string_view s) noexcept {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

// Calls fn(code_point, byte_offset, byte_length) for every code point.
// Ill-formed sequences are reported as U+FFFD.
template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto length = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < length) {
    const std::int32_t start = i;
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) c = 0xFFFD;
    fn(c, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
  }
}

inline void append_code_point(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t n = 0;
  U8_APPEND_UNSAFE(reinterpret_cast<std::uint8_t*>(buf), n, c);
  out.append(buf, static_cast<std::size_t>(n));
}

inline bool is_space(UChar32 c) noexcept {
  if (c < 0x80) return c == ' ' || (c >= '\t' && c <= '\r');
  return u_isUWhiteSpace(c);
}

inline bool is_upper(UChar32 c) noexcept {
  if (c < 0x80) return c >= 'A' && c <= 'Z';
  return u_isupper(c) || u_istitle(c);
}

inline bool is_punct(UChar32 c) noexcept {
  if (c < 0x80) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
           (c >= '{' && c <= '~');
  }
  return u_ispunct(c);
}

inline std::size_t code_point_count(std::string_view s) {
  if (is_ascii(s)) return s.size();
  std::size_t n = 0;
  for_each_code_point(s, [&](UChar32, std::size_t, std::size_t) { ++n; });
  return n;
}

inline std::string nfc(std::string_view s) {
  if (is_ascii(s)) return std::string(s);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  const icu::UnicodeString src =
      icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  icu::UnicodeString dst = normalizer->normalize(src, status);
  if (U_FAILURE(status)) throw DataError("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

// NFC, whitespace runs collapsed to one ASCII space, other control characters
// dropped, leading/trailing whitespace trimmed.
inline std::string normalize_text(std::string_view raw) {
  const std::string composed = nfc(raw);
  std::string out;
  out.reserve(composed.size());
  bool pending_space = false;
  for_each_code_point(composed, [&](UChar32 c, std::size_t, std::size_t) {
    if (is_space(c)) {
      pending_space = !out.empty();
      return;
    }
    if (u_iscntrl(c) || c == 0xFEFF) return;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    append_code_point(out, c);
  });
  return out;
}

inline std::string to_lower(std::string_view s) {
  if (is_ascii(s)) {
    std::string out(s);
    for (char& c : out) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
  }
  icu::UnicodeString u =
      icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

// Splits on any Unicode white space; empty pieces are skipped.
inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  if (is_ascii(s)) {
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
      const std::size_t start = i;
      while (i < s.size() && !is_space(static_cast<unsigned char>(s[i]))) ++i;
      if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
  }
  std::size_t start = std::string_view::npos;
  for_each_code_point(s, [&](UChar32 c, std::size_t off, std::size_t) {
    if (is_space(c)) {
      if (start != std::string_view::npos) out.push_back(s.substr(start, off - start));
      start = std::string_view::npos;
    } else if (start == std::string_view::npos) {
      start = off;
    }
  });
  if (start != std::string_view::npos) out.push_back(s.substr(start));
  return out;
}

inline std::size_t whitespace_token_count(std::string_view s) { return split_whitespace(s).size(); }

}  // namespace corpuslens::detail
