#pragma once

// Thin wrappers over ICU for the handful of Unicode operations the text
// pipeline needs. Offsets everywhere in the library are Unicode scalar
// values, so most callers work on std::u32string.

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>
#include <unicode/locid.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace placeharvest::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

// Invalid byte sequences decode to U+FFFD, one per maximal bad subsequence.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? kReplacement : static_cast<char32_t>(c));
  }
  return out;
}

inline std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error) {
      n = 0;
      U8_APPEND_UNSAFE(buf, n, kReplacement);
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<size_t>(n));
  }
  return out;
}

// Number of bytes occupied by the first `count` scalar values of `s`
// (all of `s` when it is shorter).
inline size_t utf8_prefix_bytes(std::string_view s, size_t count) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  for (size_t seen = 0; seen < count && i < length; ++seen) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
  }
  return static_cast<size_t>(i);
}

inline size_t scalar_count(std::string_view s) { return decode_utf8(s).size(); }

// Full (locale-independent) Unicode lowercase mapping.
inline std::string to_lower(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

inline bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)) != 0; }
inline bool is_alnum(char32_t c) { return u_isalnum(static_cast<UChar32>(c)) != 0; }
inline bool is_upper(char32_t c) { return u_isUUppercase(static_cast<UChar32>(c)) != 0; }
inline bool is_lower(char32_t c) { return u_isULowercase(static_cast<UChar32>(c)) != 0; }
inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

}  // namespace placeharvest::unicode
