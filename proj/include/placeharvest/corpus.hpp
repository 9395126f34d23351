#pragma once

// Geotagged advertisement corpora: loading from the ads CSV, writing it back,
// and removing reposts and near-verbatim duplicates.

#include <placeharvest/csv.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/geo.hpp>
#include <placeharvest/unicode.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace placeharvest {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

struct Advertisement {
  std::string post_id;
  std::optional<std::string> repost_id;
  Timestamp post_time{};
  GeoPoint location;
  std::string text;

  friend bool operator==(const Advertisement&, const Advertisement&) = default;
};

struct Corpus {
  std::string region_id;
  std::vector<Advertisement> ads;
};

struct RowIssue {
  size_t line = 0;
  std::string message;
};

struct LoadReport {
  size_t rows = 0;
  size_t loaded = 0;
  size_t missing_location = 0;  // dropped: no coordinates
  std::vector<RowIssue> invalid;  // dropped: present but unusable
};

inline constexpr size_t kDedupPrefixScalars = 50;

namespace detail {

inline bool parse_fixed_int(std::string_view s, size_t pos, size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  for (size_t i = 0; i < len; ++i) {
    if (first[i] < '0' || first[i] > '9') return false;
  }
  return std::from_chars(first, first + len, out).ec == std::errc{};
}

}  // namespace detail

// ISO 8601 date-time: YYYY-MM-DD[T ]hh:mm[:ss[.fff...]][Z|+hh:mm|-hh:mm|+hhmm].
// A missing offset means UTC.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  int y, mo, d, h, mi, sec = 0;
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
      s[13] != ':') {
    return std::nullopt;
  }
  if (!detail::parse_fixed_int(s, 0, 4, y) || !detail::parse_fixed_int(s, 5, 2, mo) ||
      !detail::parse_fixed_int(s, 8, 2, d) || !detail::parse_fixed_int(s, 11, 2, h) ||
      !detail::parse_fixed_int(s, 14, 2, mi)) {
    return std::nullopt;
  }
  size_t pos = 16;
  int millis = 0;
  if (pos < s.size() && s[pos] == ':') {
    if (!detail::parse_fixed_int(s, pos + 1, 2, sec)) return std::nullopt;
    pos += 3;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      int digits = 0;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        if (digits < 3) millis = millis * 10 + (s[pos] - '0');
        ++digits;
        ++pos;
      }
      if (digits == 0) return std::nullopt;
      for (; digits < 3; ++digits) millis *= 10;
    }
  }
  int offset_min = 0;
  if (pos < s.size()) {
    const char sign = s[pos];
    if ((sign == 'Z' || sign == 'z') && pos + 1 == s.size()) {
      pos = s.size();
    } else if (sign == '+' || sign == '-') {
      int oh, om = 0;
      if (!detail::parse_fixed_int(s, pos + 1, 2, oh)) return std::nullopt;
      size_t rest = pos + 3;
      if (rest < s.size() && s[rest] == ':') ++rest;
      if (rest < s.size()) {
        if (!detail::parse_fixed_int(s, rest, 2, om) || rest + 2 != s.size()) return std::nullopt;
      }
      if (oh > 23 || om > 59) return std::nullopt;
      offset_min = (sign == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      return std::nullopt;
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  Timestamp t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{millis};
  return t - minutes{offset_min};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<milliseconds> tod{t - day_point};
  char buf[40];
  const long long ms = tod.subseconds().count();
  if (ms == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(tod.hours().count()), static_cast<long long>(tod.minutes().count()),
                  static_cast<long long>(tod.seconds().count()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(tod.hours().count()), static_cast<long long>(tod.minutes().count()),
                  static_cast<long long>(tod.seconds().count()), ms);
  }
  return buf;
}

inline const std::vector<std::string>& ads_csv_columns() {
  static const std::vector<std::string> cols{"post_id", "repost_id", "post_time", "longitude", "latitude", "text"};
  return cols;
}

// Parses ads CSV text. Bad rows are skipped and reported; the load fails only
// when the header is malformed or every data row is rejected.
inline Corpus parse_corpus(std::string_view content, const std::string& region_id, LoadReport* report = nullptr,
                           const std::string& what = "ads csv") {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = LoadReport{};

  const auto records = csv::parse(content);
  if (records.empty()) throw DataError(what + ": missing header");
  const csv::Header header(records.front(), ads_csv_columns(), what);
  const size_t c_id = header["post_id"], c_repost = header["repost_id"], c_time = header["post_time"],
               c_lon = header["longitude"], c_lat = header["latitude"], c_text = header["text"];
  const size_t width = records.front().fields.size();

  Corpus corpus{region_id, {}};
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    ++rep.rows;
    auto reject = [&](std::string msg) { rep.invalid.push_back({rec.line, std::move(msg)}); };
    if (rec.fields.size() != width) {
      reject("expected " + std::to_string(width) + " fields, got " + std::to_string(rec.fields.size()));
      continue;
    }
    const auto& f = rec.fields;
    auto blank = [](const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; };
    if (blank(f[c_lon]) || blank(f[c_lat])) {
      ++rep.missing_location;
      continue;
    }
    Advertisement ad;
    if (f[c_id].empty()) {
      reject("empty post_id");
      continue;
    }
    ad.post_id = f[c_id];
    if (!f[c_repost].empty()) ad.repost_id = f[c_repost];
    const auto t = parse_timestamp(f[c_time]);
    if (!t) {
      reject("bad post_time '" + f[c_time] + "'");
      continue;
    }
    ad.post_time = *t;
    if (!csv::parse_double(f[c_lat], ad.location.lat_deg) || !csv::parse_double(f[c_lon], ad.location.lon_deg)) {
      reject("unparseable coordinates");
      continue;
    }
    if (!is_valid(ad.location)) {
      reject("coordinates out of range");
      continue;
    }
    if (blank(f[c_text])) {
      reject("empty text");
      continue;
    }
    ad.text = f[c_text];
    corpus.ads.push_back(std::move(ad));
  }
  rep.loaded = corpus.ads.size();
  if (rep.rows > 0 && corpus.ads.empty() && !rep.invalid.empty()) {
    throw DataError(what + ": all " + std::to_string(rep.rows) + " rows rejected (first: line " +
                    std::to_string(rep.invalid.front().line) + ": " + rep.invalid.front().message + ")");
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path, const std::string& region_id, LoadReport* report = nullptr) {
  return parse_corpus(csv::read_file(path), region_id, report, path);
}

inline std::string format_corpus_csv(const Corpus& corpus) {
  std::string out = csv::join(ads_csv_columns());
  for (const auto& ad : corpus.ads) {
    out += csv::join({ad.post_id, ad.repost_id.value_or(""), format_timestamp(ad.post_time),
                      csv::format_fixed(ad.location.lon_deg, 7), csv::format_fixed(ad.location.lat_deg, 7),
                      ad.text});
  }
  return out;
}

inline void write_corpus(const std::string& path, const Corpus& corpus) {
  csv::write_file(path, format_corpus_csv(corpus));
}

// Keeps the earliest copy of each advertisement. Processing order is
// (post_time, post_id) with the remaining fields as a final tiebreak, so the
// result does not depend on input order. An ad is dropped when
//  - its post_id was already retained or named as a retained ad's repost_id,
//  - its repost_id names a retained ad's post_id or repost_id, or an ad
//    dropped under this rule (so A <- B <- C keeps only A), or
//  - its first 50 scalar values of raw text equal a retained ad's.
inline Corpus dedup(const Corpus& corpus) {
  std::vector<const Advertisement*> order;
  order.reserve(corpus.ads.size());
  for (const auto& ad : corpus.ads) order.push_back(&ad);
  std::sort(order.begin(), order.end(), [](const Advertisement* a, const Advertisement* b) {
    return std::tie(a->post_time, a->post_id, a->repost_id, a->text, a->location.lat_deg, a->location.lon_deg) <
           std::tie(b->post_time, b->post_id, b->repost_id, b->text, b->location.lat_deg, b->location.lon_deg);
  });

  std::set<std::string> seen_ids;
  std::set<std::string> seen_prefixes;
  Corpus out{corpus.region_id, {}};
  for (const Advertisement* ad : order) {
    if (seen_ids.count(ad->post_id)) continue;
    if (ad->repost_id && seen_ids.count(*ad->repost_id)) {
      // Later reposts of this one belong to the same family.
      seen_ids.insert(ad->post_id);
      continue;
    }
    std::string prefix = ad->text.substr(0, unicode::utf8_prefix_bytes(ad->text, kDedupPrefixScalars));
    if (seen_prefixes.count(prefix)) continue;

    seen_ids.insert(ad->post_id);
    if (ad->repost_id) seen_ids.insert(*ad->repost_id);
    seen_prefixes.insert(std::move(prefix));
    out.ads.push_back(*ad);
  }
  return out;
}

}  // namespace placeharvest
