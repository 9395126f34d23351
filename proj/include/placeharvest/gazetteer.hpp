#pragma once

// Comparison of extracted names against gazetteer files. A term is a direct
// match when its normalized form equals an entry's (optionally ignoring
// spaces, so "green belt" finds "Greenbelt"); otherwise an indirect match
// when its tokens occur contiguously inside an entry's name ("bsu" inside
// "Boise State University (BSU) Education Building"); otherwise it is left
// for manual review.

#include <placeharvest/csv.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/extractors.hpp>
#include <placeharvest/geo.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace placeharvest {

struct GazetteerEntry {
  std::string name;
  std::string name_norm;
  std::vector<std::string> name_tokens;
  std::optional<GeoPoint> location;  // loaded, not used for matching
  std::optional<std::string> feature_type;
  std::string source;

  friend bool operator==(const GazetteerEntry&, const GazetteerEntry&) = default;
};

enum class MatchCategory { kDirect, kIndirect, kUnmatched };

inline std::string_view to_string(MatchCategory c) {
  switch (c) {
    case MatchCategory::kDirect: return "direct";
    case MatchCategory::kIndirect: return "indirect";
    case MatchCategory::kUnmatched: return "unmatched";
  }
  return "?";
}

struct TermMatch {
  std::string term;
  std::vector<GazetteerEntry> entries;
};

struct MatchReport {
  std::vector<TermMatch> direct;
  std::vector<TermMatch> indirect;
  std::vector<std::string> unmatched;  // for manual review
};

// Whitespace tokens of a normalized name with surrounding punctuation
// removed from each, so "(bsu)" becomes "bsu".
inline std::vector<std::string> name_tokens(std::string_view name_norm) {
  std::vector<std::string> tokens;
  size_t pos = 0;
  while (pos < name_norm.size()) {
    size_t sp = name_norm.find(' ', pos);
    if (sp == std::string_view::npos) sp = name_norm.size();
    std::string token = normalize_term(name_norm.substr(pos, sp - pos));
    if (!token.empty()) tokens.push_back(std::move(token));
    pos = sp + 1;
  }
  return tokens;
}

inline GazetteerEntry make_gazetteer_entry(std::string name, std::string source = "",
                                           std::optional<GeoPoint> location = std::nullopt,
                                           std::optional<std::string> feature_type = std::nullopt) {
  GazetteerEntry e;
  e.name_norm = normalize_term(name);
  e.name_tokens = name_tokens(e.name_norm);
  e.name = std::move(name);
  e.location = location;
  e.feature_type = std::move(feature_type);
  e.source = std::move(source);
  return e;
}

struct GazetteerLoadReport {
  size_t rows = 0;
  std::vector<RowIssue> rejected;
};

inline std::vector<GazetteerEntry> parse_gazetteer(std::string_view content, const std::string& source,
                                                   GazetteerLoadReport* report = nullptr,
                                                   const std::string& what = "gazetteer csv") {
  GazetteerLoadReport local;
  GazetteerLoadReport& rep = report ? *report : local;
  rep = GazetteerLoadReport{};
  const auto records = csv::parse(content);
  if (records.empty()) return {};
  const csv::Header h(records.front(), {"name", "latitude", "longitude", "feature_type"}, what);
  const size_t width = records.front().fields.size();
  std::vector<GazetteerEntry> out;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    ++rep.rows;
    if (rec.fields.size() != width) {
      rep.rejected.push_back({rec.line, "wrong field count"});
      continue;
    }
    const auto& f = rec.fields;
    if (normalize_term(f[h["name"]]).empty()) {
      rep.rejected.push_back({rec.line, "missing name"});
      continue;
    }
    std::optional<GeoPoint> location;
    const std::string& lat = f[h["latitude"]];
    const std::string& lon = f[h["longitude"]];
    if (!lat.empty() || !lon.empty()) {
      GeoPoint p;
      if (!csv::parse_double(lat, p.lat_deg) || !csv::parse_double(lon, p.lon_deg) || !is_valid(p)) {
        rep.rejected.push_back({rec.line, "bad coordinates"});
        continue;
      }
      location = p;
    }
    std::optional<std::string> type;
    if (!f[h["feature_type"]].empty()) type = f[h["feature_type"]];
    out.push_back(make_gazetteer_entry(f[h["name"]], source, location, std::move(type)));
  }
  return out;
}

// An empty file is an empty gazetteer.
inline std::vector<GazetteerEntry> load_gazetteer(const std::string& path, const std::string& source,
                                                  GazetteerLoadReport* report = nullptr) {
  return parse_gazetteer(csv::read_file(path), source, report, path);
}

namespace detail {

inline std::string without_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ') out.push_back(c);
  }
  return out;
}

inline bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

inline bool entry_less(const GazetteerEntry& a, const GazetteerEntry& b) {
  const auto key = [](const GazetteerEntry& e) {
    return std::tuple<const std::string&, const std::string&, bool, double, double, std::string>(
        e.source, e.name, e.location.has_value(), e.location ? e.location->lat_deg : 0.0,
        e.location ? e.location->lon_deg : 0.0, e.feature_type.value_or(""));
  };
  return key(a) < key(b);
}

}  // namespace detail

// Linear-scan reference forms of the two rules.
inline std::vector<GazetteerEntry> direct_match(std::string_view term, const std::vector<GazetteerEntry>& entries,
                                                bool space_insensitive = true) {
  const std::string squashed = detail::without_spaces(term);
  std::vector<GazetteerEntry> out;
  for (const auto& e : entries) {
    if (e.name_norm == term || (space_insensitive && detail::without_spaces(e.name_norm) == squashed)) {
      out.push_back(e);
    }
  }
  std::sort(out.begin(), out.end(), detail::entry_less);
  return out;
}

inline std::vector<GazetteerEntry> indirect_match(std::string_view term, const std::vector<GazetteerEntry>& entries) {
  const auto needle = name_tokens(term);
  std::vector<GazetteerEntry> out;
  for (const auto& e : entries) {
    if (detail::contains_run(e.name_tokens, needle)) out.push_back(e);
  }
  std::sort(out.begin(), out.end(), detail::entry_less);
  return out;
}

// Inverted index over a fixed gazetteer; gives the same answers as
// direct_match / indirect_match without scanning every entry.
class GazetteerIndex {
 public:
  explicit GazetteerIndex(std::vector<GazetteerEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), detail::entry_less);
    for (size_t i = 0; i < entries_.size(); ++i) {
      by_name_[entries_[i].name_norm].push_back(i);
      by_squashed_[detail::without_spaces(entries_[i].name_norm)].push_back(i);
      std::set<std::string> distinct(entries_[i].name_tokens.begin(), entries_[i].name_tokens.end());
      for (const auto& t : distinct) by_token_[t].push_back(i);
    }
  }

  const std::vector<GazetteerEntry>& entries() const { return entries_; }

  std::vector<GazetteerEntry> direct(std::string_view term, bool space_insensitive = true) const {
    std::set<size_t> hits;
    if (auto it = by_name_.find(std::string(term)); it != by_name_.end()) hits.insert(it->second.begin(), it->second.end());
    if (space_insensitive) {
      if (auto it = by_squashed_.find(detail::without_spaces(term)); it != by_squashed_.end()) {
        hits.insert(it->second.begin(), it->second.end());
      }
    }
    return collect(hits);
  }

  std::vector<GazetteerEntry> indirect(std::string_view term) const {
    const auto needle = name_tokens(term);
    std::set<size_t> hits;
    if (needle.empty()) return {};
    auto it = by_token_.find(needle.front());
    if (it == by_token_.end()) return {};
    for (size_t i : it->second) {
      if (detail::contains_run(entries_[i].name_tokens, needle)) hits.insert(i);
    }
    return collect(hits);
  }

 private:
  std::vector<GazetteerEntry> collect(const std::set<size_t>& hits) const {
    std::vector<GazetteerEntry> out;
    for (size_t i : hits) out.push_back(entries_[i]);
    return out;
  }

  std::vector<GazetteerEntry> entries_;
  std::map<std::string, std::vector<size_t>> by_name_;
  std::map<std::string, std::vector<size_t>> by_squashed_;
  std::map<std::string, std::vector<size_t>> by_token_;
};

// Classifies each distinct term by the first rule that fires: direct, then
// indirect, else unmatched. Lists are sorted by term.
inline MatchReport compare(const std::vector<std::string>& terms, const GazetteerIndex& index,
                           bool space_insensitive = true) {
  const std::set<std::string> distinct(terms.begin(), terms.end());
  MatchReport report;
  for (const auto& term : distinct) {
    if (auto d = index.direct(term, space_insensitive); !d.empty()) {
      report.direct.push_back({term, std::move(d)});
    } else if (auto ind = index.indirect(term); !ind.empty()) {
      report.indirect.push_back({term, std::move(ind)});
    } else {
      report.unmatched.push_back(term);
    }
  }
  return report;
}

inline MatchReport compare(const std::vector<std::string>& terms, const std::vector<GazetteerEntry>& entries,
                           bool space_insensitive = true) {
  return compare(terms, GazetteerIndex(entries), space_insensitive);
}

// Removes terms listed (one per line, normalized on read) in an exclusion list.
inline std::vector<std::string> apply_exclusions(const std::vector<std::string>& terms,
                                                 const std::set<std::string>& excluded) {
  std::vector<std::string> out;
  for (const auto& t : terms) {
    if (!excluded.count(t)) out.push_back(t);
  }
  return out;
}

inline std::vector<std::string> parse_term_list(std::string_view content) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string term = normalize_term(content.substr(pos, nl - pos));
    if (!term.empty()) out.push_back(std::move(term));
    pos = nl + 1;
  }
  return out;
}

inline std::vector<std::string> load_term_list(const std::string& path) {
  return parse_term_list(csv::read_file(path));
}

inline std::string format_match_report_csv(const MatchReport& report) {
  struct Row {
    std::string term, category, name, source;
  };
  std::vector<Row> rows;
  auto add = [&](const std::vector<TermMatch>& matches, MatchCategory c) {
    for (const auto& m : matches) {
      for (const auto& e : m.entries) rows.push_back({m.term, std::string(to_string(c)), e.name, e.source});
    }
  };
  add(report.direct, MatchCategory::kDirect);
  add(report.indirect, MatchCategory::kIndirect);
  for (const auto& t : report.unmatched) rows.push_back({t, std::string(to_string(MatchCategory::kUnmatched)), "", ""});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.term < b.term; });

  std::string out = csv::join({"term", "category", "matched_name", "source"});
  for (const auto& r : rows) out += csv::join({r.term, r.category, r.name, r.source});
  return out;
}

}  // namespace placeharvest
