#pragma once

// Stage 1: place-name candidate extraction.
//
// Two heuristic extractors run over the advertisement text; output from
// external NER tools enters through the annotations JSONL file. Everything is
// pooled by union_candidates into a term -> points map keyed by the
// normalized surface form.

#include <placeharvest/corpus.hpp>
#include <placeharvest/csv.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/unicode.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace placeharvest {

// Offsets are Unicode scalar values into the advertisement text, [start, end).
struct MentionSpan {
  std::string post_id;
  size_t start = 0;
  size_t end = 0;
  std::string surface;
  std::string source;

  friend bool operator==(const MentionSpan&, const MentionSpan&) = default;
};

struct CandidateEntry {
  std::vector<MentionSpan> mentions;
  std::vector<std::string> post_ids;  // parallel to points, corpus order
  std::vector<GeoPoint> points;
};

using CandidateSet = std::map<std::string, CandidateEntry>;

inline const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words{
      // articles, pronouns, conjunctions
      "a", "an", "the", "and", "or", "but", "nor", "so", "yet", "i", "we", "you", "he", "she", "it", "they",
      "this", "that", "these", "those", "my", "our", "your", "their", "its", "is", "are", "was", "be",
      // prepositions
      "in", "on", "at", "near", "to", "from", "of", "for", "by", "with", "into", "onto", "over", "under",
      "about", "above", "across", "after", "against", "along", "among", "around", "before", "behind",
      "below", "beneath", "beside", "between", "beyond", "during", "except", "inside", "outside",
      "through", "toward", "towards", "upon", "within", "without", "off", "up", "down",
      // months
      "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
      "november", "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov",
      "dec",
      // weekdays
      "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "mon", "tue", "tues",
      "wed", "thu", "thur", "thurs", "fri", "sat", "sun",
      // emphasis vocabulary common in housing ads
      "huge", "great", "view", "views", "beautiful", "spacious", "large", "big", "nice", "lovely",
      "gorgeous", "amazing", "awesome", "bright", "quiet", "clean", "cozy", "modern", "new", "newly",
      "perfect", "best", "free", "must", "see", "call", "now", "available", "please", "wow"};
  return words;
}

inline const std::vector<std::string>& default_cues() {
  static const std::vector<std::string> cues{"in",   "near",         "at",           "close to",
                                             "minutes from", "walking distance to", "heart of"};
  return cues;
}

struct ExtractorConfig {
  std::vector<std::string> stopwords = default_stopwords();
  std::vector<std::string> cues = default_cues();
  std::vector<std::string> cue_skip{"a", "an", "the"};  // skipped between a cue and its run
  size_t max_run_tokens = 4;
  double all_caps_guard = 0.80;  // capitalized extractor yields nothing above this caps ratio
};

inline constexpr std::string_view kCapitalizedSource = "capitalized";
inline constexpr std::string_view kCueSource = "preposition_cue";

// Lowercase, trim leading/trailing punctuation and whitespace, collapse
// internal whitespace runs to one space. Internal punctuation is kept.
inline std::string normalize_term(std::string_view raw) {
  const std::u32string text = unicode::decode_utf8(unicode::to_lower(raw));
  size_t first = 0;
  size_t last = text.size();
  while (first < last && !unicode::is_alnum(text[first])) ++first;
  while (last > first && !unicode::is_alnum(text[last - 1])) --last;
  std::u32string out;
  out.reserve(last - first);
  bool pending_space = false;
  for (size_t i = first; i < last; ++i) {
    if (unicode::is_space(text[i])) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(text[i]);
  }
  return unicode::encode_utf8(out);
}

namespace detail {

struct Token {
  size_t start = 0;
  size_t end = 0;
};

inline bool is_joiner(char32_t c) { return c == U'-' || c == U'\'' || c == U'’'; }

// Word tokens: alphanumeric runs, with single hyphens/apostrophes allowed
// between alphanumerics ("K-Town", "O'Neil").
inline std::vector<Token> tokenize(const std::u32string& text) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < text.size()) {
    if (!unicode::is_alnum(text[i])) {
      ++i;
      continue;
    }
    const size_t start = i;
    while (i < text.size()) {
      if (unicode::is_alnum(text[i])) {
        ++i;
      } else if (is_joiner(text[i]) && i + 1 < text.size() && unicode::is_alnum(text[i + 1])) {
        i += 2;
      } else {
        break;
      }
    }
    tokens.push_back({start, i});
  }
  return tokens;
}

inline bool whitespace_gap(const std::u32string& text, const Token& a, const Token& b) {
  if (b.start <= a.end) return false;
  for (size_t i = a.end; i < b.start; ++i) {
    if (!unicode::is_space(text[i])) return false;
  }
  return true;
}

inline std::string lower_token(const std::u32string& text, const Token& t) {
  return unicode::to_lower(unicode::encode_utf8(std::u32string_view(text).substr(t.start, t.end - t.start)));
}

struct CaseShape {
  size_t letters = 0;
  size_t upper = 0;
  size_t lower = 0;
  bool first_upper = false;
};

inline CaseShape case_shape(const std::u32string& text, const Token& t) {
  CaseShape s;
  s.first_upper = unicode::is_upper(text[t.start]);
  for (size_t i = t.start; i < t.end; ++i) {
    const char32_t c = text[i];
    if (!unicode::is_letter(c)) continue;
    ++s.letters;
    if (unicode::is_upper(c)) ++s.upper;
    if (unicode::is_lower(c)) ++s.lower;
  }
  return s;
}

inline bool is_all_caps(const CaseShape& s) { return s.letters >= 2 && s.lower == 0 && s.upper > 0; }

inline MentionSpan make_span(const std::u32string& text, size_t start, size_t end, std::string_view source) {
  return MentionSpan{"", start, end,
                     unicode::encode_utf8(std::u32string_view(text).substr(start, end - start)),
                     std::string(source)};
}

}  // namespace detail

// Runs of 1..max_run_tokens whitespace-separated tokens that are either
// title-like (uppercase first letter, some lowercase) or ALL-CAPS of 2-6
// characters. Stopwords split runs. Returns nothing for texts that are
// mostly upper case.
inline std::vector<MentionSpan> extract_capitalized(std::string_view utf8_text,
                                                    const ExtractorConfig& config = {}) {
  const std::u32string text = unicode::decode_utf8(utf8_text);
  const auto tokens = detail::tokenize(text);
  const std::set<std::string> stop(config.stopwords.begin(), config.stopwords.end());

  std::vector<detail::CaseShape> shapes;
  shapes.reserve(tokens.size());
  size_t alphabetic = 0;
  size_t caps = 0;
  for (const auto& t : tokens) {
    shapes.push_back(detail::case_shape(text, t));
    if (shapes.back().letters > 0) ++alphabetic;
    if (detail::is_all_caps(shapes.back())) ++caps;
  }
  if (alphabetic == 0 ||
      static_cast<double>(caps) > config.all_caps_guard * static_cast<double>(alphabetic)) {
    return {};
  }

  auto qualifies = [&](size_t i) {
    const auto& s = shapes[i];
    const size_t length = tokens[i].end - tokens[i].start;
    const bool title = s.first_upper && s.lower > 0;
    const bool acronym = detail::is_all_caps(s) && length >= 2 && length <= 6;
    return (title || acronym) && !stop.count(detail::lower_token(text, tokens[i]));
  };

  std::vector<MentionSpan> spans;
  size_t i = 0;
  while (i < tokens.size()) {
    if (!qualifies(i)) {
      ++i;
      continue;
    }
    size_t j = i + 1;
    while (j < tokens.size() && qualifies(j) && detail::whitespace_gap(text, tokens[j - 1], tokens[j])) ++j;
    // Longer runs are headline capitalization, not names.
    if (j - i <= config.max_run_tokens) {
      spans.push_back(detail::make_span(text, tokens[i].start, tokens[j - 1].end, kCapitalizedSource));
    }
    i = j;
  }
  return spans;
}

// Token runs (1..max_run_tokens) immediately following a cue phrase. A run
// stops at any non-whitespace separator, at the next cue, or at the cap.
inline std::vector<MentionSpan> extract_preposition_cue(std::string_view utf8_text,
                                                        const ExtractorConfig& config = {}) {
  const std::u32string text = unicode::decode_utf8(utf8_text);
  const auto tokens = detail::tokenize(text);
  std::vector<std::string> lowered;
  lowered.reserve(tokens.size());
  for (const auto& t : tokens) lowered.push_back(detail::lower_token(text, t));

  std::vector<std::vector<std::string>> cues;
  for (const auto& cue : config.cues) {
    std::vector<std::string> words;
    const std::u32string c = unicode::decode_utf8(unicode::to_lower(cue));
    for (const auto& t : detail::tokenize(c)) words.push_back(detail::lower_token(c, t));
    if (!words.empty()) cues.push_back(std::move(words));
  }
  const std::set<std::string> skip(config.cue_skip.begin(), config.cue_skip.end());

  // Length in tokens of the longest cue starting at token i, or 0.
  auto cue_at = [&](size_t i) -> size_t {
    size_t best = 0;
    for (const auto& cue : cues) {
      if (cue.size() <= best || i + cue.size() > tokens.size()) continue;
      bool match = true;
      for (size_t k = 0; k < cue.size() && match; ++k) {
        match = lowered[i + k] == cue[k] && (k == 0 || detail::whitespace_gap(text, tokens[i + k - 1], tokens[i + k]));
      }
      if (match) best = cue.size();
    }
    return best;
  };

  std::vector<MentionSpan> spans;
  size_t i = 0;
  while (i < tokens.size()) {
    const size_t cue_len = cue_at(i);
    if (cue_len == 0) {
      ++i;
      continue;
    }
    size_t j = i + cue_len;
    while (j < tokens.size() && skip.count(lowered[j]) && detail::whitespace_gap(text, tokens[j - 1], tokens[j])) ++j;
    const size_t run_start = j;
    while (j < tokens.size() && j - run_start < config.max_run_tokens &&
           detail::whitespace_gap(text, tokens[j - 1], tokens[j]) && cue_at(j) == 0) {
      ++j;
    }
    if (j > run_start) {
      spans.push_back(detail::make_span(text, tokens[run_start].start, tokens[j - 1].end, kCueSource));
    }
    i = std::max(j, i + cue_len);
  }
  return spans;
}

struct BuiltinToggles {
  bool capitalized = true;
  bool preposition_cue = true;
};

// Runs the enabled built-in extractors over every ad; one span collection per
// extractor, each in corpus order.
inline std::vector<std::vector<MentionSpan>> run_builtin_extractors(const Corpus& corpus,
                                                                    const ExtractorConfig& config = {},
                                                                    BuiltinToggles toggles = {}) {
  std::vector<std::vector<MentionSpan>> out;
  auto run = [&](auto&& extractor) {
    std::vector<MentionSpan> spans;
    for (const auto& ad : corpus.ads) {
      for (auto& s : extractor(ad.text, config)) {
        s.post_id = ad.post_id;
        spans.push_back(std::move(s));
      }
    }
    out.push_back(std::move(spans));
  };
  if (toggles.capitalized) run(extract_capitalized);
  if (toggles.preposition_cue) run(extract_preposition_cue);
  return out;
}

using AnnotationMap = std::map<std::string, std::vector<MentionSpan>>;

struct AnnotationReport {
  size_t lines = 0;
  size_t spans = 0;
  size_t filtered_label = 0;
  std::vector<RowIssue> malformed;  // bad JSON lines or bad span objects
  size_t invalid_offsets = 0;       // set by validate_annotations
  size_t unknown_post = 0;          // set by validate_annotations
};

// Parses the annotations JSONL. Malformed lines are reported and skipped.
// When `label_allow` is non-empty only spans with a listed label are kept.
inline AnnotationMap parse_external_annotations(std::string_view content, const std::string& source = "external",
                                                const std::vector<std::string>& label_allow = {},
                                                AnnotationReport* report = nullptr) {
  AnnotationReport local;
  AnnotationReport& rep = report ? *report : local;
  const std::set<std::string> allow(label_allow.begin(), label_allow.end());
  AnnotationMap out;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++rep.lines;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string post_id = j.at("post_id").get<std::string>();
      if (post_id.empty()) throw DataError("empty post_id");
      auto& bucket = out[post_id];
      for (const auto& s : j.at("spans")) {
        const long long start = s.at("start").get<long long>();
        const long long end = s.at("end").get<long long>();
        const std::string label = s.contains("label") ? s.at("label").get<std::string>() : "";
        if (!allow.empty() && !allow.count(label)) {
          ++rep.filtered_label;
          continue;
        }
        if (start < 0 || end <= start) {
          ++rep.invalid_offsets;
          continue;
        }
        bucket.push_back(MentionSpan{post_id, static_cast<size_t>(start), static_cast<size_t>(end),
                                     s.at("text").get<std::string>(), source});
        ++rep.spans;
      }
    } catch (const std::exception& e) {
      rep.malformed.push_back({line_no, e.what()});
    }
  }
  return out;
}

inline AnnotationMap load_external_annotations(const std::string& path, const std::string& source = "external",
                                               const std::vector<std::string>& label_allow = {},
                                               AnnotationReport* report = nullptr) {
  return parse_external_annotations(csv::read_file(path), source, label_allow, report);
}

// Drops spans whose post is not in the corpus or whose offsets/text do not
// match the advertisement; returns the surviving spans in corpus order.
inline std::vector<MentionSpan> validate_annotations(const AnnotationMap& annotations, const Corpus& corpus,
                                                     AnnotationReport* report = nullptr) {
  AnnotationReport local;
  AnnotationReport& rep = report ? *report : local;
  std::map<std::string, const Advertisement*> by_id;
  for (const auto& ad : corpus.ads) by_id.emplace(ad.post_id, &ad);
  for (const auto& [post_id, spans] : annotations) {
    if (!by_id.count(post_id)) rep.unknown_post += spans.size();
  }
  std::vector<MentionSpan> out;
  for (const auto& ad : corpus.ads) {
    auto it = annotations.find(ad.post_id);
    if (it == annotations.end()) continue;
    const std::u32string text = unicode::decode_utf8(ad.text);
    for (const auto& span : it->second) {
      if (span.end > text.size() || span.start >= span.end ||
          unicode::encode_utf8(std::u32string_view(text).substr(span.start, span.end - span.start)) !=
              span.surface) {
        ++rep.invalid_offsets;
        continue;
      }
      out.push_back(span);
    }
  }
  return out;
}

struct UnionReport {
  size_t spans_in = 0;
  size_t unknown_post = 0;
  size_t empty_term = 0;
};

// Pools spans from every extractor. Each ad contributes its location at most
// once per term; terms that normalize to the empty string are dropped.
inline CandidateSet union_candidates(const Corpus& corpus, const std::vector<std::vector<MentionSpan>>& extractions,
                                     UnionReport* report = nullptr) {
  UnionReport local;
  UnionReport& rep = report ? *report : local;
  std::map<std::string, size_t> ad_index;
  for (size_t i = 0; i < corpus.ads.size(); ++i) ad_index.emplace(corpus.ads[i].post_id, i);

  // term -> ad index -> mentions
  std::map<std::string, std::map<size_t, std::vector<MentionSpan>>> pooled;
  for (const auto& collection : extractions) {
    for (const auto& span : collection) {
      ++rep.spans_in;
      auto it = ad_index.find(span.post_id);
      if (it == ad_index.end()) {
        ++rep.unknown_post;
        continue;
      }
      std::string term = normalize_term(span.surface);
      if (term.empty()) {
        ++rep.empty_term;
        continue;
      }
      pooled[std::move(term)][it->second].push_back(span);
    }
  }

  CandidateSet out;
  for (auto& [term, per_ad] : pooled) {
    CandidateEntry entry;
    for (auto& [index, mentions] : per_ad) {
      std::sort(mentions.begin(), mentions.end(), [](const MentionSpan& a, const MentionSpan& b) {
        return std::tie(a.start, a.end, a.source, a.surface) < std::tie(b.start, b.end, b.source, b.surface);
      });
      entry.mentions.insert(entry.mentions.end(), mentions.begin(), mentions.end());
      entry.post_ids.push_back(corpus.ads[index].post_id);
      entry.points.push_back(corpus.ads[index].location);
    }
    out.emplace(term, std::move(entry));
  }
  return out;
}

}  // namespace placeharvest
