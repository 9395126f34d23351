#pragma once

// Intermediate files passed between pipeline stages: candidates JSONL, the
// ranked CSV, and the selected name list.

#include <placeharvest/csv.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/extractors.hpp>
#include <placeharvest/geocluster.hpp>

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace placeharvest {

// One object per term, in term order:
// {"term", "points": [{"post_id", "lat", "lon"}], "mentions": [{"post_id", "start", "end", "surface", "source"}]}
inline std::string format_candidates_jsonl(const CandidateSet& candidates) {
  std::string out;
  for (const auto& [term, entry] : candidates) {
    auto points = nlohmann::json::array();
    for (size_t i = 0; i < entry.points.size(); ++i) {
      points.push_back({{"post_id", entry.post_ids[i]}, {"lat", entry.points[i].lat_deg}, {"lon", entry.points[i].lon_deg}});
    }
    auto mentions = nlohmann::json::array();
    for (const auto& m : entry.mentions) {
      mentions.push_back(
          {{"post_id", m.post_id}, {"start", m.start}, {"end", m.end}, {"surface", m.surface}, {"source", m.source}});
    }
    out += nlohmann::json{{"term", term}, {"points", points}, {"mentions", mentions}}.dump();
    out.push_back('\n');
  }
  return out;
}

inline CandidateSet parse_candidates_jsonl(std::string_view content, const std::string& what = "candidates") {
  CandidateSet out;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CandidateEntry entry;
      for (const auto& p : j.at("points")) {
        entry.post_ids.push_back(p.at("post_id").get<std::string>());
        entry.points.push_back({p.at("lat").get<double>(), p.at("lon").get<double>()});
      }
      for (const auto& m : j.at("mentions")) {
        entry.mentions.push_back({m.at("post_id").get<std::string>(), m.at("start").get<size_t>(),
                                  m.at("end").get<size_t>(), m.at("surface").get<std::string>(),
                                  m.at("source").get<std::string>()});
      }
      if (!out.emplace(j.at("term").get<std::string>(), std::move(entry)).second) {
        throw DataError("duplicate term");
      }
    } catch (const std::exception& e) {
      throw DataError(what + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline const std::vector<std::string>& ranked_csv_columns() {
  static const std::vector<std::string> cols{"term",        "n_raw",        "n_filtered",
                                             "entropy_sum", "adjusted_sum", "normalized_score"};
  return cols;
}

inline std::string format_ranked_csv(const std::vector<SsiResult>& ranked) {
  std::string out = csv::join(ranked_csv_columns());
  for (const auto& r : ranked) {
    out += csv::join({r.term, std::to_string(r.n_raw), std::to_string(r.n_filtered), csv::format_double(r.entropy_sum),
                      csv::format_double(r.adjusted_sum), csv::format_double(r.normalized_score)});
  }
  return out;
}

// Per-scale entropies are not stored in the CSV and come back empty.
inline std::vector<SsiResult> parse_ranked_csv(std::string_view content, const std::string& what = "ranked csv") {
  const auto records = csv::parse(content);
  if (records.empty()) throw DataError(what + ": missing header");
  const csv::Header h(records.front(), ranked_csv_columns(), what);
  std::vector<SsiResult> out;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    SsiResult s;
    double n_raw = 0.0;
    double n_filtered = 0.0;
    if (f.size() != records.front().fields.size() || !csv::parse_double(f[h["n_raw"]], n_raw) ||
        !csv::parse_double(f[h["n_filtered"]], n_filtered) || !csv::parse_double(f[h["entropy_sum"]], s.entropy_sum) ||
        !csv::parse_double(f[h["adjusted_sum"]], s.adjusted_sum) ||
        !csv::parse_double(f[h["normalized_score"]], s.normalized_score) || n_raw < 0 || n_filtered < 0) {
      throw DataError(what + " line " + std::to_string(records[r].line) + ": malformed row");
    }
    s.term = f[h["term"]];
    s.n_raw = static_cast<size_t>(n_raw);
    s.n_filtered = static_cast<size_t>(n_filtered);
    out.push_back(std::move(s));
  }
  return out;
}

// Terms with normalized_score <= threshold, in ranked order.
inline std::vector<std::string> select_terms(const std::vector<SsiResult>& ranked, double threshold) {
  std::vector<std::string> out;
  for (const auto& r : ranked) {
    if (r.normalized_score <= threshold) out.push_back(r.term);
  }
  return out;
}

inline std::string format_term_list(const std::vector<std::string>& terms) {
  std::string out;
  for (const auto& t : terms) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

}  // namespace placeharvest
