#pragma once

// Ground truth by annotator majority vote, precision/recall/F-score, the
// 0.01-step threshold sweep over normalized scores, and the operating-point
// rule: among the thresholds with the top-N F-scores, take the one with the
// highest recall.

#include <placeharvest/csv.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/extractors.hpp>
#include <placeharvest/geocluster.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace placeharvest {

struct AnnotationRecord {
  std::string post_id;
  std::string annotator_id;
  std::set<std::string> names;  // normalized
};

struct GroundTruth {
  std::map<std::string, std::set<std::string>> per_post;
  std::set<std::string> all_names;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  size_t retrieved = 0;
  size_t relevant = 0;
  size_t hits = 0;
};

struct CurvePoint {
  double threshold = 0.0;
  Metrics metrics;
};

struct PrCurve {
  std::vector<CurvePoint> points;
};

inline constexpr int kCurveSteps = 100;

inline double f_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline std::vector<AnnotationRecord> parse_ground_truth(std::string_view content,
                                                        const std::string& what = "ground truth") {
  std::vector<AnnotationRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    AnnotationRecord rec;
    try {
      const auto j = nlohmann::json::parse(line);
      rec.post_id = j.at("post_id").get<std::string>();
      rec.annotator_id = j.at("annotator_id").get<std::string>();
      for (const auto& name : j.at("names")) {
        std::string norm = normalize_term(name.get<std::string>());
        if (!norm.empty()) rec.names.insert(std::move(norm));
      }
    } catch (const std::exception& e) {
      throw DataError(what + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.emplace(rec.post_id, rec.annotator_id).second) {
      throw DataError(what + " line " + std::to_string(line_no) + ": duplicate record for post '" + rec.post_id +
                      "' annotator '" + rec.annotator_id + "'");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<AnnotationRecord> load_ground_truth(const std::string& path) {
  return parse_ground_truth(csv::read_file(path), path);
}

// Keeps, per post, the names that at least `quorum` distinct annotators gave.
inline GroundTruth majority_vote(const std::vector<AnnotationRecord>& records, size_t quorum = 2) {
  std::set<std::string> annotators;
  for (const auto& r : records) annotators.insert(r.annotator_id);
  if (annotators.size() < quorum) {
    throw DataError("majority vote needs at least " + std::to_string(quorum) + " annotators, found " +
                    std::to_string(annotators.size()));
  }
  std::map<std::string, std::map<std::string, std::set<std::string>>> votes;  // post -> name -> annotators
  for (const auto& r : records) {
    auto& post = votes[r.post_id];
    for (const auto& name : r.names) post[name].insert(r.annotator_id);
  }
  GroundTruth truth;
  for (const auto& [post_id, names] : votes) {
    auto& agreed = truth.per_post[post_id];
    for (const auto& [name, who] : names) {
      if (who.size() >= quorum) {
        agreed.insert(name);
        truth.all_names.insert(name);
      }
    }
  }
  return truth;
}

// Corpus-level set retrieval metrics against the union of agreed names.
inline Metrics score(const std::set<std::string>& extracted, const GroundTruth& truth) {
  if (truth.all_names.empty()) throw DataError("ground truth contains no agreed place names");
  Metrics m;
  m.retrieved = extracted.size();
  m.relevant = truth.all_names.size();
  for (const auto& name : extracted) m.hits += truth.all_names.count(name);
  m.precision = m.retrieved ? static_cast<double>(m.hits) / static_cast<double>(m.retrieved) : 0.0;
  m.recall = static_cast<double>(m.hits) / static_cast<double>(m.relevant);
  // Same value as 2PR/(P+R), computed from the counts so equal ratios compare equal.
  m.f_score = m.hits ? 2.0 * static_cast<double>(m.hits) / static_cast<double>(m.retrieved + m.relevant) : 0.0;
  return m;
}

inline double curve_threshold(int step) { return static_cast<double>(step) / kCurveSteps; }

// Metrics at thresholds 0.00, 0.01, ..., 1.00; a term is extracted when its
// normalized score is <= the threshold.
inline PrCurve pr_curve(const std::vector<SsiResult>& ranked, const GroundTruth& truth) {
  PrCurve curve;
  curve.points.reserve(kCurveSteps + 1);
  for (int step = 0; step <= kCurveSteps; ++step) {
    const double t = curve_threshold(step);
    std::set<std::string> extracted;
    for (const auto& r : ranked) {
      if (r.normalized_score <= t) extracted.insert(r.term);
    }
    curve.points.push_back({t, score(extracted, truth)});
  }
  return curve;
}

// Thresholds tying the top_n-th best F are all admitted; the admitted one with
// the highest recall wins, then the smallest threshold.
inline double select_threshold(const PrCurve& curve, size_t top_n = 10) {
  if (curve.points.empty()) throw DataError("cannot select a threshold from an empty curve");
  if (top_n == 0) throw ConfigError("top_n must be positive");
  std::vector<double> fs;
  for (const auto& p : curve.points) fs.push_back(p.metrics.f_score);
  std::sort(fs.begin(), fs.end(), std::greater<>());
  const double cut = fs[std::min(top_n, fs.size()) - 1];

  const CurvePoint* best = nullptr;
  for (const auto& p : curve.points) {
    if (p.metrics.f_score < cut) continue;
    if (!best || p.metrics.recall > best->metrics.recall ||
        (p.metrics.recall == best->metrics.recall && p.threshold < best->threshold)) {
      best = &p;
    }
  }
  return best->threshold;
}

inline std::string format_curve_csv(const PrCurve& curve) {
  std::string out = csv::join({"threshold", "precision", "recall", "f_score"});
  for (const auto& p : curve.points) {
    out += csv::join({csv::format_fixed(p.threshold, 2), csv::format_double(p.metrics.precision),
                      csv::format_double(p.metrics.recall), csv::format_double(p.metrics.f_score)});
  }
  return out;
}

inline PrCurve parse_curve_csv(std::string_view content, const std::string& what = "curve csv") {
  const auto records = csv::parse(content);
  if (records.empty()) throw DataError(what + ": missing header");
  const csv::Header h(records.front(), {"threshold", "precision", "recall", "f_score"}, what);
  PrCurve curve;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    CurvePoint p;
    if (f.size() != records.front().fields.size() || !csv::parse_double(f[h["threshold"]], p.threshold) ||
        !csv::parse_double(f[h["precision"]], p.metrics.precision) ||
        !csv::parse_double(f[h["recall"]], p.metrics.recall) ||
        !csv::parse_double(f[h["f_score"]], p.metrics.f_score)) {
      throw DataError(what + " line " + std::to_string(records[r].line) + ": malformed row");
    }
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace placeharvest
