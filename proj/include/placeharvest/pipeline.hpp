#pragma once

// End-to-end orchestration: configuration, the individual stages used by the
// CLI subcommands, and run_pipeline, which chains them and writes every
// artifact into the output directory.

#include <placeharvest/corpus.hpp>
#include <placeharvest/csv.hpp>
#include <placeharvest/detail/parallel.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/evaluation.hpp>
#include <placeharvest/extractors.hpp>
#include <placeharvest/footprint.hpp>
#include <placeharvest/gazetteer.hpp>
#include <placeharvest/geocluster.hpp>
#include <placeharvest/io.hpp>

#include <nlohmann/json.hpp>

#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace placeharvest {

struct AnnotationSource {
  std::string path;
  std::string source = "external";
};

struct GazetteerSource {
  std::string path;
  std::string source;
};

enum class FootprintMethod { kHull, kKde };

struct FootprintOptions {
  FootprintMethod method = FootprintMethod::kHull;
  double mass_level = 0.90;
  std::optional<double> bandwidth_m;
  double cell_size_m = 50.0;
};

struct PipelineConfig {
  std::string region_id = "region";
  std::string ads_path;
  std::vector<AnnotationSource> annotations;
  std::vector<std::string> label_allow;
  std::string ground_truth_path;  // empty: no evaluation
  std::vector<GazetteerSource> gazetteers;
  std::string exclusions_path;

  double alpha_m = 2.0;
  NormalizationMode mode = NormalizationMode::kInvSqrt;
  size_t min_points = 3;
  std::optional<double> threshold;
  size_t top_n = 10;
  size_t quorum = 2;

  BuiltinToggles extractors;
  ExtractorConfig extractor_config;
  FootprintOptions footprint;
  bool space_insensitive = true;

  std::string output_dir = "out";
  size_t threads = 1;

  RankOptions rank_options() const { return RankOptions{ScaleSet{alpha_m}, mode, min_points, threads}; }

  // Checks that do not touch the file system.
  void validate() const {
    ScaleSet{alpha_m}.validate();
    if (min_points < 2) throw ConfigError("min_points must be at least 2");
    if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
    if (top_n == 0) throw ConfigError("top_n must be positive");
    if (quorum == 0) throw ConfigError("quorum must be positive");
    if (threads == 0) throw ConfigError("threads must be positive");
    if (!(footprint.mass_level > 0.0 && footprint.mass_level <= 1.0)) {
      throw ConfigError("footprint mass_level must lie in (0, 1]");
    }
    if (!(footprint.cell_size_m > 0.0)) throw ConfigError("footprint cell_size_m must be positive");
    if (footprint.bandwidth_m && !(*footprint.bandwidth_m > 0.0)) {
      throw ConfigError("footprint bandwidth_m must be positive");
    }
    if (extractor_config.max_run_tokens == 0) throw ConfigError("max_run_tokens must be positive");
    if (output_dir.empty()) throw ConfigError("output directory is empty");
    std::set<std::string> sources;
    for (const auto& g : gazetteers) {
      if (g.path.empty() || g.source.empty()) throw ConfigError("each gazetteer needs a path and a source");
      if (!sources.insert(g.source).second) throw ConfigError("duplicate gazetteer source '" + g.source + "'");
    }
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

inline std::string resolve_path(const std::string& path, const std::filesystem::path& base) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (base / p).lexically_normal().string();
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

// Relative paths in the document are resolved against `base_dir`.
inline PipelineConfig parse_pipeline_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::get_or;
  detail::reject_unknown_keys(j,
                              {"region_id", "ads", "annotations", "label_allow", "ground_truth", "gazetteers",
                               "exclusions", "alpha_m", "mode", "min_points", "threshold", "top_n", "quorum",
                               "extractors", "footprint", "space_insensitive", "output_dir", "threads"},
                              "config");
  PipelineConfig c;
  c.region_id = get_or<std::string>(j, "region_id", c.region_id);
  c.ads_path = detail::resolve_path(get_or<std::string>(j, "ads", ""), base_dir);
  if (j.contains("annotations")) {
    for (const auto& a : j.at("annotations")) {
      if (a.is_string()) {
        c.annotations.push_back({detail::resolve_path(a.get<std::string>(), base_dir), "external"});
      } else {
        detail::reject_unknown_keys(a, {"path", "source"}, "annotations entry");
        c.annotations.push_back({detail::resolve_path(get_or<std::string>(a, "path", ""), base_dir),
                                 get_or<std::string>(a, "source", "external")});
      }
    }
  }
  c.label_allow = get_or<std::vector<std::string>>(j, "label_allow", {});
  c.ground_truth_path = detail::resolve_path(get_or<std::string>(j, "ground_truth", ""), base_dir);
  if (j.contains("gazetteers")) {
    for (const auto& g : j.at("gazetteers")) {
      detail::reject_unknown_keys(g, {"path", "source"}, "gazetteers entry");
      c.gazetteers.push_back({detail::resolve_path(get_or<std::string>(g, "path", ""), base_dir),
                              get_or<std::string>(g, "source", "")});
    }
  }
  c.exclusions_path = detail::resolve_path(get_or<std::string>(j, "exclusions", ""), base_dir);
  c.alpha_m = get_or<double>(j, "alpha_m", c.alpha_m);
  if (j.contains("mode")) {
    const auto mode = parse_normalization_mode(get_or<std::string>(j, "mode", ""));
    if (!mode) throw ConfigError("unknown normalization mode in config");
    c.mode = *mode;
  }
  c.min_points = get_or<size_t>(j, "min_points", c.min_points);
  if (j.contains("threshold") && !j.at("threshold").is_null()) c.threshold = get_or<double>(j, "threshold", 0.0);
  c.top_n = get_or<size_t>(j, "top_n", c.top_n);
  c.quorum = get_or<size_t>(j, "quorum", c.quorum);
  if (j.contains("extractors")) {
    const auto& e = j.at("extractors");
    detail::reject_unknown_keys(e, {"capitalized", "preposition_cue", "stopwords", "cues", "max_run_tokens"},
                                "extractors");
    c.extractors.capitalized = get_or<bool>(e, "capitalized", true);
    c.extractors.preposition_cue = get_or<bool>(e, "preposition_cue", true);
    c.extractor_config.stopwords = get_or(e, "stopwords", c.extractor_config.stopwords);
    c.extractor_config.cues = get_or(e, "cues", c.extractor_config.cues);
    c.extractor_config.max_run_tokens = get_or<size_t>(e, "max_run_tokens", c.extractor_config.max_run_tokens);
  }
  if (j.contains("footprint")) {
    const auto& f = j.at("footprint");
    detail::reject_unknown_keys(f, {"method", "mass_level", "bandwidth_m", "cell_size_m"}, "footprint");
    const auto method = get_or<std::string>(f, "method", "hull");
    if (method == "hull") {
      c.footprint.method = FootprintMethod::kHull;
    } else if (method == "kde") {
      c.footprint.method = FootprintMethod::kKde;
    } else {
      throw ConfigError("footprint method must be 'hull' or 'kde'");
    }
    c.footprint.mass_level = get_or<double>(f, "mass_level", c.footprint.mass_level);
    if (f.contains("bandwidth_m") && !f.at("bandwidth_m").is_null()) {
      c.footprint.bandwidth_m = get_or<double>(f, "bandwidth_m", 0.0);
    }
    c.footprint.cell_size_m = get_or<double>(f, "cell_size_m", c.footprint.cell_size_m);
  }
  c.space_insensitive = get_or<bool>(j, "space_insensitive", c.space_insensitive);
  c.output_dir = detail::resolve_path(get_or<std::string>(j, "output_dir", c.output_dir), base_dir);
  c.threads = get_or<size_t>(j, "threads", c.threads);
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_pipeline_config(j, std::filesystem::path(path).parent_path());
}

// An error tagged with the pipeline stage it came from; keeps the exit code.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, ExitCode code)
      : Error("stage '" + stage + "': " + what, code), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what(), e.code());
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), ExitCode::kInvariant);
  }
}

// Artifact names inside the output directory.
namespace artifacts {
inline constexpr const char* kCorpus = "corpus.csv";
inline constexpr const char* kCandidates = "candidates.jsonl";
inline constexpr const char* kRanked = "ranked.csv";
inline constexpr const char* kCurve = "curve.csv";
inline constexpr const char* kSelected = "selected.txt";
inline constexpr const char* kFootprints = "footprints.geojson";
inline constexpr const char* kSummary = "summary.json";

// matches_<source>.csv with the source reduced to [a-z0-9_-].
inline std::string matches(const std::string& source) {
  std::string clean;
  for (unsigned char c : source) {
    if (std::isalnum(c)) {
      clean.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '-' || c == '_') {
      clean.push_back(static_cast<char>(c));
    } else {
      clean.push_back('_');
    }
  }
  return "matches_" + clean + ".csv";
}
}  // namespace artifacts

struct IngestResult {
  Corpus corpus;
  LoadReport load;
  size_t duplicates = 0;
};

inline IngestResult ingest(const PipelineConfig& config) {
  if (config.ads_path.empty()) throw ConfigError("no ads file configured");
  IngestResult r;
  const Corpus raw = load_corpus(config.ads_path, config.region_id, &r.load);
  r.corpus = dedup(raw);
  r.duplicates = raw.ads.size() - r.corpus.ads.size();
  return r;
}

struct ExtractResult {
  CandidateSet candidates;
  AnnotationReport annotations;
  UnionReport union_report;
};

inline ExtractResult extract(const PipelineConfig& config, const Corpus& corpus) {
  ExtractResult r;
  auto collections = run_builtin_extractors(corpus, config.extractor_config, config.extractors);
  for (const auto& a : config.annotations) {
    const auto map = load_external_annotations(a.path, a.source, config.label_allow, &r.annotations);
    collections.push_back(validate_annotations(map, corpus, &r.annotations));
  }
  r.candidates = union_candidates(corpus, collections, &r.union_report);
  return r;
}

struct ThresholdChoice {
  double threshold = 0.0;
  bool from_curve = false;
};

// An explicit threshold wins; otherwise the curve's operating point.
inline ThresholdChoice choose_threshold(const PipelineConfig& config, const std::optional<PrCurve>& curve) {
  if (config.threshold) return {*config.threshold, false};
  if (curve) return {select_threshold(*curve, config.top_n), true};
  throw ConfigError("no ground truth and no threshold: an explicit threshold is required for the final list");
}

// Footprints of the given terms over their spatially filtered points.
inline std::vector<NamedFootprint> build_footprints(const std::vector<std::string>& terms,
                                                    const CandidateSet& candidates, const FootprintOptions& options,
                                                    size_t threads) {
  std::vector<NamedFootprint> out(terms.size());
  detail::parallel_for(terms.size(), threads, [&](size_t i) {
    auto it = candidates.find(terms[i]);
    if (it == candidates.end()) throw DataError("selected term '" + terms[i] + "' has no candidate points");
    const auto points = spatial_filter(it->second.points);
    out[i].name = terms[i];
    out[i].geometry = options.method == FootprintMethod::kHull
                          ? hull_footprint(points)
                          : kde_footprint(points, options.mass_level, options.bandwidth_m, options.cell_size_m);
  });
  return out;
}

struct GazetteerComparison {
  std::string source;
  MatchReport report;
  GazetteerLoadReport load;
};

inline std::vector<GazetteerComparison> compare_gazetteers(const PipelineConfig& config,
                                                           const std::vector<std::string>& terms) {
  std::vector<std::string> kept = terms;
  if (!config.exclusions_path.empty()) {
    const auto excluded = load_term_list(config.exclusions_path);
    kept = apply_exclusions(kept, std::set<std::string>(excluded.begin(), excluded.end()));
  }
  std::vector<GazetteerComparison> out;
  for (const auto& g : config.gazetteers) {
    GazetteerComparison c;
    c.source = g.source;
    const GazetteerIndex index(load_gazetteer(g.path, g.source, &c.load));
    c.report = compare(kept, index, config.space_insensitive);
    out.push_back(std::move(c));
  }
  return out;
}

struct PipelineResult {
  IngestResult ingest;
  ExtractResult extract;
  std::vector<SsiResult> ranked;
  std::optional<PrCurve> curve;
  std::optional<Metrics> metrics;  // at the chosen threshold, when ground truth exists
  ThresholdChoice threshold;
  std::vector<std::string> selected;
  std::vector<GazetteerComparison> comparisons;
  std::vector<std::string> written;  // artifact file names, in write order
};

namespace detail {

inline nlohmann::json metrics_json(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall},     {"f_score", m.f_score},
          {"retrieved", m.retrieved}, {"relevant", m.relevant}, {"hits", m.hits}};
}

// Nothing here depends on thread count, wall clock or output location.
inline nlohmann::json summary_json(const PipelineConfig& config, const PipelineResult& r) {
  nlohmann::json j;
  j["region_id"] = config.region_id;
  j["mode"] = std::string(to_string(config.mode));
  j["alpha_m"] = config.alpha_m;
  j["min_points"] = config.min_points;
  j["ingest"] = {{"rows", r.ingest.load.rows},
                 {"loaded", r.ingest.load.loaded},
                 {"missing_location", r.ingest.load.missing_location},
                 {"invalid", r.ingest.load.invalid.size()},
                 {"duplicates", r.ingest.duplicates},
                 {"ads", r.ingest.corpus.ads.size()}};
  j["extract"] = {{"spans", r.extract.union_report.spans_in},
                  {"external_malformed_lines", r.extract.annotations.malformed.size()},
                  {"external_invalid_offsets", r.extract.annotations.invalid_offsets},
                  {"external_unknown_post", r.extract.annotations.unknown_post},
                  {"candidates", r.extract.candidates.size()}};
  j["ranked"] = r.ranked.size();
  j["threshold"] = r.threshold.threshold;
  j["threshold_source"] = r.threshold.from_curve ? "curve" : "config";
  if (r.metrics) j["metrics"] = metrics_json(*r.metrics);
  j["selected"] = r.selected.size();
  auto gaz = nlohmann::json::array();
  for (const auto& c : r.comparisons) {
    gaz.push_back({{"source", c.source},
                   {"direct", c.report.direct.size()},
                   {"indirect", c.report.indirect.size()},
                   {"unmatched", c.report.unmatched.size()},
                   {"rejected_rows", c.load.rejected.size()}});
  }
  j["gazetteers"] = gaz;
  j["artifacts"] = r.written;
  return j;
}

}  // namespace detail

// Runs every stage and writes the artifacts. Errors surface as StageError
// naming the failing stage.
inline PipelineResult run_pipeline(const PipelineConfig& config) {
  run_stage("config", [&] {
    config.validate();
    if (config.ground_truth_path.empty() && !config.threshold) {
      throw ConfigError("no ground truth and no threshold: an explicit threshold is required for the final list");
    }
  });
  const std::filesystem::path out_dir(config.output_dir);
  PipelineResult r;
  auto emit = [&](const std::string& name, const std::string& content) {
    csv::write_file((out_dir / name).string(), content);
    r.written.push_back(name);
  };

  run_stage("ingest", [&] {
    r.ingest = ingest(config);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    emit(artifacts::kCorpus, format_corpus_csv(r.ingest.corpus));
  });
  run_stage("extract", [&] {
    r.extract = extract(config, r.ingest.corpus);
    emit(artifacts::kCandidates, format_candidates_jsonl(r.extract.candidates));
  });
  run_stage("rank", [&] {
    r.ranked = rank_candidates(r.extract.candidates, config.rank_options());
    emit(artifacts::kRanked, format_ranked_csv(r.ranked));
  });
  std::optional<GroundTruth> truth;
  if (!config.ground_truth_path.empty()) {
    run_stage("curve", [&] {
      truth = majority_vote(load_ground_truth(config.ground_truth_path), config.quorum);
      r.curve = pr_curve(r.ranked, *truth);
      emit(artifacts::kCurve, format_curve_csv(*r.curve));
    });
  }
  run_stage("select-threshold", [&] {
    r.threshold = choose_threshold(config, r.curve);
    r.selected = select_terms(r.ranked, r.threshold.threshold);
    if (truth) r.metrics = score(std::set<std::string>(r.selected.begin(), r.selected.end()), *truth);
    emit(artifacts::kSelected, format_term_list(r.selected));
  });
  run_stage("footprint", [&] {
    const auto footprints = build_footprints(r.selected, r.extract.candidates, config.footprint, config.threads);
    emit(artifacts::kFootprints, to_geojson(footprints).dump(2) + "\n");
  });
  run_stage("compare", [&] {
    r.comparisons = compare_gazetteers(config, r.selected);
    for (const auto& c : r.comparisons) emit(artifacts::matches(c.source), format_match_report_csv(c.report));
  });
  run_stage("summary", [&] {
    r.written.push_back(artifacts::kSummary);
    csv::write_file((out_dir / artifacts::kSummary).string(), detail::summary_json(config, r).dump(2) + "\n");
  });
  return r;
}

}  // namespace placeharvest
