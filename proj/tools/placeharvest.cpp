// Command-line front end. Each subcommand runs one pipeline stage over files
// in the output directory; `run` chains all of them.

#include <placeharvest.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace ph = placeharvest;
namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> out;
  std::optional<size_t> threads;
  std::optional<std::string> mode;
  std::optional<double> alpha;
  std::optional<size_t> min_points;
  std::optional<double> threshold;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "pipeline configuration JSON");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker thread cap")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", f.mode, "normalization mode")
      ->check(CLI::IsMember({"none", "inv_sqrt", "inv_linear", "inv_log"}));
  cmd->add_option("--alpha", f.alpha, "scale base in meters (> 1)");
  cmd->add_option("--min-points", f.min_points, "minimum points after filtering");
  cmd->add_option("--threshold", f.threshold, "normalized-score threshold");
}

// Config file first, then flags on top.
ph::PipelineConfig make_config(const CommonFlags& f) {
  ph::PipelineConfig c;
  if (!f.config.empty()) c = ph::load_pipeline_config(f.config);
  if (f.out) c.output_dir = *f.out;
  if (f.threads) c.threads = *f.threads;
  if (f.mode) c.mode = *ph::parse_normalization_mode(*f.mode);
  if (f.alpha) c.alpha_m = *f.alpha;
  if (f.min_points) c.min_points = *f.min_points;
  if (f.threshold) c.threshold = *f.threshold;
  c.validate();
  return c;
}

std::string in_out(const ph::PipelineConfig& c, const std::string& override_path, const char* artifact) {
  return override_path.empty() ? (fs::path(c.output_dir) / artifact).string() : override_path;
}

void ensure_out_dir(const ph::PipelineConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) throw ph::DataError("cannot create output directory " + c.output_dir + ": " + ec.message());
}

void write_artifact(const ph::PipelineConfig& c, const std::string& name, const std::string& content) {
  ensure_out_dir(c);
  const auto path = (fs::path(c.output_dir) / name).string();
  ph::csv::write_file(path, content);
  std::cout << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harvest local place names from geotagged housing advertisements"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* ingest = app.add_subcommand("ingest", "load, validate and deduplicate the ads file");
  add_common(ingest, flags);
  std::string ads_path;
  ingest->add_option("--ads", ads_path, "ads CSV (overrides config)");

  auto* extract = app.add_subcommand("extract", "run extractors and pool candidates");
  add_common(extract, flags);
  std::string corpus_path;
  std::vector<std::string> annotation_paths;
  extract->add_option("--corpus", corpus_path, "deduplicated corpus CSV (default <out>/corpus.csv)");
  extract->add_option("--annotations", annotation_paths, "extra external annotation JSONL files");

  auto* rank = app.add_subcommand("rank", "filter and score candidates");
  add_common(rank, flags);
  std::string candidates_path;
  rank->add_option("--candidates", candidates_path, "candidates JSONL (default <out>/candidates.jsonl)");

  auto* curve = app.add_subcommand("curve", "precision-recall curve against ground truth");
  add_common(curve, flags);
  std::string ranked_path;
  std::string ground_truth_path;
  curve->add_option("--ranked", ranked_path, "ranked CSV (default <out>/ranked.csv)");
  curve->add_option("--ground-truth", ground_truth_path, "ground truth JSONL (overrides config)");

  auto* select = app.add_subcommand("select-threshold", "choose the threshold and write the selected names");
  add_common(select, flags);
  std::string curve_path;
  select->add_option("--ranked", ranked_path, "ranked CSV (default <out>/ranked.csv)");
  select->add_option("--curve", curve_path, "curve CSV (default <out>/curve.csv)");

  auto* footprint = app.add_subcommand("footprint", "GeoJSON footprints of the selected names");
  add_common(footprint, flags);
  std::string selected_path;
  std::string method;
  footprint->add_option("--candidates", candidates_path, "candidates JSONL (default <out>/candidates.jsonl)");
  footprint->add_option("--selected", selected_path, "selected names (default <out>/selected.txt)");
  footprint->add_option("--method", method, "footprint method")->check(CLI::IsMember({"hull", "kde"}));

  auto* compare = app.add_subcommand("compare", "match selected names against gazetteers");
  add_common(compare, flags);
  std::vector<std::string> gazetteer_args;
  std::string exclusions_path;
  compare->add_option("--selected", selected_path, "selected names (default <out>/selected.txt)");
  compare->add_option("--gazetteer", gazetteer_args, "SOURCE=PATH, repeatable (adds to config)");
  compare->add_option("--exclusions", exclusions_path, "names to leave out of the comparison");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
  ph::SynthSpec spec;
  std::string synth_out = "synthetic";
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--places", spec.n_place_terms, "number of place terms");
  synth->add_option("--noise", spec.n_noise_terms, "number of noise terms");
  synth->add_option("--mentions", spec.mentions_per_term, "ads per term");
  synth->add_option("--sigma", spec.cluster_sigma_m, "place cluster standard deviation in meters");
  synth->add_option("--box", spec.region_box_km, "region box side in kilometers");

  auto* run = app.add_subcommand("run", "run the full pipeline");
  add_common(run, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ph::ExitCode::kUsage);
  }

  try {
    if (synth->parsed()) {
      ph::write_synth(spec, synth_out);
      std::cout << "wrote synthetic corpus to " << synth_out << "\n";
      return 0;
    }

    ph::PipelineConfig config = make_config(flags);

    if (run->parsed()) {
      const auto result = ph::run_pipeline(config);
      for (const auto& name : result.written) std::cout << "wrote " << (fs::path(config.output_dir) / name).string() << "\n";
      std::printf("threshold %.2f (%s), %zu names selected\n", result.threshold.threshold,
                  result.threshold.from_curve ? "from curve" : "from config", result.selected.size());
      return 0;
    }

    if (ingest->parsed()) {
      if (!ads_path.empty()) config.ads_path = ads_path;
      ph::run_stage("ingest", [&] {
        const auto r = ph::ingest(config);
        write_artifact(config, ph::artifacts::kCorpus, ph::format_corpus_csv(r.corpus));
        std::printf("%zu rows, %zu loaded, %zu without location, %zu invalid, %zu duplicates\n", r.load.rows,
                    r.load.loaded, r.load.missing_location, r.load.invalid.size(), r.duplicates);
        for (const auto& issue : r.load.invalid) std::cerr << "line " << issue.line << ": " << issue.message << "\n";
      });
    } else if (extract->parsed()) {
      for (const auto& p : annotation_paths) config.annotations.push_back({p, "external"});
      ph::run_stage("extract", [&] {
        const auto corpus = ph::load_corpus(in_out(config, corpus_path, ph::artifacts::kCorpus), config.region_id);
        const auto r = ph::extract(config, corpus);
        write_artifact(config, ph::artifacts::kCandidates, ph::format_candidates_jsonl(r.candidates));
        std::printf("%zu spans, %zu candidates\n", r.union_report.spans_in, r.candidates.size());
      });
    } else if (rank->parsed()) {
      ph::run_stage("rank", [&] {
        const auto candidates = ph::parse_candidates_jsonl(
            ph::csv::read_file(in_out(config, candidates_path, ph::artifacts::kCandidates)));
        const auto ranked = ph::rank_candidates(candidates, config.rank_options());
        write_artifact(config, ph::artifacts::kRanked, ph::format_ranked_csv(ranked));
      });
    } else if (curve->parsed()) {
      if (!ground_truth_path.empty()) config.ground_truth_path = ground_truth_path;
      if (config.ground_truth_path.empty()) throw ph::ConfigError("curve needs a ground truth file");
      ph::run_stage("curve", [&] {
        const auto ranked = ph::parse_ranked_csv(ph::csv::read_file(in_out(config, ranked_path, ph::artifacts::kRanked)));
        const auto truth = ph::majority_vote(ph::load_ground_truth(config.ground_truth_path), config.quorum);
        write_artifact(config, ph::artifacts::kCurve, ph::format_curve_csv(ph::pr_curve(ranked, truth)));
      });
    } else if (select->parsed()) {
      ph::run_stage("select-threshold", [&] {
        const auto ranked = ph::parse_ranked_csv(ph::csv::read_file(in_out(config, ranked_path, ph::artifacts::kRanked)));
        std::optional<ph::PrCurve> pr;
        if (!config.threshold) {
          pr = ph::parse_curve_csv(ph::csv::read_file(in_out(config, curve_path, ph::artifacts::kCurve)));
        }
        const auto choice = ph::choose_threshold(config, pr);
        const auto selected = ph::select_terms(ranked, choice.threshold);
        write_artifact(config, ph::artifacts::kSelected, ph::format_term_list(selected));
        std::printf("threshold %.2f, %zu names selected\n", choice.threshold, selected.size());
      });
    } else if (footprint->parsed()) {
      if (method == "kde") config.footprint.method = ph::FootprintMethod::kKde;
      if (method == "hull") config.footprint.method = ph::FootprintMethod::kHull;
      ph::run_stage("footprint", [&] {
        const auto candidates = ph::parse_candidates_jsonl(
            ph::csv::read_file(in_out(config, candidates_path, ph::artifacts::kCandidates)));
        const auto selected =
            ph::parse_term_list(ph::csv::read_file(in_out(config, selected_path, ph::artifacts::kSelected)));
        const auto footprints = ph::build_footprints(selected, candidates, config.footprint, config.threads);
        write_artifact(config, ph::artifacts::kFootprints, ph::to_geojson(footprints).dump(2) + "\n");
      });
    } else if (compare->parsed()) {
      for (const auto& arg : gazetteer_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
          throw ph::ConfigError("--gazetteer expects SOURCE=PATH, got '" + arg + "'");
        }
        config.gazetteers.push_back({arg.substr(eq + 1), arg.substr(0, eq)});
      }
      if (!exclusions_path.empty()) config.exclusions_path = exclusions_path;
      config.validate();
      if (config.gazetteers.empty()) throw ph::ConfigError("compare needs at least one gazetteer");
      ph::run_stage("compare", [&] {
        const auto selected =
            ph::parse_term_list(ph::csv::read_file(in_out(config, selected_path, ph::artifacts::kSelected)));
        for (const auto& c : ph::compare_gazetteers(config, selected)) {
          write_artifact(config, ph::artifacts::matches(c.source), ph::format_match_report_csv(c.report));
          std::printf("%s: %zu direct, %zu indirect, %zu unmatched\n", c.source.c_str(), c.report.direct.size(),
                      c.report.indirect.size(), c.report.unmatched.size());
        }
      });
    }
    return 0;
  } catch (const ph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return static_cast<int>(ph::ExitCode::kInvariant);
  }
}
