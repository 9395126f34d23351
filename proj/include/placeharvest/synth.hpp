#pragma once

// Seeded synthetic corpora: "place" terms whose ads scatter normally around a
// term-specific center, and "noise" terms whose ads are uniform over the
// region box. Each ad mentions one term right after a cue phrase, and a
// three-annotator ground truth agrees on every planted place term.
//
// Only mt19937_64 (whose output sequence is fixed by the standard) is taken
// from <random>; the distributions are computed here so that output is
// identical across standard library implementations.

#include <placeharvest/corpus.hpp>
#include <placeharvest/csv.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/evaluation.hpp>
#include <placeharvest/extractors.hpp>
#include <placeharvest/geo.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace placeharvest {

struct SynthSpec {
  size_t n_place_terms = 20;
  size_t n_noise_terms = 20;
  size_t mentions_per_term = 15;
  double cluster_sigma_m = 300.0;
  double region_box_km = 40.0;
  uint64_t seed = 1;
  GeoPoint region_center{43.6150, -116.2023};
  std::string region_id = "synthetic";

  void validate() const {
    if (n_place_terms == 0 || n_noise_terms == 0 || mentions_per_term == 0) {
      throw ConfigError("synthetic term and mention counts must be positive");
    }
    if (!(cluster_sigma_m > 0.0) || !(region_box_km > 0.0)) {
      throw ConfigError("synthetic sigma and box size must be positive");
    }
    if (!is_valid(region_center)) throw ConfigError("synthetic region center is not a valid coordinate");
  }
};

struct PlantedTerm {
  std::string name;
  bool is_place = false;
  GeoPoint center;  // cluster center for place terms; region center for noise
};

struct SynthCorpus {
  Corpus corpus;
  std::vector<AnnotationRecord> ground_truth;
  std::vector<PlantedTerm> planted;
};

namespace detail {

class SynthRng {
 public:
  explicit SynthRng(uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  size_t below(size_t n) { return static_cast<size_t>(uniform() * static_cast<double>(n)); }

  // Standard normal pair by Box-Muller; the second value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<std::string> word_pairs(const std::vector<std::string>& first,
                                           const std::vector<std::string>& second, size_t count, SynthRng& rng,
                                           const std::string& what) {
  std::vector<std::string> all;
  for (const auto& a : first) {
    for (const auto& b : second) all.push_back(a + " " + b);
  }
  if (count > all.size()) {
    throw ConfigError("at most " + std::to_string(all.size()) + " synthetic " + what + " terms are available");
  }
  // Each first word is used at most once while possible, so names differ in both tokens.
  rng.shuffle(all);
  std::vector<std::string> out;
  std::vector<std::string> used_first;
  for (const auto& name : all) {
    if (out.size() == count) break;
    const std::string head = name.substr(0, name.find(' '));
    if (used_first.size() < first.size() && std::find(used_first.begin(), used_first.end(), head) != used_first.end()) {
      continue;
    }
    used_first.push_back(head);
    out.push_back(name);
  }
  for (const auto& name : all) {
    if (out.size() == count) break;
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

inline const std::vector<std::string>& place_heads() {
  static const std::vector<std::string> v{"Elm",     "Maple",  "Cedar",  "Willow", "Harbor", "Sunset",  "Aspen",
                                          "Birch",   "Juniper", "Copper", "Falcon", "Heron",  "Lantern", "Mill",
                                          "Orchard", "Quarry", "Raven",  "Summit", "Tamarack", "Walnut", "Alder",
                                          "Bramble", "Chestnut", "Foxglove", "Larkspur", "Magnolia"};
  return v;
}
inline const std::vector<std::string>& place_tails() {
  static const std::vector<std::string> v{"Grove", "Heights", "Village", "Commons", "Crossing", "Terrace",
                                          "Landing", "Flats", "Hollow", "Square", "District", "Point",
                                          "Row", "Bend", "Ridge", "Junction"};
  return v;
}
inline const std::vector<std::string>& noise_heads() {
  static const std::vector<std::string> v{"Central",  "Stainless", "Hardwood", "Vaulted", "Walk-In",
                                          "Covered",  "Fenced",    "Tiled",    "Gated",   "Secured",
                                          "Updated",  "Renovated", "Furnished", "Heated", "Reserved",
                                          "Assigned", "Onsite",    "Tankless", "Granite", "Dual"};
  return v;
}
inline const std::vector<std::string>& noise_tails() {
  static const std::vector<std::string> v{"AC",      "Appliances", "Floors", "Ceilings", "Closets", "Parking",
                                          "Yard",    "Backsplash", "Laundry", "Storage", "Patio",   "Entry",
                                          "Garage",  "Pool",       "Counters", "Heater"};
  return v;
}

// Templates place the term directly after a cue and end it with a period.
inline const std::array<std::pair<const char*, const char*>, 6>& ad_templates() {
  static const std::array<std::pair<const char*, const char*>, 6> t{{
      {"sunny two bedroom apartment near ", ". call or text for a showing"},
      {"updated studio close to ", ". utilities included, no smoking"},
      {"quiet one bedroom unit minutes from ", ". pets considered with deposit"},
      {"room for rent in ", ". shared kitchen and bath"},
      {"townhouse with garage walking distance to ", ". lease starts next month"},
      {"cute cottage right at ", ". small dogs ok"},
  }};
  return t;
}

}  // namespace detail

inline SynthCorpus synth(const SynthSpec& spec) {
  spec.validate();
  detail::SynthRng rng(spec.seed);
  const auto place_names =
      detail::word_pairs(detail::place_heads(), detail::place_tails(), spec.n_place_terms, rng, "place");
  const auto noise_names =
      detail::word_pairs(detail::noise_heads(), detail::noise_tails(), spec.n_noise_terms, rng, "noise");

  const LocalProjection region(spec.region_center);
  const double half_box = spec.region_box_km * 500.0;
  auto uniform_in_box = [&](double fraction) {
    const double span = half_box * fraction;
    return region.inverse({(2.0 * rng.uniform() - 1.0) * span, (2.0 * rng.uniform() - 1.0) * span});
  };

  SynthCorpus out;
  out.corpus.region_id = spec.region_id;
  struct Mention {
    size_t term;
    GeoPoint location;
  };
  std::vector<Mention> mentions;
  for (const auto& name : place_names) {
    const GeoPoint center = uniform_in_box(0.8);
    out.planted.push_back({name, true, center});
    const LocalProjection local(center);
    for (size_t m = 0; m < spec.mentions_per_term; ++m) {
      const double east = rng.normal() * spec.cluster_sigma_m;
      const double north = rng.normal() * spec.cluster_sigma_m;
      mentions.push_back({out.planted.size() - 1, local.inverse({east, north})});
    }
  }
  for (const auto& name : noise_names) {
    out.planted.push_back({name, false, spec.region_center});
    for (size_t m = 0; m < spec.mentions_per_term; ++m) {
      mentions.push_back({out.planted.size() - 1, uniform_in_box(1.0)});
    }
  }
  rng.shuffle(mentions);

  using namespace std::chrono;
  const Timestamp start = sys_days{year{2017} / February / 18};
  const auto& templates = detail::ad_templates();
  for (size_t i = 0; i < mentions.size(); ++i) {
    const auto& m = mentions[i];
    const PlantedTerm& term = out.planted[m.term];
    char id[32];
    std::snprintf(id, sizeof id, "ad-%06zu", i + 1);
    const auto& [before, after] = templates[rng.below(templates.size())];
    Advertisement ad;
    ad.post_id = id;
    ad.post_time = start + minutes{7 * static_cast<long>(i)};
    ad.location = {std::round(m.location.lat_deg * 1e7) / 1e7, std::round(m.location.lon_deg * 1e7) / 1e7};
    ad.text = "listing " + std::to_string(i + 1) + ": " + before + term.name + after;
    out.corpus.ads.push_back(std::move(ad));
    for (const char* annotator : {"a1", "a2", "a3"}) {
      AnnotationRecord rec{id, annotator, {}};
      if (term.is_place) rec.names.insert(normalize_term(term.name));
      out.ground_truth.push_back(std::move(rec));
    }
  }
  return out;
}

inline std::string format_ground_truth_jsonl(const std::vector<AnnotationRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j{{"post_id", r.post_id}, {"annotator_id", r.annotator_id}, {"names", r.names}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string format_planted_csv(const std::vector<PlantedTerm>& planted) {
  std::string out = csv::join({"term", "kind", "center_lat", "center_lon"});
  for (const auto& p : planted) {
    out += csv::join({p.name, p.is_place ? "place" : "noise", csv::format_fixed(p.center.lat_deg, 7),
                      csv::format_fixed(p.center.lon_deg, 7)});
  }
  return out;
}

inline std::vector<PlantedTerm> parse_planted_csv(std::string_view content) {
  const auto records = csv::parse(content);
  if (records.empty()) throw DataError("planted terms csv: missing header");
  const csv::Header h(records.front(), {"term", "kind", "center_lat", "center_lon"}, "planted terms csv");
  std::vector<PlantedTerm> out;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    PlantedTerm p;
    p.name = f.at(h["term"]);
    p.is_place = f.at(h["kind"]) == "place";
    if (!csv::parse_double(f.at(h["center_lat"]), p.center.lat_deg) ||
        !csv::parse_double(f.at(h["center_lon"]), p.center.lon_deg)) {
      throw DataError("planted terms csv line " + std::to_string(records[r].line) + ": bad center");
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct SynthFiles {
  std::string ads = "ads.csv";
  std::string ground_truth = "ground_truth.jsonl";
  std::string planted = "planted_terms.csv";
};

// Writes ads.csv, ground_truth.jsonl and planted_terms.csv into `dir`.
inline SynthCorpus write_synth(const SynthSpec& spec, const std::string& dir, const SynthFiles& files = {}) {
  SynthCorpus data = synth(spec);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  write_corpus((base / files.ads).string(), data.corpus);
  csv::write_file((base / files.ground_truth).string(), format_ground_truth_jsonl(data.ground_truth));
  csv::write_file((base / files.planted).string(), format_planted_csv(data.planted));
  return data;
}

}  // namespace placeharvest
