#pragma once

// Stage 2: multi-scale geospatial clustering of candidate point sets.
//
// Each candidate's points are cleaned by a medoid/third-quartile filter, then
// scored by scale-structure identification (SSI): for radii r_k = alpha^k
// meters, link every pair within r_k, and sum the Shannon entropy (bits) of
// the connected-component size distribution over k. Tight clusters collapse
// into one component at small k and accumulate little entropy. The sum is
// optionally divided by a function of the point count so that candidates with
// more mentions are not penalized for it.

#include <placeharvest/detail/parallel.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/extractors.hpp>
#include <placeharvest/geo.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace placeharvest {

enum class NormalizationMode {
  kNone,       // original SSI: raw entropy sum
  kInvSqrt,    // sum / sqrt(n)
  kInvLinear,  // sum / n
  kInvLog,     // sum / log2(n)
};

inline std::string_view to_string(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::kNone: return "none";
    case NormalizationMode::kInvSqrt: return "inv_sqrt";
    case NormalizationMode::kInvLinear: return "inv_linear";
    case NormalizationMode::kInvLog: return "inv_log";
  }
  return "?";
}

inline std::optional<NormalizationMode> parse_normalization_mode(std::string_view s) {
  for (auto m : {NormalizationMode::kNone, NormalizationMode::kInvSqrt, NormalizationMode::kInvLinear,
                 NormalizationMode::kInvLog}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

// Geometric clustering radii r_k = alpha^k meters, k = 1, 2, ...
struct ScaleSet {
  double alpha = 2.0;

  double radius(int k) const { return std::pow(alpha, k); }

  void validate() const {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) {
      throw ConfigError("scale base alpha must be a finite value > 1, got " + std::to_string(alpha));
    }
  }
};

struct ScaleEntropy {
  int k = 0;
  double entropy = 0.0;  // bits
};

struct SsiResult {
  std::string term;
  size_t n_raw = 0;
  size_t n_filtered = 0;
  std::vector<ScaleEntropy> entropies;  // k = 1..k_max; the last entry is 0
  double entropy_sum = 0.0;
  double adjusted_sum = 0.0;
  double normalized_score = 0.0;  // min-max over a ranking; set by rank_candidates

  int k_max() const { return entropies.empty() ? 0 : entropies.back().k; }
};

// Index of the point with the smallest summed distance to all others; the
// lowest index wins ties.
inline size_t medoid(std::span<const GeoPoint> points) {
  if (points.empty()) throw DataError("medoid of an empty point set");
  const size_t n = points.size();
  std::vector<double> sums(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double d = haversine_m(points[i], points[j]);
      sums[i] += d;
      sums[j] += d;
    }
  }
  size_t best = 0;
  for (size_t i = 1; i < n; ++i) {
    if (sums[i] < sums[best]) best = i;
  }
  return best;
}

// Third quartile with linear interpolation between order statistics at
// 1-based position (n + 1) * 0.75, clamped to [1, n].
inline double third_quartile(std::vector<double> values) {
  if (values.empty()) throw DataError("quartile of an empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double pos = std::clamp((n + 1.0) * 0.75, 1.0, n);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo >= values.size() || frac == 0.0) return values[lo - 1];
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

// Indices (ascending) of the points whose distance to the medoid does not
// exceed the third quartile of all medoid distances.
inline std::vector<size_t> spatial_filter_indices(std::span<const GeoPoint> points) {
  if (points.empty()) throw DataError("spatial filter of an empty point set");
  const GeoPoint& center = points[medoid(points)];
  std::vector<double> dist;
  dist.reserve(points.size());
  for (const auto& p : points) dist.push_back(haversine_m(center, p));
  const double q3 = third_quartile(dist);
  std::vector<size_t> keep;
  for (size_t i = 0; i < points.size(); ++i) {
    if (dist[i] <= q3) keep.push_back(i);
  }
  return keep;
}

inline std::vector<GeoPoint> spatial_filter(std::span<const GeoPoint> points) {
  std::vector<GeoPoint> out;
  for (size_t i : spatial_filter_indices(points)) out.push_back(points[i]);
  return out;
}

// Shannon entropy in bits of the distribution {size / n}.
inline double entropy_at_scale(std::span<const size_t> component_sizes, size_t n) {
  if (n == 0) throw DataError("entropy over zero points");
  size_t total = 0;
  for (size_t s : component_sizes) {
    if (s == 0) throw DataError("component of size zero");
    total += s;
  }
  if (total != n) {
    throw DataError("component sizes sum to " + std::to_string(total) + ", expected " + std::to_string(n));
  }
  double h = 0.0;
  const double dn = static_cast<double>(n);
  for (size_t s : component_sizes) {
    const double p = static_cast<double>(s) / dn;
    h -= p * std::log2(p);
  }
  return h > 0.0 ? h : 0.0;
}

inline double adjust_entropy_sum(double entropy_sum, size_t n, NormalizationMode mode) {
  const double dn = static_cast<double>(n);
  switch (mode) {
    case NormalizationMode::kNone: return entropy_sum;
    case NormalizationMode::kInvSqrt: return entropy_sum / std::sqrt(dn);
    case NormalizationMode::kInvLinear: return entropy_sum / dn;
    case NormalizationMode::kInvLog:
      if (n < 2) throw DataError("log adjustment needs at least 2 points");
      return entropy_sum / std::log2(dn);
  }
  throw InvariantError("unknown normalization mode");
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(size_t n) : parent_(n), size_(n, 1), components_(n) {
    std::iota(parent_.begin(), parent_.end(), size_t{0});
  }

  size_t find(size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
  }

  size_t components() const { return components_; }

  // Sizes of all components, ordered by their root index.
  std::vector<size_t> component_sizes() {
    std::vector<size_t> sizes;
    sizes.reserve(components_);
    for (size_t i = 0; i < parent_.size(); ++i) {
      if (find(i) == i) sizes.push_back(size_[i]);
    }
    return sizes;
  }

 private:
  std::vector<size_t> parent_;
  std::vector<size_t> size_;
  size_t components_;
};

}  // namespace detail

// Scale-structure identification over a point set. Edges are added in
// distance order as the radius grows; evaluation stops at the first scale
// where everything is one component (every later entropy is 0).
inline SsiResult ssi(std::span<const GeoPoint> points, const ScaleSet& scales, NormalizationMode mode) {
  scales.validate();
  const size_t n = points.size();
  if (n < 2) throw DataError("scale-structure identification needs at least 2 points, got " + std::to_string(n));

  struct Edge {
    double d;
    size_t i;
    size_t j;
  };
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) edges.push_back({haversine_m(points[i], points[j]), i, j});
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.d, a.i, a.j) < std::tie(b.d, b.i, b.j); });

  SsiResult result;
  result.n_raw = n;
  result.n_filtered = n;
  detail::DisjointSets sets(n);
  size_t next_edge = 0;
  for (int k = 1;; ++k) {
    const double r = scales.radius(k);
    while (next_edge < edges.size() && edges[next_edge].d <= r) {
      sets.unite(edges[next_edge].i, edges[next_edge].j);
      ++next_edge;
    }
    const auto sizes = sets.component_sizes();
    const double e = sets.components() == 1 ? 0.0 : entropy_at_scale(sizes, n);
    result.entropies.push_back({k, e});
    result.entropy_sum += e;
    if (sets.components() == 1) break;
  }
  result.adjusted_sum = adjust_entropy_sum(result.entropy_sum, n, mode);
  return result;
}

struct RankOptions {
  ScaleSet scales{};
  NormalizationMode mode = NormalizationMode::kInvSqrt;
  size_t min_points = 3;
  size_t threads = 1;
};

// Min-max rescales adjusted sums into [0, 1] and sorts ascending, breaking
// ties by larger n_filtered, then by term. Identical sums all score 0.
inline void normalize_and_sort(std::vector<SsiResult>& results) {
  if (!results.empty()) {
    auto [lo, hi] = std::minmax_element(results.begin(), results.end(), [](const auto& a, const auto& b) {
      return a.adjusted_sum < b.adjusted_sum;
    });
    const double min = lo->adjusted_sum;
    const double range = hi->adjusted_sum - min;
    for (auto& r : results) r.normalized_score = range > 0.0 ? (r.adjusted_sum - min) / range : 0.0;
  }
  std::sort(results.begin(), results.end(), [](const SsiResult& a, const SsiResult& b) {
    if (a.normalized_score != b.normalized_score) return a.normalized_score < b.normalized_score;
    if (a.n_filtered != b.n_filtered) return a.n_filtered > b.n_filtered;
    return a.term < b.term;
  });
}

// Filters each candidate's points, drops candidates left with fewer than
// min_points, scores the rest and returns them most geo-indicative first.
inline std::vector<SsiResult> rank_candidates(const CandidateSet& candidates, const RankOptions& options = {}) {
  options.scales.validate();
  if (options.min_points < 2) throw ConfigError("min_points must be at least 2");

  std::vector<const std::pair<const std::string, CandidateEntry>*> entries;
  entries.reserve(candidates.size());
  for (const auto& kv : candidates) entries.push_back(&kv);

  std::vector<std::optional<SsiResult>> slots(entries.size());
  detail::parallel_for(entries.size(), options.threads, [&](size_t i) {
    const auto& [term, entry] = *entries[i];
    if (entry.points.size() < options.min_points) return;
    const auto filtered = spatial_filter(entry.points);
    if (filtered.size() < options.min_points) return;
    SsiResult r = ssi(filtered, options.scales, options.mode);
    r.term = term;
    r.n_raw = entry.points.size();
    slots[i] = std::move(r);
  });

  std::vector<SsiResult> results;
  for (auto& s : slots) {
    if (s) results.push_back(std::move(*s));
  }
  normalize_and_sort(results);
  return results;
}

inline std::vector<SsiResult> rank_candidates(const CandidateSet& candidates, const ScaleSet& scales,
                                              NormalizationMode mode, size_t min_points = 3) {
  return rank_candidates(candidates, RankOptions{scales, mode, min_points, 1});
}

}  // namespace placeharvest
