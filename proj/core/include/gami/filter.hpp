#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gami/dataset.hpp"
#include "gami/loss.hpp"
#include "gami/modeltree.hpp"

namespace gami {

struct PairScore {
  std::size_t first = 0;   // j < k
  std::size_t second = 0;
  double sse_forward = 0.0;   // tree modeling x_j, splitting on x_k
  double sse_backward = 0.0;  // tree modeling x_k, splitting on x_j
  double score = 0.0;         // min of the two
};

struct FilterResult {
  // Ascending by score; ties in lexicographic pair order.
  std::vector<PairScore> ranked;
  // Both orientations of the top q pairs.
  std::vector<std::pair<std::size_t, std::size_t>> selected;

  // 1-based rank of the unordered pair, or nullopt.
  std::optional<std::size_t> rank_of(std::size_t a, std::size_t b) const;
};

inline constexpr std::size_t kDefaultSubsampleCap = 1'000'000;
inline constexpr std::size_t kDefaultFastGrid = 16;

struct FilterOptions {
  std::size_t q = 10;
  // Features whose pairs are screened; empty means all.
  std::vector<std::size_t> features;
  // Training rows above this count are subsampled before screening.
  std::size_t subsample_cap = kDefaultSubsampleCap;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  TreeParams tree;
  std::size_t knots = kDefaultKnots;
};

// Ranks every unordered pair by the smaller weighted SSE of its two oriented
// interaction trees fitted to the current pseudo-response. `scores` is the
// model score for every dataset row.
FilterResult filter_int(const Dataset& data, const BinMap& bins, std::span<const std::size_t> train_rows,
                        const LossSpec& loss, std::span<const double> scores,
                        const FilterOptions& options);

// Same ranking on a prepared frame and Newton state (no subsampling).
FilterResult filter_int(const TrainingFrame& frame, const NewtonState& state,
                        const FilterOptions& options);

// Four-quadrant screen: per pair, the best weighted SSE of four constants
// around a cut on each feature, cuts drawn from per-feature quantile grids.
FilterResult fast_filter(const Dataset& data, std::span<const std::size_t> train_rows,
                         const LossSpec& loss, std::span<const double> scores,
                         const FilterOptions& options, std::size_t grid_size = kDefaultFastGrid);

// Quantile cut grid used by fast_filter: levels k/(grid+1), duplicates removed.
std::vector<double> fast_grid(std::span<const double> values, std::size_t grid_size);

struct QuadrantFit {
  double sse = 0.0;
  // Indices into the cut grids of the best cuts.
  std::size_t cut_a = 0;
  std::size_t cut_b = 0;
  // Weighted means of z: [a<ca,b<cb], [a<ca,b>=cb], [a>=ca,b<cb], [a>=ca,b>=cb].
  std::array<double, 4> means{};
};

// Four-quadrant best fit for one pair via 2-D cumulative sums. Inputs are the
// per-row values, pseudo-response and weights.
QuadrantFit fast_pair_fit(std::span<const double> xa, std::span<const double> xb,
                     std::span<const double> cuts_a, std::span<const double> cuts_b,
                     std::span<const double> z, std::span<const double> h);

// Builds the ranked result and the oriented top-q set.
FilterResult rank_pairs(std::vector<PairScore> scores, std::size_t q);

// Deterministic subsample of at most `cap` rows, returned in ascending order.
std::vector<std::size_t> subsample_rows(std::span<const std::size_t> rows, std::size_t cap,
                                        std::uint64_t seed);

}  // namespace gami
