#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gami/dataset.hpp"
#include "gami/gami.hpp"

namespace gami {

struct ReportOptions {
  std::size_t main_grid = 256;
  std::size_t interaction_grid = 64;
  std::array<double, 5> slice_levels{0.1, 0.3, 0.5, 0.7, 0.9};
};

struct ReportFiles {
  std::vector<std::filesystem::path> written;
};

// Writes plot-ready CSVs for a purified model into `directory`:
//   importance.csv             term, importance and rank over `rows`
//   main_<f>.csv               256-point curve over the training range
//   interaction_<a>_<b>.csv    64x64 surface
//   slices_<a>_<b>.csv         curves in one variable with the other fixed at
//                              its training quantiles, both directions
//   contributions.csv          per-row term contributions for `rows`
// `rows` are the training rows (grid ranges and quantiles come from them).
ReportFiles write_report(const GamiModel& model, const Dataset& data, std::span<const std::size_t> rows,
                         const std::filesystem::path& directory, const ReportOptions& options = {});

// Evenly spaced grid of `count` points on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

}  // namespace gami
