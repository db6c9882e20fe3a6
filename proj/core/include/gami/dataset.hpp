#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gami {

enum class SplitTag : std::uint8_t { train = 0, validation = 1, test = 2 };

struct CsvOptions {
  char delimiter = ',';
  bool header = true;
  // Reject response values other than 0 and 1.
  bool binary_response = false;
};

// Column-major numeric table with a response and a split tag per row.
class Dataset {
 public:
  Dataset() = default;
  // `columns[j]` holds feature j for every row.
  Dataset(std::vector<std::vector<double>> columns, std::vector<std::string> feature_names,
          std::vector<double> response);

  std::size_t rows() const { return response_.size(); }
  std::size_t features() const { return names_.size(); }

  std::span<const double> column(std::size_t j) const {
    return {values_.data() + j * rows(), rows()};
  }
  double at(std::size_t row, std::size_t feature) const { return values_[feature * rows() + row]; }

  const std::vector<std::string>& feature_names() const { return names_; }
  std::span<const double> response() const { return response_; }
  std::span<const SplitTag> tags() const { return tags_; }

  void set_tags(std::vector<SplitTag> tags);

  // Row indices carrying `tag`, ascending.
  std::vector<std::size_t> rows_with(SplitTag tag) const;

  // Throws DataError unless every response value is exactly 0 or 1.
  void require_binary_response() const;

 private:
  std::vector<double> values_;
  std::vector<std::string> names_;
  std::vector<double> response_;
  std::vector<SplitTag> tags_;
};

// Reads a header-first CSV. Every non-response column becomes a feature. An
// empty `response_column` reads all columns as features with a zero response.
Dataset load_csv(const std::filesystem::path& path, const std::string& response_column,
                 const CsvOptions& options = {});

// Same parser over an in-memory document; `source` names it in error messages.
Dataset parse_csv(std::string_view text, const std::string& response_column,
                  const CsvOptions& options = {}, const std::string& source = "<memory>");

using SplitFractions = std::array<double, 3>;

// Returns a copy with rows shuffled by `seed` and tagged train/validation/test.
// Cut points are floor(n * cumulative fraction).
Dataset split(const Dataset& data, const SplitFractions& fractions, std::uint64_t seed);

// Split sizes produced by `split` for n rows.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& fractions);

// Parses "0.5,0.25,0.25".
SplitFractions parse_fractions(std::string_view text);

// Quantile bin edges per feature, computed on the training split.
class BinMap {
 public:
  BinMap() = default;
  BinMap(std::vector<std::vector<double>> edges, std::size_t rows);

  // Bin indices for every row of `data` (all splits), computed from the edges.
  static BinMap build(const Dataset& data, std::size_t max_bins);

  std::size_t features() const { return edges_.size(); }
  std::size_t bins(std::size_t feature) const { return edges_[feature].size() + 1; }
  const std::vector<double>& edges(std::size_t feature) const { return edges_[feature]; }
  bool splittable(std::size_t feature) const { return !edges_[feature].empty(); }

  // Number of edges <= x. Values below the first edge land in bin 0, values at
  // or above the last edge in the last bin.
  std::uint16_t bin_of(std::size_t feature, double x) const;

  std::span<const std::uint16_t> indices(std::size_t feature) const {
    return {index_.data() + feature * rows_, rows_};
  }

  void assign(const Dataset& data);

 private:
  std::vector<std::vector<double>> edges_;
  std::vector<std::uint16_t> index_;
  std::size_t rows_ = 0;
};

inline constexpr std::size_t kDefaultMaxBins = 256;

// Edges for one training column. When the column has at most `max_bins` distinct
// values the edges are midpoints between neighbours, so every distinct value gets
// its own bin; otherwise they are the k/max_bins quantiles with duplicates removed.
std::vector<double> quantile_edges(std::span<const double> training_values, std::size_t max_bins);

// Type-7 (linear interpolation) quantile of sorted data.
double sorted_quantile(std::span<const double> sorted, double level);

}  // namespace gami
