#include "gami/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gami/error.hpp"
#include "gami/random.hpp"

namespace gami {

namespace {

// Splits one CSV record honoring double-quoted fields. `pos` advances past the
// record terminator. Returns false at end of input.
bool next_record(std::string_view text, std::size_t& pos, char delimiter,
                 std::vector<std::string>& fields) {
  fields.clear();
  if (pos >= text.size()) return false;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char ch = text[pos];
    if (quoted) {
      if (ch == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
          continue;
        }
        quoted = false;
      } else {
        field.push_back(ch);
      }
      ++pos;
      continue;
    }
    if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
    ++pos;
  }
  fields.push_back(std::move(field));
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

}  // namespace

Dataset::Dataset(std::vector<std::vector<double>> columns, std::vector<std::string> feature_names,
                 std::vector<double> response)
    : names_(std::move(feature_names)), response_(std::move(response)) {
  if (columns.size() != names_.size()) {
    throw DataError("feature name count does not match column count");
  }
  const std::size_t n = response_.size();
  values_.reserve(n * columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) {
      throw DataError("column '" + names_[j] + "' has " + std::to_string(columns[j].size()) +
                      " rows, expected " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(columns[j][i])) {
        throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column '" +
                        names_[j] + "'");
      }
    }
    values_.insert(values_.end(), columns[j].begin(), columns[j].end());
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(response_[i])) {
      throw DataError("non-finite response at row " + std::to_string(i + 1));
    }
  }
  tags_.assign(n, SplitTag::train);
}

void Dataset::set_tags(std::vector<SplitTag> tags) {
  if (tags.size() != rows()) throw UsageError("split tag count does not match row count");
  tags_ = std::move(tags);
}

std::vector<std::size_t> Dataset::rows_with(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (tags_[i] == tag) out.push_back(i);
  }
  return out;
}

void Dataset::require_binary_response() const {
  for (std::size_t i = 0; i < response_.size(); ++i) {
    if (response_[i] != 0.0 && response_[i] != 1.0) {
      throw DataError("binary response expected, found " + std::to_string(response_[i]) +
                      " at row " + std::to_string(i + 1));
    }
  }
}

Dataset parse_csv(std::string_view text, const std::string& response_column,
                  const CsvOptions& options, const std::string& source) {
  std::size_t pos = 0;
  std::vector<std::string> fields;
  std::vector<std::string> header;
  if (options.header) {
    if (!next_record(text, pos, options.delimiter, header)) {
      throw DataError(source + ": empty file");
    }
    for (auto& h : header) h = std::string(trim(h));
  }

  std::vector<std::vector<double>> cells;
  std::size_t line = options.header ? 1 : 0;
  while (next_record(text, pos, options.delimiter, fields)) {
    ++line;
    if (blank(fields)) continue;
    if (header.empty()) {
      for (std::size_t j = 0; j < fields.size(); ++j) header.push_back("x" + std::to_string(j + 1));
    }
    if (fields.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(line) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    if (cells.empty()) cells.resize(header.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string_view cell = trim(fields[j]);
      double value = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty()) {
        throw DataError(source + ": cannot parse '" + std::string(cell) + "' at row " +
                        std::to_string(line) + ", column '" + header[j] + "'");
      }
      if (!std::isfinite(value)) {
        throw DataError(source + ": non-finite value at row " + std::to_string(line) +
                        ", column '" + header[j] + "'");
      }
      cells[j].push_back(value);
    }
  }

  if (cells.empty()) cells.resize(header.size());
  if (response_column.empty()) {
    // Scoring input without a response column.
    const std::size_t n = cells.empty() ? 0 : cells.front().size();
    return Dataset(std::move(cells), std::move(header), std::vector<double>(n, 0.0));
  }
  const auto it = std::find(header.begin(), header.end(), response_column);
  if (it == header.end()) {
    throw DataError(source + ": response column '" + response_column + "' not found");
  }
  const std::size_t response_index = static_cast<std::size_t>(it - header.begin());

  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == response_index) continue;
    columns.push_back(std::move(cells[j]));
    names.push_back(header[j]);
  }
  Dataset data(std::move(columns), std::move(names), std::move(cells[response_index]));
  if (options.binary_response) data.require_binary_response();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response_column,
                 const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), response_column, options, path.string());
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& fractions) {
  const double nd = static_cast<double>(n);
  const auto cut1 = static_cast<std::size_t>(std::floor(nd * fractions[0]));
  const auto cut2 = static_cast<std::size_t>(std::floor(nd * (fractions[0] + fractions[1])));
  return {cut1, cut2 - cut1, n - cut2};
}

Dataset split(const Dataset& data, const SplitFractions& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw UsageError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");
  const auto sizes = split_sizes(data.rows(), fractions);
  for (std::size_t s : sizes) {
    if (s == 0) throw UsageError("split would leave an empty partition");
  }

  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomStream rng(seed, 0x5b1e);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<SplitTag> tags(data.rows());
  for (std::size_t r = 0; r < order.size(); ++r) {
    SplitTag t = SplitTag::test;
    if (r < sizes[0]) {
      t = SplitTag::train;
    } else if (r < sizes[0] + sizes[1]) {
      t = SplitTag::validation;
    }
    tags[order[r]] = t;
  }
  Dataset out = data;
  out.set_tags(std::move(tags));
  return out;
}

SplitFractions parse_fractions(std::string_view text) {
  SplitFractions out{};
  std::size_t k = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view part = trim(text.substr(start, comma - start));
    if (k >= 3) throw UsageError("expected three split fractions");
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), out[k]);
    if (ec != std::errc() || end != part.data() + part.size()) {
      throw UsageError("bad split fraction '" + std::string(part) + "'");
    }
    ++k;
    start = comma + 1;
  }
  if (k != 3) throw UsageError("expected three split fractions");
  return out;
}

double sorted_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw UsageError("quantile of empty data");
  const double h = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> quantile_edges(std::span<const double> training_values, std::size_t max_bins) {
  if (max_bins < 2) throw UsageError("max_bins must be at least 2");
  if (training_values.empty()) throw UsageError("cannot bin an empty training split");
  std::vector<double> sorted(training_values.begin(), training_values.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> edges;
  if (distinct.size() <= max_bins) {
    for (std::size_t i = 1; i < distinct.size(); ++i) {
      edges.push_back(0.5 * (distinct[i - 1] + distinct[i]));
    }
    return edges;
  }
  for (std::size_t k = 1; k < max_bins; ++k) {
    const double q = sorted_quantile(sorted, static_cast<double>(k) / static_cast<double>(max_bins));
    // Edges at or below the minimum would only create an empty leading bin.
    if (q <= sorted.front()) continue;
    if (edges.empty() || q > edges.back()) edges.push_back(q);
  }
  return edges;
}

BinMap::BinMap(std::vector<std::vector<double>> edges, std::size_t rows)
    : edges_(std::move(edges)), rows_(rows) {
  for (const auto& e : edges_) {
    if (e.size() + 1 > 65535) throw UsageError("too many bins");
    for (std::size_t i = 1; i < e.size(); ++i) {
      if (!(e[i] > e[i - 1])) throw UsageError("bin edges must be strictly increasing");
    }
  }
  index_.assign(rows_ * edges_.size(), 0);
}

BinMap BinMap::build(const Dataset& data, std::size_t max_bins) {
  const auto train = data.rows_with(SplitTag::train);
  if (train.empty()) throw UsageError("training split is empty");
  std::vector<std::vector<double>> edges(data.features());
  std::vector<double> values(train.size());
  for (std::size_t j = 0; j < data.features(); ++j) {
    const auto col = data.column(j);
    for (std::size_t r = 0; r < train.size(); ++r) values[r] = col[train[r]];
    edges[j] = quantile_edges(values, max_bins);
  }
  BinMap map(std::move(edges), data.rows());
  map.assign(data);
  return map;
}

std::uint16_t BinMap::bin_of(std::size_t feature, double x) const {
  const auto& e = edges_[feature];
  return static_cast<std::uint16_t>(std::upper_bound(e.begin(), e.end(), x) - e.begin());
}

void BinMap::assign(const Dataset& data) {
  if (data.features() != edges_.size()) throw UsageError("feature count mismatch in BinMap");
  rows_ = data.rows();
  index_.assign(rows_ * edges_.size(), 0);
  for (std::size_t j = 0; j < edges_.size(); ++j) {
    const auto col = data.column(j);
    for (std::size_t i = 0; i < rows_; ++i) index_[j * rows_ + i] = bin_of(j, col[i]);
  }
}

}  // namespace gami
