#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <span>
#include <utility>
#include <vector>

#include "gami/dataset.hpp"
#include "gami/spline.hpp"

namespace gami {

enum class DesignKind : std::uint8_t { raw_linear, spline };

// Leaf-model basis in a single modeling variable: [1, x] or K hat functions.
// The ridge penalty is diagonal; each non-intercept column is weighted by its
// training variance, which is the identity penalty on standardized columns.
class Design {
 public:
  Design() = default;

  static Design raw_linear(std::span<const double> training_values);
  static Design spline(std::span<const double> training_values, std::size_t knots);
  // Reconstruction from stored parts (model files).
  static Design from_parts(DesignKind kind, std::vector<double> penalty,
                           std::optional<SplineBasis> basis);

  DesignKind kind() const { return kind_; }
  std::size_t dim() const { return penalty_.size(); }
  const std::vector<double>& penalty() const { return penalty_; }
  const SplineBasis& basis() const { return *basis_; }
  bool has_basis() const { return basis_.has_value(); }

  void row(double x, std::span<double> out) const;
  double value(std::span<const double> beta, double x) const {
    if (kind_ == DesignKind::raw_linear) return beta[0] + beta[1] * x;
    return basis_->combine(beta, x);
  }

 private:
  DesignKind kind_ = DesignKind::raw_linear;
  std::vector<double> penalty_;
  std::optional<SplineBasis> basis_;
};

struct TreeParams {
  int max_depth = 2;
  std::size_t min_leaf = 20;
  double ridge = 1.0;
};

// max(20, 0.5% of training rows).
std::size_t default_min_leaf(std::size_t training_rows);

struct TreeSpec {
  std::size_t model_var = 0;
  std::size_t split_var = 0;
  Design design;
  TreeParams params;
};

// Per-bin weighted sufficient statistics of the split variable:
// cross = sum H d d^T, moment = sum H d z, zz = sum H z^2.
struct BinnedGram {
  std::size_t dim = 0;
  std::size_t bins = 0;
  std::vector<double> cross;
  std::vector<double> moment;
  std::vector<double> zz;
  std::vector<std::size_t> count;

  BinnedGram() = default;
  BinnedGram(std::size_t dim, std::size_t bins)
      : dim(dim), bins(bins), cross(bins * dim * dim), moment(bins * dim), zz(bins), count(bins) {}

  std::span<const double> cross_at(std::size_t b) const { return {cross.data() + b * dim * dim, dim * dim}; }
  std::span<const double> moment_at(std::size_t b) const { return {moment.data() + b * dim, dim}; }
};

struct TreeNode {
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t bin_lo = 0;
  std::size_t bin_hi = 0;
  std::size_t rows = 0;
  double sse = 0.0;
  std::vector<double> beta;

  bool leaf() const { return left < 0; }
};

// Axis-aligned tree with a ridge-fitted linear model in every leaf. Node 0 is
// the root. Rows with split value >= threshold go right.
class FittedTree {
 public:
  FittedTree() = default;
  FittedTree(TreeSpec spec, std::vector<TreeNode> nodes);

  const TreeSpec& spec() const { return spec_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  // Training weighted SSE summed over leaves, from sufficient statistics.
  double sse() const;
  int depth() const;

  std::size_t leaf_index(double split_value) const;
  double predict(double model_value, double split_value) const {
    const auto& leaf = nodes_[leaf_index(split_value)];
    return spec_.design.value(leaf.beta, model_value);
  }
  double predict_row(const Dataset& data, std::size_t row) const {
    return predict(data.at(row, spec_.model_var), data.at(row, spec_.split_var));
  }
  std::vector<double> predict(const Dataset& data, std::span<const std::size_t> rows) const;

 private:
  TreeSpec spec_;
  std::vector<TreeNode> nodes_;
};

// Training rows of a dataset laid out for fast gram accumulation: per-feature
// values and bin indices, the leaf designs, and a cache of the weight-only part
// of each gram (valid while every hessian is 1).
class TrainingFrame {
 public:
  TrainingFrame(const Dataset& data, const BinMap& bins, std::vector<std::size_t> rows,
                std::size_t knots = kDefaultKnots);

  std::size_t rows() const { return rows_.size(); }
  std::size_t features() const { return values_.size(); }
  const std::vector<std::size_t>& row_ids() const { return rows_; }
  std::span<const double> values(std::size_t f) const { return values_[f]; }
  std::span<const std::uint16_t> bins(std::size_t f) const { return bins_[f]; }
  std::size_t bin_count(std::size_t f) const { return bin_map_->bins(f); }
  const std::vector<double>& edges(std::size_t f) const { return bin_map_->edges(f); }

  const Design& linear_design(std::size_t f) const { return linear_[f]; }
  // Spline design when the column has >= 3 distinct knots, else the linear one.
  const Design& interaction_design(std::size_t f) const {
    return spline_[f] ? *spline_[f] : linear_[f];
  }

  TreeSpec main_spec(std::size_t feature, const TreeParams& params) const;
  TreeSpec interaction_spec(std::size_t model_var, std::size_t split_var,
                            const TreeParams& params) const;

  // z and H are indexed by frame row. When `unit_hessian` is set the cross
  // products are taken from (or stored in) the cache.
  BinnedGram accumulate(const TreeSpec& spec, std::span<const double> z, std::span<const double> h,
                        bool unit_hessian) const;

 private:
  void accumulate_cross(const TreeSpec& spec, std::span<const double> h, BinnedGram& g) const;
  void accumulate_moments(const TreeSpec& spec, std::span<const double> z,
                          std::span<const double> h, bool unit_hessian, BinnedGram& g) const;
  BinnedGram accumulate_gram_rows(const TreeSpec& spec, std::span<const double> z,
                                  std::span<const double> h) const;

  const BinMap* bin_map_;
  std::vector<std::size_t> rows_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint16_t>> bins_;
  std::vector<Design> linear_;
  std::vector<std::optional<Design>> spline_;
  // Spline support per feature and frame row.
  std::vector<std::vector<std::uint8_t>> support_index_;
  std::vector<std::vector<double>> support_weight_;

  struct CacheEntry {
    std::vector<double> cross;
    std::vector<std::size_t> count;
  };
  mutable std::mutex cache_mutex_;
  mutable std::map<std::tuple<std::size_t, std::size_t, DesignKind>, std::shared_ptr<const CacheEntry>>
      cache_;
};

// Sufficient statistics from raw rows, without a frame. Used for small data
// and as a building block in tests.
BinnedGram accumulate_gram(const Dataset& data, const BinMap& bins, std::span<const std::size_t> rows,
                           const TreeSpec& spec, std::span<const double> z, std::span<const double> h);

// Greedy depth-limited tree on the binned statistics. `edges` are the bin
// edges of the split variable.
FittedTree fit_tree(const BinnedGram& gram, const TreeSpec& spec, std::span<const double> edges);

// Solves (A + ridge * diag(penalty)) beta = c for one node. Returns nullopt if
// the system is not positive definite.
std::optional<std::vector<double>> solve_node(std::span<const double> cross,
                                              std::span<const double> moment,
                                              std::span<const double> penalty, double ridge);

// sum H z^2 - 2 beta^T c + beta^T A beta.
double node_sse(std::span<const double> cross, std::span<const double> moment, double zz,
                std::span<const double> beta);

}  // namespace gami
