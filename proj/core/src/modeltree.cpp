#include "gami/modeltree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>

#include "gami/error.hpp"
#include "gami/linalg.hpp"

namespace gami {

namespace {

double variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

// A zero-variance column is penalized on the unit scale.
double penalty_weight(double var) { return var > 0.0 ? var : 1.0; }

void mirror_lower(std::span<double> a, std::size_t dim) {
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k < i; ++k) a[i * dim + k] = a[k * dim + i];
  }
}

}  // namespace

Design Design::raw_linear(std::span<const double> training_values) {
  Design d;
  d.kind_ = DesignKind::raw_linear;
  d.penalty_ = {0.0, penalty_weight(variance(training_values))};
  return d;
}

Design Design::spline(std::span<const double> training_values, std::size_t knots) {
  Design d;
  d.kind_ = DesignKind::spline;
  d.basis_ = SplineBasis::fit(training_values, knots);
  const std::size_t k = d.basis_->size();
  std::vector<double> sum(k), sum2(k);
  for (double x : training_values) {
    const auto s = d.basis_->locate(x);
    sum[s.index] += s.weight;
    sum2[s.index] += s.weight * s.weight;
    sum[s.index + 1] += 1.0 - s.weight;
    sum2[s.index + 1] += (1.0 - s.weight) * (1.0 - s.weight);
  }
  const double n = static_cast<double>(training_values.size());
  d.penalty_.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double mean = sum[i] / n;
    d.penalty_[i] = penalty_weight(std::max(0.0, sum2[i] / n - mean * mean));
  }
  return d;
}

Design Design::from_parts(DesignKind kind, std::vector<double> penalty,
                          std::optional<SplineBasis> basis) {
  Design d;
  d.kind_ = kind;
  if (kind == DesignKind::raw_linear && penalty.size() != 2) {
    throw ModelFormatError("raw linear design needs 2 penalty weights");
  }
  if (kind == DesignKind::spline && (!basis || basis->size() != penalty.size())) {
    throw ModelFormatError("spline design penalty does not match its basis");
  }
  d.penalty_ = std::move(penalty);
  d.basis_ = std::move(basis);
  return d;
}

void Design::row(double x, std::span<double> out) const {
  if (kind_ == DesignKind::raw_linear) {
    out[0] = 1.0;
    out[1] = x;
  } else {
    basis_->evaluate(x, out);
  }
}

std::size_t default_min_leaf(std::size_t training_rows) {
  return std::max<std::size_t>(20, training_rows / 200);
}

// ---------------------------------------------------------------------------
// FittedTree

FittedTree::FittedTree(TreeSpec spec, std::vector<TreeNode> nodes)
    : spec_(std::move(spec)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw UsageError("tree without nodes");
}

double FittedTree::sse() const {
  double total = 0.0;
  for (const auto& n : nodes_) {
    if (n.leaf()) total += n.sse;
  }
  return total;
}

int FittedTree::depth() const {
  std::function<int(int)> walk = [&](int i) -> int {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.leaf()) return 0;
    return 1 + std::max(walk(n.left), walk(n.right));
  };
  return walk(0);
}

std::size_t FittedTree::leaf_index(double split_value) const {
  std::size_t i = 0;
  while (!nodes_[i].leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(split_value >= n.threshold ? n.right : n.left);
  }
  return i;
}

std::vector<double> FittedTree::predict(const Dataset& data, std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = predict_row(data, rows[r]);
  return out;
}

// ---------------------------------------------------------------------------
// Node algebra

std::optional<std::vector<double>> solve_node(std::span<const double> cross,
                                              std::span<const double> moment,
                                              std::span<const double> penalty, double ridge) {
  const std::size_t dim = moment.size();
  double a[256];
  double b[16];
  if (dim > 16) throw UsageError("leaf design dimension above 16");
  std::copy(cross.begin(), cross.end(), a);
  for (std::size_t i = 0; i < dim; ++i) a[i * dim + i] += ridge * penalty[i];
  if (!linalg::cholesky({a, dim * dim}, dim)) return std::nullopt;
  std::copy(moment.begin(), moment.end(), b);
  linalg::cholesky_solve({a, dim * dim}, dim, {b, dim});
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(b[i])) return std::nullopt;
  }
  return std::vector<double>(b, b + dim);
}

double node_sse(std::span<const double> cross, std::span<const double> moment, double zz,
                std::span<const double> beta) {
  return zz - 2.0 * linalg::dot(beta, moment) + linalg::quadratic_form(cross, beta, beta.size());
}

namespace {

// Running sums for a contiguous bin range, laid out as [cross | moment | zz].
struct RangeStats {
  std::vector<double> v;
  std::size_t count = 0;
  std::size_t dim = 0;

  explicit RangeStats(std::size_t dim) : v(dim * dim + dim + 1), dim(dim) {}

  void add_bin(const BinnedGram& g, std::size_t b) {
    const auto c = g.cross_at(b);
    const auto m = g.moment_at(b);
    const std::size_t d2 = dim * dim;
    for (std::size_t i = 0; i < d2; ++i) v[i] += c[i];
    for (std::size_t i = 0; i < dim; ++i) v[d2 + i] += m[i];
    v[d2 + dim] += g.zz[b];
    count += g.count[b];
  }
  void set_difference(const RangeStats& a, const RangeStats& b) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.v[i] - b.v[i];
    count = a.count - b.count;
  }
  std::span<const double> cross() const { return {v.data(), dim * dim}; }
  std::span<const double> moment() const { return {v.data() + dim * dim, dim}; }
  double zz() const { return v[dim * dim + dim]; }
};

class TreeGrower {
 public:
  TreeGrower(const BinnedGram& gram, const TreeSpec& spec, std::span<const double> edges)
      : gram_(gram), spec_(spec), edges_(edges) {}

  std::vector<TreeNode> grow() {
    grow_node(0, gram_.bins, 0);
    return std::move(nodes_);
  }

 private:
  std::optional<double> fit_sse(const RangeStats& s, std::vector<double>* beta_out) const {
    auto beta = solve_node(s.cross(), s.moment(), spec_.design.penalty(), spec_.params.ridge);
    if (!beta) return std::nullopt;
    const double sse = node_sse(s.cross(), s.moment(), s.zz(), *beta);
    if (beta_out) *beta_out = std::move(*beta);
    return sse;
  }

  int grow_node(std::size_t lo, std::size_t hi, int depth) {
    RangeStats total(gram_.dim);
    for (std::size_t b = lo; b < hi; ++b) total.add_bin(gram_, b);

    TreeNode node;
    node.bin_lo = lo;
    node.bin_hi = hi;
    node.rows = total.count;
    const auto sse = fit_sse(total, &node.beta);
    if (!sse) {
      throw NumericalError("singular leaf system for tree on feature " +
                           std::to_string(spec_.model_var) + "; increase the ridge penalty");
    }
    node.sse = *sse;
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    if (depth >= spec_.params.max_depth || hi - lo < 2) return index;

    const std::size_t min_leaf = std::max<std::size_t>(1, spec_.params.min_leaf);
    RangeStats left(gram_.dim), right(gram_.dim);
    std::optional<std::size_t> best_cut;
    double best = 0.0;
    for (std::size_t t = lo + 1; t < hi; ++t) {
      left.add_bin(gram_, t - 1);
      // An empty bin repeats the previous partition.
      if (gram_.count[t - 1] == 0 && t - 1 > lo) continue;
      if (left.count < min_leaf) continue;
      if (total.count - left.count < min_leaf) break;
      right.set_difference(total, left);
      const auto sl = fit_sse(left, nullptr);
      if (!sl) continue;
      const auto sr = fit_sse(right, nullptr);
      if (!sr) continue;
      const double s = *sl + *sr;
      if (!best_cut || s < best) {
        best = s;
        best_cut = t;
      }
    }
    if (!best_cut || !(node.sse - best > 1e-12 * std::abs(total.zz()))) return index;

    const std::size_t cut = *best_cut;
    const int l = grow_node(lo, cut, depth + 1);
    const int r = grow_node(cut, hi, depth + 1);
    auto& n = nodes_[static_cast<std::size_t>(index)];
    n.threshold = edges_[cut - 1];
    n.left = l;
    n.right = r;
    return index;
  }

  const BinnedGram& gram_;
  const TreeSpec& spec_;
  std::span<const double> edges_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

FittedTree fit_tree(const BinnedGram& gram, const TreeSpec& spec, std::span<const double> edges) {
  if (spec.params.ridge < 0.0) throw UsageError("ridge must be nonnegative");
  if (spec.design.kind() == DesignKind::spline && spec.params.ridge == 0.0) {
    throw UsageError("spline leaf models require a positive ridge");
  }
  if (spec.params.max_depth < 0) throw UsageError("max_depth must be nonnegative");
  if (gram.bins != edges.size() + 1) throw UsageError("bin edges do not match the gram");
  if (gram.dim != spec.design.dim()) throw UsageError("gram dimension does not match the design");
  TreeGrower grower(gram, spec, edges);
  return FittedTree(spec, grower.grow());
}

// ---------------------------------------------------------------------------
// Accumulation

BinnedGram accumulate_gram(const Dataset& data, const BinMap& bins, std::span<const std::size_t> rows,
                           const TreeSpec& spec, std::span<const double> z, std::span<const double> h) {
  if (z.size() != rows.size() || h.size() != rows.size()) {
    throw UsageError("pseudo-response and weights must cover the rows");
  }
  const std::size_t dim = spec.design.dim();
  BinnedGram g(dim, bins.bins(spec.split_var));
  const auto split_bins = bins.indices(spec.split_var);
  std::vector<double> d(dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    const std::size_t b = split_bins[i];
    spec.design.row(data.at(i, spec.model_var), d);
    double* c = g.cross.data() + b * dim * dim;
    double* m = g.moment.data() + b * dim;
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t k = 0; k < dim; ++k) c[a * dim + k] += h[r] * d[a] * d[k];
      m[a] += h[r] * d[a] * z[r];
    }
    g.zz[b] += h[r] * z[r] * z[r];
    ++g.count[b];
  }
  return g;
}

TrainingFrame::TrainingFrame(const Dataset& data, const BinMap& bins, std::vector<std::size_t> rows,
                             std::size_t knots)
    : bin_map_(&bins), rows_(std::move(rows)) {
  if (rows_.empty()) throw UsageError("training frame needs at least one row");
  if (bins.features() != data.features()) throw UsageError("bin map does not match the dataset");
  const std::size_t p = data.features();
  values_.resize(p);
  bins_.resize(p);
  linear_.resize(p);
  spline_.resize(p);
  support_index_.resize(p);
  support_weight_.resize(p);
  for (std::size_t f = 0; f < p; ++f) {
    const auto col = data.column(f);
    const auto idx = bins.indices(f);
    values_[f].resize(rows_.size());
    bins_[f].resize(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      values_[f][r] = col[rows_[r]];
      bins_[f][r] = idx[rows_[r]];
    }
    linear_[f] = Design::raw_linear(values_[f]);
    try {
      spline_[f] = Design::spline(values_[f], knots);
    } catch (const UsageError&) {
      spline_[f].reset();
    }
    if (spline_[f]) {
      if (spline_[f]->dim() > 255) throw UsageError("too many spline knots");
      support_index_[f].resize(rows_.size());
      support_weight_[f].resize(rows_.size());
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        const auto s = spline_[f]->basis().locate(values_[f][r]);
        support_index_[f][r] = static_cast<std::uint8_t>(s.index);
        support_weight_[f][r] = s.weight;
      }
    }
  }
}

TreeSpec TrainingFrame::main_spec(std::size_t feature, const TreeParams& params) const {
  return TreeSpec{feature, feature, linear_[feature], params};
}

TreeSpec TrainingFrame::interaction_spec(std::size_t model_var, std::size_t split_var,
                                         const TreeParams& params) const {
  return TreeSpec{model_var, split_var, interaction_design(model_var), params};
}

void TrainingFrame::accumulate_cross(const TreeSpec& spec, std::span<const double> h,
                                     BinnedGram& g) const {
  const std::size_t dim = g.dim;
  const auto split = bins_[spec.split_var];
  const auto& x = values_[spec.model_var];
  const std::size_t n = rows_.size();
  const bool unit = h.empty();
  if (spec.design.kind() == DesignKind::raw_linear) {
    for (std::size_t r = 0; r < n; ++r) {
      const double w = unit ? 1.0 : h[r];
      double* c = g.cross.data() + split[r] * 4;
      c[0] += w;
      c[1] += w * x[r];
      c[3] += w * x[r] * x[r];
      ++g.count[split[r]];
    }
  } else {
    const auto& idx = support_index_[spec.model_var];
    const auto& wt = support_weight_[spec.model_var];
    const std::size_t d2 = dim * dim;
    for (std::size_t r = 0; r < n; ++r) {
      const double w = unit ? 1.0 : h[r];
      const std::size_t k = idx[r];
      const double a = wt[r];
      const double b = 1.0 - a;
      double* c = g.cross.data() + split[r] * d2 + k * dim + k;
      c[0] += w * a * a;
      c[1] += w * a * b;
      c[dim + 1] += w * b * b;
      ++g.count[split[r]];
    }
  }
  for (std::size_t b = 0; b < g.bins; ++b) mirror_lower({g.cross.data() + b * dim * dim, dim * dim}, dim);
}

void TrainingFrame::accumulate_moments(const TreeSpec& spec, std::span<const double> z,
                                       std::span<const double> h, bool unit_hessian,
                                       BinnedGram& g) const {
  const auto split = bins_[spec.split_var];
  const auto& x = values_[spec.model_var];
  const std::size_t n = rows_.size();
  if (spec.design.kind() == DesignKind::raw_linear) {
    for (std::size_t r = 0; r < n; ++r) {
      const double hz = unit_hessian ? z[r] : h[r] * z[r];
      double* m = g.moment.data() + split[r] * 2;
      m[0] += hz;
      m[1] += hz * x[r];
      g.zz[split[r]] += hz * z[r];
    }
  } else {
    const std::size_t dim = g.dim;
    const auto& idx = support_index_[spec.model_var];
    const auto& wt = support_weight_[spec.model_var];
    for (std::size_t r = 0; r < n; ++r) {
      const double hz = unit_hessian ? z[r] : h[r] * z[r];
      double* m = g.moment.data() + split[r] * dim + idx[r];
      m[0] += hz * wt[r];
      m[1] += hz * (1.0 - wt[r]);
      g.zz[split[r]] += hz * z[r];
    }
  }
}

BinnedGram TrainingFrame::accumulate(const TreeSpec& spec, std::span<const double> z,
                                     std::span<const double> h, bool unit_hessian) const {
  if (z.size() != rows_.size() || (!unit_hessian && h.size() != rows_.size())) {
    throw UsageError("pseudo-response and weights must cover the frame rows");
  }
  const std::size_t mv = spec.model_var;
  const bool fast = spec.design.kind() == DesignKind::raw_linear ||
                    (spline_[mv] && spec.design.has_basis() &&
                     spec.design.basis().knots() == spline_[mv]->basis().knots());
  if (!fast) {
    std::vector<double> ones;
    if (unit_hessian) ones.assign(rows_.size(), 1.0);
    return accumulate_gram_rows(spec, z, unit_hessian ? std::span<const double>(ones) : h);
  }

  BinnedGram g(spec.design.dim(), bin_count(spec.split_var));
  if (unit_hessian) {
    const auto key = std::make_tuple(spec.model_var, spec.split_var, spec.design.kind());
    std::shared_ptr<const CacheEntry> entry;
    {
      std::lock_guard lock(cache_mutex_);
      const auto it = cache_.find(key);
      if (it != cache_.end()) entry = it->second;
    }
    if (!entry) {
      BinnedGram scratch(spec.design.dim(), bin_count(spec.split_var));
      accumulate_cross(spec, {}, scratch);
      auto fresh = std::make_shared<CacheEntry>();
      fresh->cross = std::move(scratch.cross);
      fresh->count = std::move(scratch.count);
      std::lock_guard lock(cache_mutex_);
      entry = cache_.emplace(key, std::move(fresh)).first->second;
    }
    g.cross = entry->cross;
    g.count = entry->count;
  } else {
    accumulate_cross(spec, h, g);
  }
  accumulate_moments(spec, z, h, unit_hessian, g);
  return g;
}

BinnedGram TrainingFrame::accumulate_gram_rows(const TreeSpec& spec, std::span<const double> z,
                                               std::span<const double> h) const {
  const std::size_t dim = spec.design.dim();
  BinnedGram g(dim, bin_count(spec.split_var));
  const auto split = bins_[spec.split_var];
  const auto& x = values_[spec.model_var];
  std::vector<double> d(dim);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const std::size_t b = split[r];
    spec.design.row(x[r], d);
    double* c = g.cross.data() + b * dim * dim;
    double* m = g.moment.data() + b * dim;
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t k = 0; k < dim; ++k) c[a * dim + k] += h[r] * d[a] * d[k];
      m[a] += h[r] * d[a] * z[r];
    }
    g.zz[b] += h[r] * z[r] * z[r];
    ++g.count[b];
  }
  return g;
}

}  // namespace gami
