#include "gami/purify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gami/error.hpp"
#include "gami/linalg.hpp"

namespace gami {

namespace {

std::vector<double> gather(const Dataset& data, std::size_t feature, std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size());
  const auto col = data.column(feature);
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = col[rows[r]];
  return out;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return v.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(v.size()));
}

// Columns of the identified additive design for one variable: the first K-1
// hat functions (the dropped one is implied by the intercept) or just x.
std::size_t reduced_dim(const Correction& c) {
  return c.kind == DesignKind::spline ? c.basis->size() - 1 : 1;
}

void reduced_row(const Correction& c, double x, std::span<double> out) {
  if (c.kind == DesignKind::raw_linear) {
    out[0] = x;
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  const auto s = c.basis->locate(x);
  if (s.index < out.size()) out[s.index] = s.weight;
  if (s.index + 1 < out.size()) out[s.index + 1] = 1.0 - s.weight;
}

// Full coefficient vector of a correction from its reduced coefficients.
Correction expand(const Correction& shape, std::span<const double> reduced) {
  Correction c = shape;
  if (c.kind == DesignKind::raw_linear) {
    c.coef = {0.0, reduced[0]};
  } else {
    c.coef.assign(c.basis->size(), 0.0);
    std::copy(reduced.begin(), reduced.end(), c.coef.begin());
  }
  return c;
}

// Shifts a correction by a constant (hat functions sum to one).
void shift(Correction& c, double delta) {
  if (c.kind == DesignKind::raw_linear) {
    c.coef[0] += delta;
  } else {
    for (double& v : c.coef) v += delta;
  }
}

struct AdditiveFit {
  double constant = 0.0;
  Correction first;
  Correction second;
};

// Least squares of y on [1, reduced(a), reduced(b)]; corrections are returned
// centred over the rows with their means folded into the constant.
AdditiveFit fit_additive(std::span<const double> y, std::span<const double> xa,
                         std::span<const double> xb, const Correction& shape_a,
                         const Correction& shape_b) {
  const std::size_t da = reduced_dim(shape_a);
  const std::size_t db = reduced_dim(shape_b);
  const std::size_t dim = 1 + da + db;
  std::vector<double> xtx(dim * dim, 0.0), xty(dim, 0.0), row(dim);
  for (std::size_t r = 0; r < y.size(); ++r) {
    row[0] = 1.0;
    reduced_row(shape_a, xa[r], {row.data() + 1, da});
    reduced_row(shape_b, xb[r], {row.data() + 1 + da, db});
    for (std::size_t i = 0; i < dim; ++i) {
      if (row[i] == 0.0) continue;
      for (std::size_t k = i; k < dim; ++k) xtx[i * dim + k] += row[i] * row[k];
      xty[i] += row[i] * y[r];
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k < i; ++k) xtx[i * dim + k] = xtx[k * dim + i];
  }

  std::vector<double> factor = xtx;
  std::vector<double> beta = xty;
  if (!linalg::cholesky(factor, dim)) {
    // Rank-deficient design (e.g. a knot interval without rows): stabilise.
    double scale = 0.0;
    for (std::size_t i = 0; i < dim; ++i) scale = std::max(scale, xtx[i * dim + i]);
    factor = xtx;
    for (std::size_t i = 1; i < dim; ++i) factor[i * dim + i] += 1e-10 * scale;
    if (!linalg::cholesky(factor, dim)) throw NumericalError("purification system is singular");
  }
  linalg::cholesky_solve(factor, dim, beta);

  AdditiveFit fit;
  fit.first = expand(shape_a, {beta.data() + 1, da});
  fit.second = expand(shape_b, {beta.data() + 1 + da, db});
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    mean_a += fit.first.value(xa[r]);
    mean_b += fit.second.value(xb[r]);
  }
  const double n = static_cast<double>(y.size());
  mean_a /= n;
  mean_b /= n;
  shift(fit.first, -mean_a);
  shift(fit.second, -mean_b);
  fit.constant = beta[0] + mean_a + mean_b;
  return fit;
}

}  // namespace

Correction correction_basis(std::span<const double> training_values, std::size_t knots) {
  Correction c;
  try {
    c.basis = SplineBasis::fit(training_values, knots);
    c.kind = DesignKind::spline;
  } catch (const UsageError&) {
    c.basis.reset();
    c.kind = DesignKind::raw_linear;
  }
  return c;
}

void refresh_importance(EffectStore& store, std::span<const ModelTree> trees, const Dataset& data,
                        std::span<const std::size_t> rows) {
  std::vector<double> v(rows.size());
  for (auto& m : store.mains) {
    const auto col = data.column(m.feature);
    for (std::size_t r = 0; r < rows.size(); ++r) v[r] = store.main_value(m, trees, col[rows[r]]);
    m.importance = std_of(v);
  }
  for (auto& e : store.interactions) {
    const auto ca = data.column(e.first);
    const auto cb = data.column(e.second);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      v[r] = store.interaction_value(e, trees, ca[rows[r]], cb[rows[r]]);
    }
    e.importance = std_of(v);
  }
}

EffectStore purify(const EffectStore& input, std::span<const ModelTree> trees, const Dataset& data,
                   std::span<const std::size_t> rows, std::size_t knots) {
  if (rows.empty()) throw UsageError("purification needs training rows");
  EffectStore store = input;
  std::vector<std::vector<double>> columns(data.features());
  std::vector<std::optional<Correction>> shapes(data.features());
  auto column = [&](std::size_t f) -> const std::vector<double>& {
    if (columns[f].empty()) columns[f] = gather(data, f, rows);
    return columns[f];
  };
  auto shape = [&](std::size_t f) -> const Correction& {
    if (!shapes[f]) shapes[f] = correction_basis(column(f), knots);
    return *shapes[f];
  };
  auto main_for = [&](std::size_t f) -> MainEffect& {
    if (auto* m = store.find_main(f)) return *m;
    MainEffect m;
    m.feature = f;
    store.mains.push_back(std::move(m));
    return store.mains.back();
  };

  std::vector<double> y(rows.size());
  for (auto& e : store.interactions) {
    const auto& xa = column(e.first);
    const auto& xb = column(e.second);
    for (std::size_t r = 0; r < rows.size(); ++r) y[r] = store.interaction_value(e, trees, xa[r], xb[r]);
    const AdditiveFit fit = fit_additive(y, xa, xb, shape(e.first), shape(e.second));
    e.first_correction.add(fit.first);
    e.second_correction.add(fit.second);
    e.offset -= fit.constant;
    main_for(e.first).correction.add(fit.first);
    main_for(e.second).correction.add(fit.second);
    store.intercept += fit.constant;
  }
  std::sort(store.mains.begin(), store.mains.end(),
            [](const MainEffect& a, const MainEffect& b) { return a.feature < b.feature; });

  for (auto& m : store.mains) {
    const auto& x = column(m.feature);
    double mean = 0.0;
    for (double v : x) mean += store.main_value(m, trees, v);
    mean /= static_cast<double>(x.size());
    m.offset -= mean;
    store.intercept += mean;
  }
  store.purified = true;
  refresh_importance(store, trees, data, rows);
  return store;
}

EffectStore purify(const GamiModel& model, const Dataset& data, std::span<const std::size_t> rows,
                   std::size_t knots) {
  return purify(collect_effects(model.trees, model.intercept), model.trees, data, rows, knots);
}

double OrthogonalityReport::worst_ratio() const {
  double worst = 0.0;
  for (const auto& p : pairs) worst = std::max(worst, p.ratio);
  return worst;
}

bool OrthogonalityReport::passed() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.passed; });
}

OrthogonalityReport verify_orthogonality(const EffectStore& store, std::span<const ModelTree> trees,
                                         const Dataset& data, std::span<const std::size_t> rows,
                                         std::size_t knots, double tolerance) {
  OrthogonalityReport report;
  report.tolerance = tolerance;
  if (rows.empty()) return report;
  const double n = static_cast<double>(rows.size());
  std::vector<double> g(rows.size()), raw(rows.size()), b(rows.size());
  for (const auto& e : store.interactions) {
    const auto xa = gather(data, e.first, rows);
    const auto xb = gather(data, e.second, rows);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      g[r] = store.interaction_value(e, trees, xa[r], xb[r]);
      raw[r] = store.interaction_raw_value(e, trees, xa[r], xb[r]);
    }
    const double magnitude = std::max(std_of(g), std_of(raw));

    OrthogonalityEntry entry;
    entry.first = e.first;
    entry.second = e.second;
    auto check = [&](const std::vector<double>& x) {
      const Correction basis = correction_basis(x, knots);
      const std::size_t count = basis.kind == DesignKind::spline ? basis.basis->size() : 2;
      for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (basis.kind == DesignKind::spline) {
            const auto s = basis.basis->locate(x[r]);
            b[r] = s.index == k ? s.weight : (s.index + 1 == k ? 1.0 - s.weight : 0.0);
          } else {
            b[r] = k == 0 ? 1.0 : x[r];
          }
        }
        double ip = 0.0;
        for (std::size_t r = 0; r < rows.size(); ++r) ip += g[r] * b[r];
        ip = std::abs(ip / n);
        double spread = std_of(b);
        if (spread == 0.0) spread = 1.0;  // constant basis function
        const double scale = spread * magnitude;
        const double ratio = scale > 0.0 ? ip / scale : (ip > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio >= entry.ratio) {
          entry.ratio = ratio;
          entry.scale = scale;
        }
        entry.max_inner_product = std::max(entry.max_inner_product, ip);
      }
    };
    check(xa);
    check(xb);
    entry.passed = entry.ratio <= tolerance;
    report.pairs.push_back(entry);
  }
  return report;
}

}  // namespace gami
