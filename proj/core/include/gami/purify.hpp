#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gami/dataset.hpp"
#include "gami/effects.hpp"
#include "gami/gami.hpp"

namespace gami {

// Removes from every interaction the best additive fit c + h_j(x_j) + h_k(x_k)
// (least squares over `rows`, hat-function designs with `knots` knots, h's
// centred), moves h_j, h_k into the main effects and c into the intercept,
// then centres every main effect. Total predictions are unchanged. Importance
// is refreshed as the standard deviation of each term over `rows`.
EffectStore purify(const EffectStore& store, std::span<const ModelTree> trees, const Dataset& data,
                   std::span<const std::size_t> rows, std::size_t knots = kDefaultKnots);

// Builds the raw store of `model` and purifies it over the model's training rows.
EffectStore purify(const GamiModel& model, const Dataset& data, std::span<const std::size_t> rows,
                   std::size_t knots = kDefaultKnots);

// Standard deviation of every term over `rows`, written into the store.
void refresh_importance(EffectStore& store, std::span<const ModelTree> trees, const Dataset& data,
                        std::span<const std::size_t> rows);

struct OrthogonalityEntry {
  std::size_t first = 0;
  std::size_t second = 0;
  // max over basis functions b of x_j and x_k of |mean(g_jk * b)|.
  double max_inner_product = 0.0;
  // Tolerance scale: std(b) * max(std(g_jk), std(raw tree sum)) at the maximum.
  double scale = 0.0;
  double ratio = 0.0;  // max_inner_product / scale, 0 when scale is 0
  bool passed = true;
};

struct OrthogonalityReport {
  std::vector<OrthogonalityEntry> pairs;
  double tolerance = 1e-6;
  double worst_ratio() const;
  bool passed() const;
};

// Empirical inner products of every interaction with the hat functions of
// both of its variables over `rows`.
OrthogonalityReport verify_orthogonality(const EffectStore& store, std::span<const ModelTree> trees,
                                         const Dataset& data, std::span<const std::size_t> rows,
                                         std::size_t knots = kDefaultKnots, double tolerance = 1e-6);

// Basis used for a purification correction of one variable: hat functions,
// or [1, x] when the column has fewer than 3 distinct knots.
Correction correction_basis(std::span<const double> training_values, std::size_t knots);

}  // namespace gami
