#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gami/dataset.hpp"
#include "gami/modeltree.hpp"
#include "gami/spline.hpp"
#include "gami/terms.hpp"

namespace gami {

// Additive correction in one variable: a hat-function expansion, or
// coef[0] + coef[1] * x when the variable has too few distinct values for a
// spline. An empty coefficient vector is the zero function.
struct Correction {
  DesignKind kind = DesignKind::spline;
  std::optional<SplineBasis> basis;
  std::vector<double> coef;

  bool empty() const { return coef.empty(); }
  double value(double x) const {
    if (coef.empty()) return 0.0;
    if (kind == DesignKind::raw_linear) return coef[0] + coef[1] * x;
    return basis->combine(coef, x);
  }
  // Adds another correction on the same basis.
  void add(const Correction& other, double sign = 1.0);
};

// g_j(x) = sum of its trees + correction(x) + offset.
struct MainEffect {
  std::size_t feature = 0;
  std::vector<std::size_t> trees;
  Correction correction;
  double offset = 0.0;
  double importance = 0.0;
};

// g_jk(x_j, x_k) = sum of its trees (either orientation) - first_correction(x_j)
//                  - second_correction(x_k) + offset.
struct InteractionEffect {
  std::size_t first = 0;
  std::size_t second = 0;
  std::vector<std::size_t> trees;
  Correction first_correction;
  Correction second_correction;
  double offset = 0.0;
  double importance = 0.0;
};

// Decomposition of a fitted model into an intercept and per-term functions.
// Term functions reference trees of the owning model by index.
struct EffectStore {
  double intercept = 0.0;
  std::vector<MainEffect> mains;
  std::vector<InteractionEffect> interactions;
  bool purified = false;

  double main_value(const MainEffect& effect, std::span<const ModelTree> trees, double x) const;
  double interaction_value(const InteractionEffect& effect, std::span<const ModelTree> trees,
                           double x_first, double x_second) const;
  // Raw tree sum of the pair, without corrections or offset.
  double interaction_raw_value(const InteractionEffect& effect, std::span<const ModelTree> trees,
                               double x_first, double x_second) const;

  double predict_row(std::span<const ModelTree> trees, const Dataset& data, std::size_t row) const;

  MainEffect* find_main(std::size_t feature);
  const MainEffect* find_main(std::size_t feature) const;
  const InteractionEffect* find_interaction(std::size_t a, std::size_t b) const;
};

// One term per feature or pair that owns trees, no corrections.
EffectStore collect_effects(std::span<const ModelTree> trees, double intercept);

}  // namespace gami
