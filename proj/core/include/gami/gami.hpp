#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gami/boost.hpp"
#include "gami/dataset.hpp"
#include "gami/effects.hpp"
#include "gami/filter.hpp"
#include "gami/loss.hpp"
#include "gami/terms.hpp"

namespace gami {

struct GamiConfig {
  std::size_t rounds = 5;
  StageConfig main_stage;
  StageConfig interaction_stage;
  std::size_t q = 10;
  LossSpec loss;
  // min_leaf == 0 selects default_min_leaf for the training size.
  TreeParams main_tree{2, 0, 1.0};
  TreeParams interaction_tree{2, 0, 1.0};
  std::size_t knots = kDefaultKnots;
  std::size_t subsample_cap = kDefaultSubsampleCap;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool purify = true;

  void validate() const;
};

struct RoundSummary {
  std::size_t main_stop = 0;
  std::size_t interaction_stop = 0;
  // Unordered top-q pairs chosen by the filter this round, in rank order.
  std::vector<std::pair<std::size_t, std::size_t>> selected_pairs;
  std::vector<double> main_trace;
  std::vector<double> interaction_trace;
};

class GamiModel {
 public:
  LossSpec loss;
  double intercept = 0.0;
  std::vector<std::string> feature_names;
  std::vector<ModelTree> trees;
  std::vector<RoundSummary> rounds;
  std::optional<EffectStore> effects;
  // Training bin edges per feature.
  std::vector<std::vector<double>> bin_edges;
  GamiConfig config;
  // Free-form provenance (data file, split seed and fractions, ...).
  std::map<std::string, std::string> metadata;

  std::size_t features() const { return feature_names.size(); }

  // intercept + sum of scaled tree outputs, accumulated in tree order.
  double predict_row(const Dataset& data, std::size_t row) const;
  std::vector<double> predict(const Dataset& data) const;
  std::vector<double> predict(const Dataset& data, std::span<const std::size_t> rows) const;
  // sigmoid(score) for logloss models.
  std::vector<double> predict_probability(const Dataset& data) const;

  // Every pair selected by the filter in any round, ascending.
  std::vector<std::pair<std::size_t, std::size_t>> selected_pair_union() const;
};

// Rounds of main stage, interaction filtering and interaction stage; stops
// early when a round retains no trees in either stage. Requires non-empty
// training and validation splits.
GamiModel fit(const Dataset& data, const BinMap& bins, const GamiConfig& config);

struct TermImportance {
  TermId term;
  double importance = 0.0;
};

// Standard deviation of each effect-store term over `rows`, descending
// (ties in term order). Requires a purified store.
std::vector<TermImportance> term_importance(const GamiModel& model, const Dataset& data,
                                            std::span<const std::size_t> rows);

// Convenience filters of the importance table.
std::vector<TermImportance> main_importance(const std::vector<TermImportance>& all);
std::vector<TermImportance> interaction_importance(const std::vector<TermImportance>& all);

}  // namespace gami
