#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gami/dataset.hpp"
#include "gami/loss.hpp"
#include "gami/modeltree.hpp"

namespace gami {

struct StageConfig {
  double learning_rate = 0.2;
  std::size_t max_iterations = 1000;
  std::size_t patience = 10;

  void validate() const;
};

// One boosting candidate: a main-effect term (split_var == model_var, linear
// leaves) or an oriented interaction (spline leaves in model_var, splits on
// split_var).
struct Candidate {
  std::size_t model_var = 0;
  std::size_t split_var = 0;

  bool interaction() const { return model_var != split_var; }
  friend auto operator<=>(const Candidate&, const Candidate&) = default;
};

struct StageResult {
  // Retained trees in fit order; each contributes learning_rate * tree.
  std::vector<FittedTree> trees;
  std::vector<Candidate> selected;
  // Number of retained trees.
  std::size_t stop_iteration = 0;
  // Validation loss before the stage (index 0) and after every iteration run.
  std::vector<double> validation_trace;
  bool early_stopped = false;
  // Training-weighted SSE of every candidate at every iteration, when recorded.
  std::vector<std::vector<double>> candidate_sse;
};

// Shared inputs of a boosting stage. `frame` covers the training rows.
struct BoostContext {
  const Dataset& data;
  const TrainingFrame& frame;
  std::span<const std::size_t> validation_rows;
  LossSpec loss;
  TreeParams tree;
  std::size_t threads = 1;
  bool record_candidate_sse = false;
};

// Patience rule on a trace L_0..L_m: returns m - d when L_{m-d} is strictly
// below every later value, meaning the stage should roll back to m - d trees.
std::optional<std::size_t> rollback_point(std::span<const double> trace, std::size_t patience);

// Newton boosting over `candidates`, one tree per iteration. `scores` holds the
// current model score for every dataset row and is updated in place.
StageResult fit_stage(const BoostContext& ctx, std::vector<double>& scores,
                      const StageConfig& config, std::span<const Candidate> candidates);

// Candidates are all features, each a main-effect tree.
StageResult fit_main(const BoostContext& ctx, std::vector<double>& scores, const StageConfig& config);

// Candidates are the given oriented pairs (model_var, split_var).
StageResult fit_int(const BoostContext& ctx, std::vector<double>& scores, const StageConfig& config,
                    std::span<const std::pair<std::size_t, std::size_t>> oriented_pairs);

// Fits the tree for one candidate to the pseudo-response on the frame.
FittedTree fit_candidate(const TrainingFrame& frame, const Candidate& candidate,
                         const TreeParams& params, const NewtonState& state);

}  // namespace gami
