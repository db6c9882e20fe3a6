#include "gami/boost.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "gami/error.hpp"
#include "gami/parallel.hpp"

namespace gami {

void StageConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw UsageError("learning rate must lie in (0, 1]");
  }
  if (max_iterations < 1) throw UsageError("max_iterations must be at least 1");
  if (patience < 1) throw UsageError("patience must be at least 1");
}

std::optional<std::size_t> rollback_point(std::span<const double> trace, std::size_t patience) {
  if (trace.empty() || patience == 0) return std::nullopt;
  const std::size_t m = trace.size() - 1;
  if (m < patience) return std::nullopt;
  const std::size_t anchor = m - patience;
  const double later = *std::min_element(trace.begin() + static_cast<std::ptrdiff_t>(anchor) + 1, trace.end());
  if (trace[anchor] < later) return anchor;
  return std::nullopt;
}

FittedTree fit_candidate(const TrainingFrame& frame, const Candidate& candidate,
                         const TreeParams& params, const NewtonState& state) {
  const TreeSpec spec = candidate.interaction()
                            ? frame.interaction_spec(candidate.model_var, candidate.split_var, params)
                            : frame.main_spec(candidate.model_var, params);
  const BinnedGram gram =
      frame.accumulate(spec, state.pseudo_response, state.hessian, state.unit_hessian);
  return fit_tree(gram, spec, frame.edges(spec.split_var));
}

StageResult fit_stage(const BoostContext& ctx, std::vector<double>& scores,
                      const StageConfig& config, std::span<const Candidate> candidates) {
  config.validate();
  if (ctx.validation_rows.empty()) throw UsageError("validation split is empty");
  if (scores.size() != ctx.data.rows()) throw UsageError("score vector does not cover the dataset");

  const auto y = ctx.data.response();
  const auto& train = ctx.frame.row_ids();
  std::vector<double> y_train(train.size()), g_train(train.size());
  for (std::size_t r = 0; r < train.size(); ++r) y_train[r] = y[train[r]];
  std::vector<double> y_val(ctx.validation_rows.size()), g_val(ctx.validation_rows.size());
  for (std::size_t r = 0; r < y_val.size(); ++r) y_val[r] = y[ctx.validation_rows[r]];

  auto validation_loss = [&] {
    for (std::size_t r = 0; r < g_val.size(); ++r) g_val[r] = scores[ctx.validation_rows[r]];
    return mean_loss(ctx.loss, y_val, g_val);
  };

  StageResult result;
  result.validation_trace.push_back(validation_loss());
  if (candidates.empty()) return result;

  // Score snapshots for the last `patience` + 1 iterations, oldest first.
  std::deque<std::vector<double>> history;
  history.push_back(scores);

  std::vector<FittedTree> fitted(candidates.size());
  std::vector<double> sse(candidates.size());
  for (std::size_t m = 1; m <= config.max_iterations; ++m) {
    for (std::size_t r = 0; r < train.size(); ++r) g_train[r] = scores[train[r]];
    const NewtonState state = derivatives(ctx.loss, y_train, g_train);

    parallel_for(candidates.size(), ctx.threads, [&](std::size_t i) {
      fitted[i] = fit_candidate(ctx.frame, candidates[i], ctx.tree, state);
      sse[i] = fitted[i].sse();
    });
    if (ctx.record_candidate_sse) result.candidate_sse.push_back(sse);

    // Candidates arrive in ascending order, so the first minimum wins ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < sse.size(); ++i) {
      if (sse[i] < sse[best]) best = i;
    }
    const FittedTree& tree = fitted[best];
    const double lr = config.learning_rate;
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] += lr * tree.predict_row(ctx.data, i);

    result.trees.push_back(tree);
    result.selected.push_back(candidates[best]);
    result.validation_trace.push_back(validation_loss());

    history.push_back(scores);
    if (history.size() > config.patience + 1) history.pop_front();

    if (const auto keep = rollback_point(result.validation_trace, config.patience)) {
      scores = std::move(history.front());
      result.trees.resize(*keep);
      result.selected.resize(*keep);
      result.early_stopped = true;
      break;
    }
  }
  result.stop_iteration = result.trees.size();
  return result;
}

StageResult fit_main(const BoostContext& ctx, std::vector<double>& scores, const StageConfig& config) {
  std::vector<Candidate> candidates;
  for (std::size_t j = 0; j < ctx.frame.features(); ++j) candidates.push_back({j, j});
  return fit_stage(ctx, scores, config, candidates);
}

StageResult fit_int(const BoostContext& ctx, std::vector<double>& scores, const StageConfig& config,
                    std::span<const std::pair<std::size_t, std::size_t>> oriented_pairs) {
  std::vector<Candidate> candidates;
  for (const auto& [model_var, split_var] : oriented_pairs) {
    if (model_var == split_var) throw UsageError("interaction pair needs two distinct features");
    candidates.push_back({model_var, split_var});
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  return fit_stage(ctx, scores, config, candidates);
}

}  // namespace gami
