#include "gami/gami.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gami/error.hpp"
#include "gami/purify.hpp"

namespace gami {

void GamiConfig::validate() const {
  if (rounds < 1) throw UsageError("rounds must be at least 1");
  main_stage.validate();
  interaction_stage.validate();
  if (knots < 3) throw UsageError("knots must be at least 3");
  if (subsample_cap < 1) throw UsageError("subsample cap must be positive");
}

double GamiModel::predict_row(const Dataset& data, std::size_t row) const {
  double s = intercept;
  for (const auto& t : trees) s += t.scale * t.tree.predict_row(data, row);
  return s;
}

std::vector<double> GamiModel::predict(const Dataset& data) const {
  if (data.features() != features()) {
    throw DataError("data has " + std::to_string(data.features()) + " features, model expects " +
                    std::to_string(features()));
  }
  std::vector<double> out(data.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict_row(data, i);
  return out;
}

std::vector<double> GamiModel::predict(const Dataset& data, std::span<const std::size_t> rows) const {
  if (data.features() != features()) throw DataError("feature count does not match the model");
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = predict_row(data, rows[r]);
  return out;
}

std::vector<double> GamiModel::predict_probability(const Dataset& data) const {
  auto scores = predict(data);
  for (double& s : scores) s = sigmoid(s);
  return scores;
}

std::vector<std::pair<std::size_t, std::size_t>> GamiModel::selected_pair_union() const {
  std::set<std::pair<std::size_t, std::size_t>> all;
  for (const auto& r : rounds) all.insert(r.selected_pairs.begin(), r.selected_pairs.end());
  return {all.begin(), all.end()};
}

GamiModel fit(const Dataset& data, const BinMap& bins, const GamiConfig& config) {
  config.validate();
  const auto train = data.rows_with(SplitTag::train);
  const auto validation = data.rows_with(SplitTag::validation);
  if (train.empty()) throw UsageError("training split is empty");
  if (validation.empty()) throw UsageError("validation split is empty");
  if (config.loss.kind == LossKind::logloss) data.require_binary_response();

  GamiModel model;
  model.loss = config.loss;
  model.feature_names = data.feature_names();
  model.config = config;
  for (std::size_t f = 0; f < data.features(); ++f) model.bin_edges.push_back(bins.edges(f));

  std::vector<double> y_train(train.size());
  for (std::size_t r = 0; r < train.size(); ++r) y_train[r] = data.response()[train[r]];
  model.intercept = initial_score(config.loss, y_train);
  std::vector<double> scores(data.rows(), model.intercept);

  const TrainingFrame frame(data, bins, train, config.knots);
  auto resolve = [&](TreeParams p) {
    if (p.min_leaf == 0) p.min_leaf = default_min_leaf(train.size());
    return p;
  };
  BoostContext main_ctx{data, frame, validation, config.loss, resolve(config.main_tree), config.threads};
  BoostContext int_ctx{data, frame, validation, config.loss, resolve(config.interaction_tree),
                       config.threads};

  const std::size_t pair_count = data.features() * (data.features() - 1) / 2;
  FilterOptions filter_options;
  filter_options.q = std::min(config.q, pair_count);
  filter_options.subsample_cap = config.subsample_cap;
  filter_options.seed = config.seed;
  filter_options.threads = config.threads;
  filter_options.tree = int_ctx.tree;
  filter_options.knots = config.knots;

  auto append = [&](const StageResult& stage, std::size_t round, StageKind kind, double lr) {
    for (const auto& t : stage.trees) model.trees.push_back(ModelTree{t, lr, round, kind});
  };

  for (std::size_t round = 1; round <= config.rounds; ++round) {
    RoundSummary summary;
    const StageResult main = fit_main(main_ctx, scores, config.main_stage);
    append(main, round, StageKind::main, config.main_stage.learning_rate);
    summary.main_stop = main.stop_iteration;
    summary.main_trace = main.validation_trace;

    std::vector<std::pair<std::size_t, std::size_t>> oriented;
    if (filter_options.q > 0 && pair_count > 0) {
      FilterResult screened;
      if (train.size() > config.subsample_cap) {
        screened = filter_int(data, bins, train, config.loss, scores, filter_options);
      } else {
        std::vector<double> g(train.size());
        for (std::size_t r = 0; r < train.size(); ++r) g[r] = scores[train[r]];
        screened = filter_int(frame, derivatives(config.loss, y_train, g), filter_options);
      }
      oriented = screened.selected;
      for (std::size_t i = 0; i < filter_options.q; ++i) {
        summary.selected_pairs.emplace_back(screened.ranked[i].first, screened.ranked[i].second);
      }
    }
    const StageResult inter = fit_int(int_ctx, scores, config.interaction_stage, oriented);
    append(inter, round, StageKind::interaction, config.interaction_stage.learning_rate);
    summary.interaction_stop = inter.stop_iteration;
    summary.interaction_trace = inter.validation_trace;
    model.rounds.push_back(std::move(summary));

    if (main.stop_iteration == 0 && inter.stop_iteration == 0) break;
  }

  if (config.purify) model.effects = purify(model, data, train, config.knots);
  return model;
}

std::vector<TermImportance> term_importance(const GamiModel& model, const Dataset& data,
                                            std::span<const std::size_t> rows) {
  if (!model.effects) throw UsageError("term importance needs an effect store");
  if (rows.empty()) throw UsageError("importance needs at least one reference row");
  EffectStore store = *model.effects;
  refresh_importance(store, model.trees, data, rows);
  std::vector<TermImportance> out;
  for (const auto& m : store.mains) out.push_back({TermId::main(m.feature), m.importance});
  for (const auto& e : store.interactions) out.push_back({TermId::pair(e.first, e.second), e.importance});
  std::stable_sort(out.begin(), out.end(), [](const TermImportance& a, const TermImportance& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.term < b.term;
  });
  return out;
}

std::vector<TermImportance> main_importance(const std::vector<TermImportance>& all) {
  std::vector<TermImportance> out;
  for (const auto& t : all) {
    if (t.term.is_main()) out.push_back(t);
  }
  return out;
}

std::vector<TermImportance> interaction_importance(const std::vector<TermImportance>& all) {
  std::vector<TermImportance> out;
  for (const auto& t : all) {
    if (!t.term.is_main()) out.push_back(t);
  }
  return out;
}

}  // namespace gami
