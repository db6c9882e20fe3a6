#include "gami/effects.hpp"

#include <algorithm>
#include <map>

#include "gami/error.hpp"

namespace gami {

std::string term_label(const TermId& term, const std::vector<std::string>& names) {
  auto name = [&](std::size_t j) {
    return j < names.size() ? names[j] : "f" + std::to_string(j);
  };
  if (term.is_main()) return name(term.first);
  return name(term.first) + ":" + name(term.second);
}

void Correction::add(const Correction& other, double sign) {
  if (other.empty()) return;
  if (empty()) {
    kind = other.kind;
    basis = other.basis;
    coef.assign(other.coef.size(), 0.0);
  }
  if (kind != other.kind || coef.size() != other.coef.size() ||
      (basis && other.basis && basis->knots() != other.basis->knots())) {
    throw UsageError("corrections on different bases cannot be combined");
  }
  for (std::size_t i = 0; i < coef.size(); ++i) coef[i] += sign * other.coef[i];
}

double EffectStore::main_value(const MainEffect& effect, std::span<const ModelTree> trees,
                               double x) const {
  double v = 0.0;
  for (std::size_t t : effect.trees) v += trees[t].value(x, x);
  return v + effect.correction.value(x) + effect.offset;
}

double EffectStore::interaction_raw_value(const InteractionEffect& effect,
                                          std::span<const ModelTree> trees, double x_first,
                                          double x_second) const {
  double v = 0.0;
  for (std::size_t t : effect.trees) {
    const auto& tree = trees[t];
    if (tree.tree.spec().model_var == effect.first) {
      v += tree.value(x_first, x_second);
    } else {
      v += tree.value(x_second, x_first);
    }
  }
  return v;
}

double EffectStore::interaction_value(const InteractionEffect& effect, std::span<const ModelTree> trees,
                                      double x_first, double x_second) const {
  return interaction_raw_value(effect, trees, x_first, x_second) -
         effect.first_correction.value(x_first) - effect.second_correction.value(x_second) +
         effect.offset;
}

double EffectStore::predict_row(std::span<const ModelTree> trees, const Dataset& data,
                                std::size_t row) const {
  double v = intercept;
  for (const auto& m : mains) v += main_value(m, trees, data.at(row, m.feature));
  for (const auto& e : interactions) {
    v += interaction_value(e, trees, data.at(row, e.first), data.at(row, e.second));
  }
  return v;
}

MainEffect* EffectStore::find_main(std::size_t feature) {
  for (auto& m : mains) {
    if (m.feature == feature) return &m;
  }
  return nullptr;
}

const MainEffect* EffectStore::find_main(std::size_t feature) const {
  for (const auto& m : mains) {
    if (m.feature == feature) return &m;
  }
  return nullptr;
}

const InteractionEffect* EffectStore::find_interaction(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  for (const auto& e : interactions) {
    if (e.first == a && e.second == b) return &e;
  }
  return nullptr;
}

EffectStore collect_effects(std::span<const ModelTree> trees, double intercept) {
  std::map<TermId, std::vector<std::size_t>> groups;
  for (std::size_t t = 0; t < trees.size(); ++t) groups[trees[t].term()].push_back(t);
  EffectStore store;
  store.intercept = intercept;
  for (auto& [term, ids] : groups) {
    if (term.is_main()) {
      MainEffect m;
      m.feature = term.first;
      m.trees = std::move(ids);
      store.mains.push_back(std::move(m));
    } else {
      InteractionEffect e;
      e.first = term.first;
      e.second = term.second;
      e.trees = std::move(ids);
      store.interactions.push_back(std::move(e));
    }
  }
  return store;
}

}  // namespace gami
