#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gami/modeltree.hpp"

namespace gami {

enum class StageKind : std::uint8_t { main, interaction };

// A model term: a main effect (first == second) or an unordered pair (first < second).
struct TermId {
  std::size_t first = 0;
  std::size_t second = 0;

  static TermId main(std::size_t j) { return {j, j}; }
  static TermId pair(std::size_t a, std::size_t b) { return a < b ? TermId{a, b} : TermId{b, a}; }
  bool is_main() const { return first == second; }
  friend auto operator<=>(const TermId&, const TermId&) = default;
};

std::string term_label(const TermId& term, const std::vector<std::string>& names);

// A boosted tree together with its learning-rate scale and provenance.
struct ModelTree {
  FittedTree tree;
  double scale = 1.0;
  std::size_t round = 0;
  StageKind stage = StageKind::main;

  TermId term() const {
    const auto& s = tree.spec();
    return s.model_var == s.split_var ? TermId::main(s.model_var)
                                      : TermId::pair(s.model_var, s.split_var);
  }
  double value(double model_value, double split_value) const {
    return scale * tree.predict(model_value, split_value);
  }
};

}  // namespace gami
