#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gami {

inline constexpr std::size_t kDefaultKnots = 5;

// Degree-1 B-spline (hat function) basis on strictly increasing knots,
// boundary knots included. Dimension equals the knot count.
class SplineBasis {
 public:
  SplineBasis() = default;
  explicit SplineBasis(std::vector<double> knots);

  // Knots at training quantiles 0, 1/(K-1), ..., 1. Duplicate quantiles are
  // collapsed; throws UsageError if fewer than 3 distinct knots remain.
  static SplineBasis fit(std::span<const double> values, std::size_t knots = kDefaultKnots);

  std::size_t size() const { return knots_.size(); }
  const std::vector<double>& knots() const { return knots_; }

  // Index of the first of the (at most) two nonzero hat functions at x and its
  // value; the second is 1 - weight at index + 1. x is clamped to the knot range.
  struct Support {
    std::size_t index;
    double weight;
  };
  Support locate(double x) const;

  // Dense row of basis values.
  void evaluate(double x, std::span<double> out) const;
  std::vector<double> evaluate(double x) const;

  double combine(std::span<const double> coefficients, double x) const {
    const auto s = locate(x);
    return s.weight * coefficients[s.index] + (1.0 - s.weight) * coefficients[s.index + 1];
  }

 private:
  std::vector<double> knots_;
};

}  // namespace gami
