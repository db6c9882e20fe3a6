#include "gami/spline.hpp"

#include <algorithm>

#include "gami/dataset.hpp"
#include "gami/error.hpp"

namespace gami {

SplineBasis::SplineBasis(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 3) throw UsageError("spline basis needs at least 3 knots");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw UsageError("spline knots must be strictly increasing");
  }
}

SplineBasis SplineBasis::fit(std::span<const double> values, std::size_t knots) {
  if (knots < 3) throw UsageError("spline basis needs at least 3 knots");
  if (values.empty()) throw UsageError("cannot place knots on empty data");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> placed;
  for (std::size_t k = 0; k < knots; ++k) {
    const double level = static_cast<double>(k) / static_cast<double>(knots - 1);
    const double q = sorted_quantile(sorted, level);
    if (placed.empty() || q > placed.back()) placed.push_back(q);
  }
  if (placed.size() < 3) {
    throw UsageError("fewer than 3 distinct knots; use a raw linear design");
  }
  return SplineBasis(std::move(placed));
}

SplineBasis::Support SplineBasis::locate(double x) const {
  const double lo = knots_.front();
  const double hi = knots_.back();
  const std::size_t last = knots_.size() - 1;
  if (!(x > lo)) return {0, 1.0};
  if (!(x < hi)) return {last - 1, 0.0};
  // knots_[i] <= x < knots_[i + 1]
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const double t = (x - knots_[i]) / (knots_[i + 1] - knots_[i]);
  return {i, 1.0 - t};
}

void SplineBasis::evaluate(double x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto s = locate(x);
  out[s.index] = s.weight;
  out[s.index + 1] = 1.0 - s.weight;
}

std::vector<double> SplineBasis::evaluate(double x) const {
  std::vector<double> out(knots_.size());
  evaluate(x, out);
  return out;
}

}  // namespace gami
