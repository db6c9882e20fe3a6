#include "gami/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "gami/error.hpp"
#include "gami/loss.hpp"

namespace gami {

namespace {
void check_sizes(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("metric inputs differ in length");
  if (a.empty()) throw UsageError("metric of an empty vector");
}
}  // namespace

double mse(std::span<const double> y, std::span<const double> prediction) {
  check_sizes(y, prediction);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - prediction[i]) * (y[i] - prediction[i]);
  return s / static_cast<double>(y.size());
}

double auc(std::span<const double> y, std::span<const double> score) {
  check_sizes(y, score);
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  // Sum of midranks of the positives.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && score[order[j]] == score[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (y[order[k]] == 1.0) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = y.size() - positives;
  if (positives == 0 || negatives == 0) throw UsageError("AUC needs both classes");
  const double np = static_cast<double>(positives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double mean_logloss(std::span<const double> y, std::span<const double> score) {
  check_sizes(y, score);
  return mean_loss(LossSpec::logloss(), y, score);
}

}  // namespace gami
