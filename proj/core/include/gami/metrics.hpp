#pragma once

#include <span>

namespace gami {

// Mean of (y - yhat)^2.
double mse(std::span<const double> y, std::span<const double> prediction);

// Area under the ROC curve of scores against 0/1 labels (Mann-Whitney, ties
// count one half). Throws UsageError when only one class is present.
double auc(std::span<const double> y, std::span<const double> score);

// Mean binary cross-entropy of log-odds scores.
double mean_logloss(std::span<const double> y, std::span<const double> score);

}  // namespace gami
