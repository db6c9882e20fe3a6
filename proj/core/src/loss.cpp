#include "gami/loss.hpp"

#include <cmath>

#include "gami/error.hpp"

namespace gami {

std::string to_string(LossKind kind) {
  return kind == LossKind::squared ? "squared" : "logloss";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "squared") return LossKind::squared;
  if (name == "logloss") return LossKind::logloss;
  throw UsageError("unknown loss '" + name + "'");
}

double sigmoid(double g) {
  if (g >= 0.0) return 1.0 / (1.0 + std::exp(-g));
  const double e = std::exp(g);
  return e / (1.0 + e);
}

double loss_value(const LossSpec& loss, double y, double g) {
  if (loss.kind == LossKind::squared) {
    const double r = y - g;
    return 0.5 * r * r;
  }
  // log(1 + exp(g)) - y * g, computed without overflow.
  const double softplus = g > 0.0 ? g + std::log1p(std::exp(-g)) : std::log1p(std::exp(g));
  return softplus - y * g;
}

NewtonState derivatives(const LossSpec& loss, std::span<const double> y, std::span<const double> g) {
  if (y.size() != g.size()) throw UsageError("response and score lengths differ");
  if (loss.kind == LossKind::logloss && !(loss.hessian_floor > 0.0)) {
    throw UsageError("hessian floor must be positive");
  }
  const std::size_t n = y.size();
  NewtonState s;
  s.gradient.resize(n);
  s.hessian.resize(n);
  s.pseudo_response.resize(n);
  s.unit_hessian = loss.kind == LossKind::squared;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(g[i])) throw NumericalError("non-finite score at row " + std::to_string(i));
    if (loss.kind == LossKind::squared) {
      s.gradient[i] = g[i] - y[i];
      s.hessian[i] = 1.0;
      s.pseudo_response[i] = y[i] - g[i];
    } else {
      const double p = sigmoid(g[i]);
      const double h = std::max(p * (1.0 - p), loss.hessian_floor);
      s.gradient[i] = p - y[i];
      s.hessian[i] = h;
      s.pseudo_response[i] = -s.gradient[i] / h;
    }
  }
  return s;
}

double mean_loss(const LossSpec& loss, std::span<const double> y, std::span<const double> g) {
  if (y.empty()) throw UsageError("mean loss of empty vector");
  if (y.size() != g.size()) throw UsageError("response and score lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += loss_value(loss, y[i], g[i]);
  return total / static_cast<double>(y.size());
}

double initial_score(const LossSpec& loss, std::span<const double> y) {
  if (y.empty()) throw UsageError("initial score of empty response");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  if (loss.kind == LossKind::squared) return mean;
  if (!(mean > 0.0 && mean < 1.0)) {
    throw DataError("binary response is all 0 or all 1; logit undefined");
  }
  return std::log(mean / (1.0 - mean));
}

}  // namespace gami
