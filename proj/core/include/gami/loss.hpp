#pragma once

#include <span>
#include <string>
#include <vector>

namespace gami {

enum class LossKind { squared, logloss };

// Squared loss uses the 0.5 * (y - g)^2 convention so its hessian is exactly 1.
// For logloss the score g is a log-odds and the hessian is floored.
struct LossSpec {
  LossKind kind = LossKind::squared;
  double hessian_floor = 1e-6;

  static LossSpec squared() { return {LossKind::squared, 1e-6}; }
  static LossSpec logloss(double floor = 1e-6) { return {LossKind::logloss, floor}; }
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// Per-row gradient, hessian and pseudo-response z = -G / H.
struct NewtonState {
  std::vector<double> gradient;
  std::vector<double> hessian;
  std::vector<double> pseudo_response;
  // True when every hessian is exactly 1, which lets tree fits reuse gram matrices.
  bool unit_hessian = false;

  std::size_t size() const { return pseudo_response.size(); }
};

double loss_value(const LossSpec& loss, double y, double g);

NewtonState derivatives(const LossSpec& loss, std::span<const double> y, std::span<const double> g);

// Unweighted mean of the training-convention loss.
double mean_loss(const LossSpec& loss, std::span<const double> y, std::span<const double> g);

// Mean of y for squared loss, logit of mean(y) for logloss.
double initial_score(const LossSpec& loss, std::span<const double> y);

double sigmoid(double g);

}  // namespace gami
