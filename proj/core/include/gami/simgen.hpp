#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gami/dataset.hpp"

namespace gami::sim {

enum class Response { continuous, binary };

inline constexpr std::size_t kFeatureCount = 30;
inline constexpr std::size_t kActiveFeatures = 10;

struct SimConfig {
  int model_id = 1;
  std::size_t n = 50'000;
  double rho = 0.0;
  Response response = Response::continuous;
  std::uint64_t seed = 1;
  double noise_sd = 0.5;
  double truncation = 2.5;

  void validate() const;
};

// The generating function of one benchmark model.
class TruthOracle {
 public:
  explicit TruthOracle(int model_id);

  int model_id() const { return model_id_; }
  // `x` holds x1..x30 at indices 0..29.
  double operator()(std::span<const double> x) const;
  // 0-based indices of the features with a main effect (x1..x10).
  std::vector<std::size_t> main_features() const;
  // 0-based unordered pairs (j < k) appearing in an interaction term.
  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }

 private:
  int model_id_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

struct Simulation {
  Dataset data;
  TruthOracle truth;
  // g(x) per row, and for binary data the calibrated intercept beta0.
  std::vector<double> signal;
  double intercept = 0.0;
};

double clip(double x, double lo, double hi);

// Untruncated equi-correlated draws for the two feature blocks, n x 30 column
// major. Exposed so correlation can be checked before truncation.
std::vector<std::vector<double>> draw_features(const SimConfig& config);

Simulation generate(const SimConfig& config);

// beta0 with mean(sigmoid(beta0 + g)) = 0.5 within `tolerance`, by bisection.
double calibrate_intercept(std::span<const double> signal, double tolerance = 1e-4);

}  // namespace gami::sim
