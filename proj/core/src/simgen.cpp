#include "gami/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gami/error.hpp"
#include "gami/loss.hpp"
#include "gami/random.hpp"

namespace gami::sim {

namespace {

// Random streams: one per feature block, one for noise, one for labels.
constexpr std::uint64_t kStreamBlockA = 1;
constexpr std::uint64_t kStreamBlockB = 2;
constexpr std::uint64_t kStreamNoise = 3;
constexpr std::uint64_t kStreamLabels = 4;

double positive(double x) { return x > 0.0 ? x : 0.0; }
double indicator(bool b) { return b ? 1.0 : 0.0; }

// Terms shared by every model: linear, quadratic and hinge main effects.
double additive_part(std::span<const double> x) {
  double g = 0.0;
  for (std::size_t j = 0; j < 5; ++j) g += x[j];
  for (std::size_t j = 5; j < 8; ++j) g += 0.5 * x[j] * x[j];
  for (std::size_t j = 8; j < 10; ++j) g += x[j] * indicator(x[j] > 0.0);
  return g;
}

}  // namespace

void SimConfig::validate() const {
  if (model_id < 1 || model_id > 4) throw UsageError("model id must be 1..4");
  if (n == 0) throw UsageError("sample size must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw UsageError("rho must lie in [0, 1)");
  if (!(noise_sd >= 0.0)) throw UsageError("noise sd must be nonnegative");
  if (!(truncation > 0.0)) throw UsageError("truncation bound must be positive");
}

double clip(double x, double lo, double hi) {
  if (lo > hi) throw UsageError("clip bounds out of order");
  return std::min(std::max(x, lo), hi);
}

TruthOracle::TruthOracle(int model_id) : model_id_(model_id) {
  switch (model_id) {
    case 1:
      for (std::size_t j = 0; j < 10; ++j) {
        for (std::size_t k = j + 1; k < 10; ++k) pairs_.emplace_back(j, k);
      }
      break;
    case 2:
      pairs_ = {{0, 1}, {0, 2}, {3, 4}, {3, 5}, {4, 5}, {6, 7}, {6, 8}, {7, 8}};
      break;
    case 3:
      pairs_ = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
      break;
    case 4:
      pairs_ = {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}};
      break;
    default:
      throw UsageError("model id must be 1..4");
  }
}

std::vector<std::size_t> TruthOracle::main_features() const {
  std::vector<std::size_t> out(kActiveFeatures);
  for (std::size_t j = 0; j < kActiveFeatures; ++j) out[j] = j;
  return out;
}

double TruthOracle::operator()(std::span<const double> x) const {
  using std::numbers::pi;
  double g = additive_part(x);
  switch (model_id_) {
    case 1:
      for (std::size_t j = 0; j < 10; ++j) {
        for (std::size_t k = j + 1; k < 10; ++k) g += 0.2 * x[j] * x[k];
      }
      break;
    case 2:
      g += 0.25 * x[0] * x[1];
      g += 0.25 * x[0] * x[2] * x[2];
      g += 0.25 * x[3] * x[3] * x[4] * x[4];
      g += std::exp(x[3] * x[5] / 3.0);
      g += x[4] * x[5] * indicator(x[4] > 0.0) * indicator(x[5] > 0.0);
      g += clip(x[6] + x[7], -1.0, 0.0);
      g += clip(x[6] * x[8], -1.0, 1.0);
      g += indicator(x[7] > 0.0) * indicator(x[8] > 0.0);
      break;
    case 3:
      g += 0.25 * x[0] * x[0] * x[1] * x[1];
      g += 2.0 * positive(x[2] - 0.5) * positive(x[3] - 0.5);
      g += 0.5 * std::sin(pi * x[4]) * std::sin(pi * x[5]);
      g += 0.5 * std::sin(pi * (x[6] + x[7]));
      break;
    case 4:
      g += x[0] * x[1] + x[0] * x[2] + x[1] * x[2] + 0.5 * x[0] * x[1] * x[2];
      g += x[3] * x[4] + x[3] * x[5] + x[4] * x[5] + 0.5 * indicator(x[3] > 0.0) * x[4] * x[5];
      break;
    default:
      break;
  }
  return g;
}

std::vector<std::vector<double>> draw_features(const SimConfig& config) {
  config.validate();
  std::vector<std::vector<double>> cols(kFeatureCount, std::vector<double>(config.n));
  const double shared = std::sqrt(config.rho);
  const double own = std::sqrt(1.0 - config.rho);
  // x_j = sqrt(rho) z0 + sqrt(1 - rho) z_j within each block; blocks independent.
  auto fill_block = [&](std::uint64_t stream, std::size_t first, std::size_t last) {
    RandomStream rng(config.seed, stream);
    for (std::size_t i = 0; i < config.n; ++i) {
      const double z0 = rng.gaussian();
      for (std::size_t j = first; j < last; ++j) cols[j][i] = shared * z0 + own * rng.gaussian();
    }
  };
  fill_block(kStreamBlockA, 0, 20);
  fill_block(kStreamBlockB, 20, 30);
  return cols;
}

double calibrate_intercept(std::span<const double> signal, double tolerance) {
  if (signal.empty()) throw UsageError("cannot calibrate on an empty sample");
  auto mean_prob = [&](double b0) {
    double s = 0.0;
    for (double g : signal) s += sigmoid(b0 + g);
    return s / static_cast<double>(signal.size());
  };
  const auto [mn, mx] = std::minmax_element(signal.begin(), signal.end());
  double lo = -*mx - 50.0;
  double hi = -*mn + 50.0;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double p = mean_prob(mid);
    if (std::abs(p - 0.5) <= tolerance) break;
    if (p < 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

Simulation generate(const SimConfig& config) {
  auto cols = draw_features(config);
  for (auto& col : cols) {
    for (double& v : col) v = std::clamp(v, -config.truncation, config.truncation);
  }
  TruthOracle truth(config.model_id);
  std::vector<double> signal(config.n);
  std::vector<double> row(kFeatureCount);
  for (std::size_t i = 0; i < config.n; ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) row[j] = cols[j][i];
    signal[i] = truth(row);
  }

  std::vector<double> y(config.n);
  double intercept = 0.0;
  if (config.response == Response::continuous) {
    RandomStream noise(config.seed, kStreamNoise);
    for (std::size_t i = 0; i < config.n; ++i) y[i] = signal[i] + config.noise_sd * noise.gaussian();
  } else {
    intercept = calibrate_intercept(signal);
    RandomStream labels(config.seed, kStreamLabels);
    for (std::size_t i = 0; i < config.n; ++i) {
      y[i] = labels.uniform() < sigmoid(intercept + signal[i]) ? 1.0 : 0.0;
    }
  }

  std::vector<std::string> names;
  for (std::size_t j = 0; j < kFeatureCount; ++j) names.push_back("x" + std::to_string(j + 1));
  return Simulation{Dataset(std::move(cols), std::move(names), std::move(y)), truth,
                    std::move(signal), intercept};
}

}  // namespace gami::sim
