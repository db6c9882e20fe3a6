#include <cmath>
#include <random>

#include "doctest.h"
#include "gami/error.hpp"
#include "gami/loss.hpp"

using namespace gami;

namespace {
// Reference losses written from their definitions.
double squared_ref(double y, double g) { return 0.5 * (y - g) * (y - g); }
double logloss_ref(double y, double g) {
  const double p = 1.0 / (1.0 + std::exp(-g));
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}
}  // namespace

TEST_CASE("squared loss derivatives") {
  const std::vector<double> y{1.0}, g{0.3};
  const auto s = derivatives(LossSpec::squared(), y, g);
  CHECK(s.gradient[0] == doctest::Approx(-0.7));
  CHECK(s.hessian[0] == 1.0);
  CHECK(s.pseudo_response[0] == doctest::Approx(0.7));
  CHECK(s.unit_hessian);
  // The pseudo-response is the plain residual.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> yy(100), gg(100);
  for (std::size_t i = 0; i < 100; ++i) yy[i] = n(rng), gg[i] = n(rng);
  const auto t = derivatives(LossSpec::squared(), yy, gg);
  for (std::size_t i = 0; i < 100; ++i) CHECK(t.pseudo_response[i] == yy[i] - gg[i]);
}

TEST_CASE("logloss derivatives") {
  const auto s = derivatives(LossSpec::logloss(), std::vector<double>{1.0}, std::vector<double>{0.0});
  CHECK(s.gradient[0] == doctest::Approx(-0.5));
  CHECK(s.hessian[0] == doctest::Approx(0.25));
  CHECK(s.pseudo_response[0] == doctest::Approx(2.0));
  CHECK(!s.unit_hessian);
  const auto f = derivatives(LossSpec::logloss(), std::vector<double>{0.0}, std::vector<double>{20.0});
  CHECK(f.hessian[0] == 1e-6);
  CHECK(std::isfinite(f.pseudo_response[0]));
  CHECK(f.pseudo_response[0] == -f.gradient[0] / f.hessian[0]);
  CHECK_THROWS_AS(derivatives(LossSpec::squared(), std::vector<double>{0.0}, std::vector<double>{NAN}),
                  NumericalError);
}

TEST_CASE("mean loss") {
  CHECK(mean_loss(LossSpec::squared(), std::vector<double>{1, 1}, std::vector<double>{1, 1}) == 0.0);
  CHECK(mean_loss(LossSpec::squared(), std::vector<double>{0, 2}, std::vector<double>{1, 1}) == 0.5);
  CHECK(mean_loss(LossSpec::logloss(), std::vector<double>{1}, std::vector<double>{0}) ==
        doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(mean_loss(LossSpec::squared(), std::vector<double>{}, std::vector<double>{}), UsageError);
  // Stable for extreme scores.
  CHECK(mean_loss(LossSpec::logloss(), std::vector<double>{0}, std::vector<double>{800}) ==
        doctest::Approx(800.0));
  std::vector<double> y{1, 0, 1, 1}, g{0.2, -1, 3, 0.5};
  std::vector<double> y2{1, 1, 0, 1}, g2{3, 0.5, -1, 0.2};
  CHECK(mean_loss(LossSpec::logloss(), y, g) == doctest::Approx(mean_loss(LossSpec::logloss(), y2, g2)));
}

TEST_CASE("initial score") {
  CHECK(initial_score(LossSpec::squared(), std::vector<double>{1, 2, 3}) == 2.0);
  CHECK(initial_score(LossSpec::logloss(), std::vector<double>{0, 1}) == 0.0);
  CHECK(initial_score(LossSpec::logloss(), std::vector<double>{1, 0, 0, 0}) ==
        doctest::Approx(std::log(1.0 / 3.0)));
  CHECK_THROWS_AS(initial_score(LossSpec::logloss(), std::vector<double>{1, 1}), DataError);
  CHECK_THROWS_AS(initial_score(LossSpec::logloss(), std::vector<double>{0, 0}), DataError);
  CHECK_THROWS_AS(initial_score(LossSpec::squared(), std::vector<double>{}), UsageError);
}

TEST_CASE("derivatives agree with central differences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> score(-4.0, 4.0);
  std::normal_distribution<double> response;
  const double h = 1e-5;
  for (int i = 0; i < 1000; ++i) {
    const double g = score(rng);
    const double yc = response(rng);
    const auto sq = derivatives(LossSpec::squared(), std::vector<double>{yc}, std::vector<double>{g});
    const double fd_sq = (squared_ref(yc, g + h) - squared_ref(yc, g - h)) / (2 * h);
    CHECK(std::abs(fd_sq - sq.gradient[0]) <= 1e-6 * std::max(1e-3, std::abs(sq.gradient[0])));
    auto grad_sq = [&](double s) { return s - yc; };
    const double fd2_sq = (grad_sq(g + h) - grad_sq(g - h)) / (2 * h);
    CHECK(std::abs(fd2_sq - sq.hessian[0]) <= 1e-6);

    const double yb = i % 2;
    const auto lg = derivatives(LossSpec::logloss(), std::vector<double>{yb}, std::vector<double>{g});
    const double fd = (logloss_ref(yb, g + h) - logloss_ref(yb, g - h)) / (2 * h);
    CHECK(std::abs(fd - lg.gradient[0]) <= 1e-6 * std::abs(lg.gradient[0]));
    // Second difference of the gradient (the loss itself loses too many digits).
    auto grad = [&](double s) { return 1.0 / (1.0 + std::exp(-s)) - yb; };
    const double fd2 = (grad(g + h) - grad(g - h)) / (2 * h);
    CHECK(std::abs(fd2 - lg.hessian[0]) <= 1e-6 * lg.hessian[0]);
  }
}
