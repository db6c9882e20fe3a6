#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "gami/boost.hpp"
#include "gami/error.hpp"
#include "gami/filter.hpp"
#include "oracles.hpp"

using namespace gami;

namespace {

struct Problem {
  Dataset data;
  BinMap bins;
  std::vector<std::size_t> train, validation;
};

template <class Truth>
Problem make_problem(std::size_t n, std::size_t p, std::uint64_t seed, double noise, Truth truth) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  std::vector<double> y(n), row(p);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) row[j] = cols[j][i] = normal(rng);
    y[i] = truth(row) + noise * normal(rng);
  }
  Problem pr;
  pr.data = split(Dataset(std::move(cols), names, std::move(y)), {0.5, 0.25, 0.25}, seed);
  pr.bins = BinMap::build(pr.data, 256);
  pr.train = pr.data.rows_with(SplitTag::train);
  pr.validation = pr.data.rows_with(SplitTag::validation);
  return pr;
}

std::vector<double> mean_scores(const Problem& pr) {
  double m = 0.0;
  for (auto r : pr.train) m += pr.data.response()[r];
  return std::vector<double>(pr.data.rows(), m / static_cast<double>(pr.train.size()));
}

NewtonState state_for(const Problem& pr, const std::vector<double>& scores) {
  std::vector<double> y, g;
  for (auto r : pr.train) y.push_back(pr.data.response()[r]), g.push_back(scores[r]);
  return derivatives(LossSpec::squared(), y, g);
}

void check_closure(const FilterResult& res, std::size_t q) {
  REQUIRE(res.selected.size() == 2 * q);
  std::set<std::pair<std::size_t, std::size_t>> s(res.selected.begin(), res.selected.end());
  CHECK(s.size() == 2 * q);
  for (const auto& [a, b] : s) CHECK(s.count({b, a}) == 1);
  for (std::size_t i = 0; i < q; ++i) CHECK(s.count({res.ranked[i].first, res.ranked[i].second}) == 1);
}

}  // namespace

TEST_CASE("product truth ranks its pair first, matching brute-force tree SSEs") {
  auto pr = make_problem(2000, 5, 17, 0.5, [](const std::vector<double>& x) { return x[0] * x[1]; });
  const TrainingFrame frame(pr.data, pr.bins, pr.train, 5);
  const auto scores = mean_scores(pr);
  const auto st = state_for(pr, scores);
  FilterOptions opt;
  opt.q = 1;
  opt.tree = {2, 20, 1.0};
  const auto res = filter_int(frame, st, opt);
  REQUIRE(res.ranked.size() == 10);
  CHECK(res.ranked[0].first == 0);
  CHECK(res.ranked[0].second == 1);
  CHECK(res.rank_of(1, 0) == std::optional<std::size_t>(1));
  check_closure(res, 1);

  // Brute force over all pairs via raw-row grams.
  std::vector<std::tuple<double, std::size_t, std::size_t>> brute;
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t k = j + 1; k < 5; ++k) {
      auto sse = [&](std::size_t m, std::size_t s) {
        const auto spec = frame.interaction_spec(m, s, opt.tree);
        return fit_tree(accumulate_gram(pr.data, pr.bins, pr.train, spec, st.pseudo_response, st.hessian), spec,
                        pr.bins.edges(s))
            .sse();
      };
      const double f = sse(j, k), b = sse(k, j);
      brute.emplace_back(std::min(f, b), j, k);
      const auto it = std::find_if(res.ranked.begin(), res.ranked.end(),
                                   [&](const PairScore& p) { return p.first == j && p.second == k; });
      REQUIRE(it != res.ranked.end());
      CHECK(oracle::relative_error(it->sse_forward, f) <= 1e-9);
      CHECK(oracle::relative_error(it->sse_backward, b) <= 1e-9);
      CHECK(it->score == std::min(it->sse_forward, it->sse_backward));
    }
  }
  std::sort(brute.begin(), brute.end());
  for (std::size_t i = 0; i < brute.size(); ++i) {
    CHECK(res.ranked[i].first == std::get<1>(brute[i]));
    CHECK(res.ranked[i].second == std::get<2>(brute[i]));
  }
}

TEST_CASE("pair score is bounded by each orientation's root fit") {
  auto pr = make_problem(1500, 4, 23, 0.5,
                         [](const std::vector<double>& x) { return std::sin(x[0]) * x[2] + x[1] * x[3]; });
  const TrainingFrame frame(pr.data, pr.bins, pr.train, 5);
  const auto st = state_for(pr, mean_scores(pr));
  FilterOptions opt;
  opt.q = 3;
  opt.tree = {2, 20, 1.0};
  const auto res = filter_int(frame, st, opt);
  check_closure(res, 3);
  for (const auto& p : res.ranked) {
    auto root = [&](std::size_t m, std::size_t s) {
      auto params = opt.tree;
      params.max_depth = 0;
      const auto spec = frame.interaction_spec(m, s, params);
      return fit_tree(frame.accumulate(spec, st.pseudo_response, st.hessian, true), spec, frame.edges(s)).sse();
    };
    CHECK(p.score >= 0.0);
    CHECK(p.score <= p.sse_forward);
    CHECK(p.score <= p.sse_backward);
    CHECK(p.sse_forward <= root(p.first, p.second) * (1 + 1e-12));
    CHECK(p.sse_backward <= root(p.second, p.first) * (1 + 1e-12));
  }
  for (std::size_t i = 1; i < res.ranked.size(); ++i) CHECK(res.ranked[i - 1].score <= res.ranked[i].score);
}

TEST_CASE("FAST recovers sign times sign exactly") {
  std::vector<double> xa, xb, z, h;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int i = 0; i < 400; ++i) {
    // Symmetric samples so the median cut is exactly 0.
    const double a = u(rng) * (i % 2 ? 1 : -1), b = u(rng) * ((i / 2) % 2 ? 1 : -1);
    for (double sa : {1.0, -1.0}) {
      for (double sb : {1.0, -1.0}) {
        xa.push_back(sa * a), xb.push_back(sb * b);
        z.push_back((sa * a > 0 ? 1 : -1) * (sb * b > 0 ? 1 : -1));
        h.push_back(1.0);
      }
    }
  }
  const auto ga = fast_grid(xa, 3), gb = fast_grid(xb, 3);
  REQUIRE(std::find(ga.begin(), ga.end(), 0.0) != ga.end());
  REQUIRE(std::find(gb.begin(), gb.end(), 0.0) != gb.end());
  const auto fit = fast_pair_fit(xa, xb, ga, gb, z, h);
  CHECK(ga[fit.cut_a] == 0.0);
  CHECK(gb[fit.cut_b] == 0.0);
  CHECK(fit.sse == doctest::Approx(0.0).scale(1.0));
  CHECK(fit.means[0] == doctest::Approx(1.0));
  CHECK(fit.means[1] == doctest::Approx(-1.0));
  CHECK(fit.means[2] == doctest::Approx(-1.0));
  CHECK(fit.means[3] == doctest::Approx(1.0));
  const auto naive = oracle::naive_quadrants(xa, xb, ga, gb, z, h);
  CHECK(naive.cut_a == 0.0);
  CHECK(naive.cut_b == 0.0);
}

TEST_CASE("FAST cumulative sums match the naive quadrant search") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> w(0.1, 3.0);
  for (std::size_t n : {7u, 50u, 200u, 500u}) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> xa(n), xb(n), z(n), h(n);
      for (std::size_t i = 0; i < n; ++i) {
        xa[i] = std::round(normal(rng) * 3) / 3;  // ties on cuts
        xb[i] = normal(rng);
        z[i] = (xa[i] > 0.4 ? 1.0 : 0.0) * xb[i] + normal(rng);
        h[i] = rep % 2 ? w(rng) : 1.0;
      }
      for (std::size_t grid : {1u, 4u, 16u}) {
        const auto ga = fast_grid(xa, grid), gb = fast_grid(xb, grid);
        if (ga.empty() || gb.empty()) continue;
        const auto fit = fast_pair_fit(xa, xb, ga, gb, z, h);
        const auto naive = oracle::naive_quadrants(xa, xb, ga, gb, z, h);
        CHECK(std::abs(fit.sse - naive.sse) <= 1e-8 * std::max(1.0, naive.sse));
      }
    }
  }
}

TEST_CASE("FAST grid uses k/(grid+1) quantiles") {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i) v.push_back(i);
  const auto g = fast_grid(v, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(25.0));
  CHECK(g[1] == doctest::Approx(50.0));
  CHECK(g[2] == doctest::Approx(75.0));
  CHECK_THROWS_AS(fast_grid(v, 0), UsageError);
}

TEST_CASE("FAST filter on constant pseudo-response ties in pair order") {
  auto pr = make_problem(600, 4, 3, 0.0, [](const std::vector<double>&) { return 2.0; });
  std::vector<double> scores(pr.data.rows(), 2.0);
  FilterOptions opt;
  opt.q = 2;
  const auto res = fast_filter(pr.data, pr.train, LossSpec::squared(), scores, opt);
  REQUIRE(res.ranked.size() == 6);
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (const auto& p : res.ranked) {
    CHECK(p.score == 0.0);
    order.emplace_back(p.first, p.second);
  }
  CHECK(std::is_sorted(order.begin(), order.end()));
  check_closure(res, 2);
}

TEST_CASE("FAST filter ranks sign interaction first") {
  auto pr = make_problem(4000, 5, 8, 0.3, [](const std::vector<double>& x) {
    return (x[2] > 0 ? 1.0 : -1.0) * (x[4] > 0 ? 1.0 : -1.0);
  });
  FilterOptions opt;
  opt.q = 1;
  const auto res = fast_filter(pr.data, pr.train, LossSpec::squared(), mean_scores(pr), opt);
  CHECK(res.ranked[0].first == 2);
  CHECK(res.ranked[0].second == 4);
  check_closure(res, 1);
}

TEST_CASE("q larger than the pair count is rejected") {
  auto pr = make_problem(300, 3, 1, 0.5, [](const std::vector<double>& x) { return x[0]; });
  const TrainingFrame frame(pr.data, pr.bins, pr.train, 5);
  const auto scores = mean_scores(pr);
  FilterOptions opt;
  opt.q = 4;
  CHECK_THROWS_AS(filter_int(frame, state_for(pr, scores), opt), UsageError);
  CHECK_THROWS_AS(fast_filter(pr.data, pr.train, LossSpec::squared(), scores, opt), UsageError);
  opt.q = 3;
  CHECK(filter_int(frame, state_for(pr, scores), opt).selected.size() == 6);
}

TEST_CASE("subsampled screening is deterministic for a seed") {
  auto pr = make_problem(4000, 5, 31, 0.5, [](const std::vector<double>& x) { return x[1] * x[3]; });
  const auto scores = mean_scores(pr);
  FilterOptions opt;
  opt.q = 2;
  opt.subsample_cap = 700;
  opt.seed = 5;
  opt.tree = {2, 20, 1.0};
  const auto a = filter_int(pr.data, pr.bins, pr.train, LossSpec::squared(), scores, opt);
  opt.threads = 3;
  const auto b = filter_int(pr.data, pr.bins, pr.train, LossSpec::squared(), scores, opt);
  REQUIRE(a.ranked.size() == b.ranked.size());
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    CHECK(a.ranked[i].first == b.ranked[i].first);
    CHECK(a.ranked[i].second == b.ranked[i].second);
    CHECK(a.ranked[i].score == b.ranked[i].score);
  }
  CHECK(a.selected == b.selected);

  const auto s1 = subsample_rows(pr.train, 700, 5);
  CHECK(s1 == subsample_rows(pr.train, 700, 5));
  CHECK(s1.size() == 700);
  CHECK(std::is_sorted(s1.begin(), s1.end()));
  CHECK(std::adjacent_find(s1.begin(), s1.end()) == s1.end());
  for (auto r : s1) CHECK(std::binary_search(pr.train.begin(), pr.train.end(), r));
  CHECK(s1 != subsample_rows(pr.train, 700, 6));
  CHECK(subsample_rows(pr.train, 1'000'000, 5) == pr.train);
}

TEST_CASE("additive truth leaves no dominant pair after the main stage") {
  for (std::uint64_t seed : {1u, 2u}) {
    auto pr = make_problem(50000, 6, seed, 0.5, [](const std::vector<double>& x) {
      return x[0] + std::sin(x[1]) + 0.5 * x[2] * x[2] - std::abs(x[3]);
    });
    const TrainingFrame frame(pr.data, pr.bins, pr.train, 5);
    const TreeParams params{2, default_min_leaf(pr.train.size()), 1.0};
    const BoostContext ctx{pr.data, frame, pr.validation, LossSpec::squared(), params, 1};
    auto scores = mean_scores(pr);
    fit_main(ctx, scores, StageConfig{});
    FilterOptions opt;
    opt.q = 1;
    opt.tree = params;
    const auto res = filter_int(frame, state_for(pr, scores), opt);
    std::vector<double> s;
    for (const auto& p : res.ranked) s.push_back(p.score);
    std::sort(s.begin(), s.end());
    const double median = 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
    // Lower SSE is stronger; compare the spread of the strongest pair to the median.
    CHECK(median / s.front() < 1.1);
    CHECK(s.back() / s.front() < 1.1);
  }
}
