#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gami/error.hpp"
#include "gami/modeltree.hpp"
#include "oracles.hpp"

using namespace gami;

namespace {

struct Instance {
  std::vector<double> xm, xs, z, h;
  Dataset data;
  BinMap bins;
  std::vector<std::size_t> rows;
};

Instance make_instance(std::size_t n, std::uint64_t seed, bool weighted, bool coarse) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(0.2, 2.0);
  Instance in;
  for (std::size_t i = 0; i < n; ++i) {
    double a = normal(rng), b = normal(rng);
    if (coarse) b = std::round(b * 4.0) / 4.0;  // many ties in the split variable
    in.xm.push_back(a);
    in.xs.push_back(b);
    in.z.push_back(std::sin(2 * a) * (b > 0.3 ? 1.5 : -0.5) + 0.8 * std::abs(b) + 0.3 * normal(rng));
    in.h.push_back(weighted ? uni(rng) : 1.0);
  }
  in.data = Dataset({in.xm, in.xs}, {"m", "s"}, in.z);
  in.bins = BinMap::build(in.data, 256);
  in.rows.resize(n);
  std::iota(in.rows.begin(), in.rows.end(), 0);
  return in;
}

void compare_with_oracle(const FittedTree& tree, const std::vector<oracle::Node>& ref) {
  const auto& nodes = tree.nodes();
  REQUIRE(nodes.size() == ref.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    CHECK(nodes[i].left == ref[i].left);
    CHECK(nodes[i].right == ref[i].right);
    CHECK(nodes[i].rows == ref[i].rows);
    if (!nodes[i].leaf()) CHECK(nodes[i].threshold == ref[i].threshold);
    CHECK(oracle::vector_relative_error(nodes[i].beta, ref[i].beta) <= 1e-8);
    CHECK(oracle::relative_error(nodes[i].sse, ref[i].sse) <= 1e-8);
  }
}

}  // namespace

TEST_CASE("single-bin gram of a raw linear design") {
  const std::vector<double> x{0.5, -1.0, 2.0, 3.5}, z{1.0, 2.0, -1.0, 0.25};
  const Dataset d({x}, {"x"}, z);
  BinMap bins({{}}, 4);
  bins.assign(d);
  const TreeSpec spec{0, 0, Design::raw_linear(x), {0, 1, 0.0}};
  const std::vector<std::size_t> rows{0, 1, 2, 3};
  const std::vector<double> h(4, 1.0);
  const auto g = accumulate_gram(d, bins, rows, spec, z, h);
  REQUIRE(g.bins == 1);
  double sx = 0, sxx = 0, sz = 0, sxz = 0;
  for (int i = 0; i < 4; ++i) sx += x[i], sxx += x[i] * x[i], sz += z[i], sxz += x[i] * z[i];
  CHECK(g.cross == std::vector<double>{4.0, sx, sx, sxx});
  CHECK(g.moment == std::vector<double>{sz, sxz});
}

TEST_CASE("bin grams add up to the full gram") {
  auto in = make_instance(150, 4, true, false);
  const TreeSpec spec{0, 1, Design::spline(in.xm, 5), {2, 5, 1.0}};
  const auto g = accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h);
  std::vector<double> total(g.dim * g.dim, 0.0);
  for (std::size_t b = 0; b < g.bins; ++b) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += g.cross_at(b)[k];
  }
  std::vector<double> dense(g.dim * g.dim, 0.0);
  for (std::size_t i = 0; i < in.xm.size(); ++i) {
    const auto d = oracle::hat_row(spec.design.basis().knots(), in.xm[i]);
    for (std::size_t a = 0; a < g.dim; ++a) {
      for (std::size_t c = 0; c < g.dim; ++c) dense[a * g.dim + c] += in.h[i] * d[a] * d[c];
    }
  }
  CHECK(oracle::vector_relative_error(total, dense) <= 1e-12);
  CHECK(std::accumulate(g.count.begin(), g.count.end(), std::size_t{0}) == 150);
}

TEST_CASE("design penalties are training variances of the columns") {
  auto in = make_instance(200, 9, false, false);
  const auto lin = Design::raw_linear(in.xm);
  CHECK(lin.penalty()[0] == 0.0);
  CHECK(lin.penalty()[1] == doctest::Approx(oracle::population_variance(in.xm)).epsilon(1e-12));
  const auto spl = Design::spline(in.xm, 5);
  for (std::size_t k = 0; k < spl.dim(); ++k) {
    std::vector<double> col;
    for (double x : in.xm) col.push_back(oracle::hat(spl.basis().knots(), k, x));
    CHECK(spl.penalty()[k] == doctest::Approx(oracle::population_variance(col)).epsilon(1e-10));
  }
}

TEST_CASE("binned fits match dense per-node ridge solves") {
  for (std::size_t n : {60u, 120u, 200u}) {
    for (bool weighted : {false, true}) {
      for (bool coarse : {false, true}) {
        auto in = make_instance(n, 100 + n + weighted * 7 + coarse * 13, weighted, coarse);
        const auto edges = oracle::midpoints(in.xs);
        REQUIRE(in.bins.edges(1) == edges);
        const std::vector<double> lin_pen{0.0, oracle::population_variance(in.xm)};

        for (double ridge : {0.0, 1.0}) {
          const TreeSpec spec{0, 1, Design::raw_linear(in.xm), {2, 8, ridge}};
          const auto tree = fit_tree(accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h), spec, edges);
          const auto ref = oracle::dense_tree(
              in.xm, in.xs, in.z, in.h, [](double x) { return std::vector<double>{1.0, x}; }, lin_pen, ridge, 8,
              2, edges);
          compare_with_oracle(tree, ref);
        }

        const auto spline = Design::spline(in.xm, 5);
        const auto knots = spline.basis().knots();
        std::vector<double> spl_pen;
        for (std::size_t k = 0; k < knots.size(); ++k) {
          std::vector<double> col;
          for (double x : in.xm) col.push_back(oracle::hat(knots, k, x));
          spl_pen.push_back(oracle::population_variance(col));
        }
        for (int depth : {0, 1, 2, 3}) {
          const TreeSpec spec{0, 1, spline, {depth, 6, 1.0}};
          const auto tree = fit_tree(accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h), spec, edges);
          const auto ref = oracle::dense_tree(
              in.xm, in.xs, in.z, in.h, [&](double x) { return oracle::hat_row(knots, x); }, spl_pen, 1.0, 6,
              depth, edges);
          compare_with_oracle(tree, ref);
          CHECK(tree.depth() <= depth);
        }

        // Main-effect tree: split and model on the same variable.
        const auto main_edges = oracle::midpoints(in.xm);
        const TreeSpec main{0, 0, Design::raw_linear(in.xm), {2, 8, 1.0}};
        const auto tree = fit_tree(accumulate_gram(in.data, in.bins, in.rows, main, in.z, in.h), main, main_edges);
        const auto ref = oracle::dense_tree(
            in.xm, in.xm, in.z, in.h, [](double x) { return std::vector<double>{1.0, x}; }, lin_pen, 1.0, 8, 2,
            main_edges);
        compare_with_oracle(tree, ref);
      }
    }
  }
}

TEST_CASE("frame accumulation with and without the cache matches the direct gram") {
  auto in = make_instance(180, 77, false, true);
  const TrainingFrame frame(in.data, in.bins, in.rows, 5);
  const TreeParams params{2, 6, 1.0};
  for (auto spec : {frame.main_spec(0, params), frame.main_spec(1, params), frame.interaction_spec(0, 1, params),
                    frame.interaction_spec(1, 0, params)}) {
    const auto direct = accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h);
    for (int pass = 0; pass < 2; ++pass) {  // second pass reads the cache
      const auto cached = frame.accumulate(spec, in.z, in.h, true);
      CHECK(oracle::vector_relative_error(cached.cross, direct.cross) <= 1e-12);
      CHECK(oracle::vector_relative_error(cached.moment, direct.moment) <= 1e-12);
      CHECK(oracle::vector_relative_error(cached.zz, direct.zz) <= 1e-12);
      CHECK(cached.count == direct.count);
    }
    std::vector<double> w(in.h.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 + (i % 7) * 0.1;
    const auto weighted = frame.accumulate(spec, in.z, w, false);
    const auto ref = accumulate_gram(in.data, in.bins, in.rows, spec, in.z, w);
    CHECK(oracle::vector_relative_error(weighted.cross, ref.cross) <= 1e-12);
    CHECK(oracle::vector_relative_error(weighted.moment, ref.moment) <= 1e-12);
  }
}

TEST_CASE("depth zero without ridge is ordinary least squares") {
  auto in = make_instance(300, 21, false, false);
  const TreeSpec spec{0, 0, Design::raw_linear(in.xm), {0, 1, 0.0}};
  const auto tree =
      fit_tree(accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h), spec, in.bins.edges(0));
  double mx = 0, mz = 0;
  for (std::size_t i = 0; i < 300; ++i) mx += in.xm[i], mz += in.z[i];
  mx /= 300, mz /= 300;
  double sxz = 0, sxx = 0;
  for (std::size_t i = 0; i < 300; ++i) sxz += (in.xm[i] - mx) * (in.z[i] - mz), sxx += (in.xm[i] - mx) * (in.xm[i] - mx);
  const double slope = sxz / sxx;
  REQUIRE(tree.nodes().size() == 1);
  CHECK(tree.nodes()[0].beta[1] == doctest::Approx(slope).epsilon(1e-10));
  CHECK(tree.nodes()[0].beta[0] == doctest::Approx(mz - slope * mx).epsilon(1e-10));
}

TEST_CASE("absolute value is split near zero with slopes of opposite sign") {
  const std::size_t n = 10000;
  std::vector<double> x(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    z[i] = std::abs(x[i]);
  }
  const Dataset d({x}, {"x"}, z);
  const auto bins = BinMap::build(d, 256);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const std::vector<double> h(n, 1.0);
  const TreeSpec spec{0, 0, Design::raw_linear(x), {1, 20, 1.0}};
  const auto tree = fit_tree(accumulate_gram(d, bins, rows, spec, z, h), spec, bins.edges(0));
  const auto& root = tree.nodes()[0];
  REQUIRE(!root.leaf());
  CHECK(std::abs(root.threshold) < 0.02);
  CHECK(std::abs(tree.nodes()[root.left].beta[1] + 1.0) < 0.05);
  CHECK(std::abs(tree.nodes()[root.right].beta[1] - 1.0) < 0.05);
}

TEST_CASE("interaction tree on x_j * sign(x_k) splits on x_k") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 5000;
  std::vector<double> xj(n), xk(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    xj[i] = u(rng);
    xk[i] = u(rng);
    z[i] = xj[i] * (xk[i] >= 0 ? 1.0 : -1.0);
  }
  const Dataset d({xj, xk}, {"j", "k"}, z);
  const auto bins = BinMap::build(d, 256);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  const std::vector<double> h(n, 1.0);
  const TreeSpec spec{0, 1, Design::spline(xj, 5), {1, 20, 1.0}};
  const auto tree = fit_tree(accumulate_gram(d, bins, rows, spec, z, h), spec, bins.edges(1));
  const auto& root = tree.nodes()[0];
  REQUIRE(!root.leaf());
  CHECK(std::abs(root.threshold) < 0.05);
  const auto& left = tree.nodes()[root.left].beta;
  const auto& right = tree.nodes()[root.right].beta;
  CHECK(left.back() - left.front() < 0.0);
  CHECK(right.back() - right.front() > 0.0);
}

TEST_CASE("routing, prediction and leaf refits agree with the fit") {
  auto in = make_instance(200, 31, true, false);
  const TreeSpec spec{0, 1, Design::spline(in.xm, 5), {2, 10, 1.0}};
  const auto tree = fit_tree(accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h), spec, in.bins.edges(1));
  const auto& root = tree.nodes()[0];
  REQUIRE(!root.leaf());
  // A value exactly at a threshold goes right.
  CHECK(tree.leaf_index(root.threshold) == tree.leaf_index(std::nextafter(root.threshold, 1e9)));
  CHECK(tree.leaf_index(root.threshold) != tree.leaf_index(std::nextafter(root.threshold, -1e9)));

  double sse = 0.0;
  std::map<std::size_t, std::vector<std::size_t>> leaves;
  for (std::size_t i = 0; i < 200; ++i) {
    const double p = tree.predict_row(in.data, i);
    sse += in.h[i] * (in.z[i] - p) * (in.z[i] - p);
    leaves[tree.leaf_index(in.xs[i])].push_back(i);
  }
  CHECK(oracle::relative_error(sse, tree.sse()) <= 1e-8);
  CHECK(std::abs(sse - tree.sse()) <= 1e-8 * sse);

  const auto knots = spec.design.basis().knots();
  for (const auto& [leaf, rows] : leaves) {
    CHECK(tree.nodes()[leaf].rows == rows.size());
    CHECK(rows.size() >= 10);
    const auto fit = oracle::ridge_fit(rows, in.xm, in.z, in.h, [&](double x) { return oracle::hat_row(knots, x); },
                                       spec.design.penalty(), 1.0);
    for (auto r : rows) {
      double ref = 0.0;
      const auto d = oracle::hat_row(knots, in.xm[r]);
      for (std::size_t k = 0; k < d.size(); ++k) ref += d[k] * fit.beta[k];
      CHECK(tree.predict_row(in.data, r) == doctest::Approx(ref).epsilon(1e-9));
    }
  }
  // Every accepted split lowers the SSE.
  for (const auto& node : tree.nodes()) {
    if (node.leaf()) continue;
    CHECK(tree.nodes()[node.left].sse + tree.nodes()[node.right].sse < node.sse);
  }
}

TEST_CASE("fits are reproducible") {
  auto in = make_instance(200, 5, true, true);
  const TreeSpec spec{1, 0, Design::spline(in.xs, 5), {2, 5, 1.0}};
  const auto a = fit_tree(accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h), spec, in.bins.edges(0));
  const auto b = fit_tree(accumulate_gram(in.data, in.bins, in.rows, spec, in.z, in.h), spec, in.bins.edges(0));
  REQUIRE(a.nodes().size() == b.nodes().size());
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    CHECK(a.nodes()[i].beta == b.nodes()[i].beta);
    CHECK(a.nodes()[i].threshold == b.nodes()[i].threshold);
  }
}

TEST_CASE("invalid tree parameters are rejected") {
  auto in = make_instance(80, 3, false, false);
  const auto edges = in.bins.edges(1);
  TreeSpec spline{0, 1, Design::spline(in.xm, 5), {2, 5, 0.0}};
  CHECK_THROWS_AS(fit_tree(accumulate_gram(in.data, in.bins, in.rows, spline, in.z, in.h), spline, edges), UsageError);
  spline.params.ridge = -1.0;
  CHECK_THROWS_AS(fit_tree(accumulate_gram(in.data, in.bins, in.rows, spline, in.z, in.h), spline, edges), UsageError);
  spline.params = {-1, 5, 1.0};
  CHECK_THROWS_AS(fit_tree(accumulate_gram(in.data, in.bins, in.rows, spline, in.z, in.h), spline, edges), UsageError);
  // Collinear raw design without ridge: constant modeling variable.
  const std::vector<double> c(80, 2.0);
  const Dataset d({c, in.xs}, {"c", "s"}, in.z);
  const auto bins = BinMap::build(d, 256);
  const TreeSpec flat{0, 1, Design::raw_linear(c), {1, 5, 0.0}};
  CHECK_THROWS_AS(fit_tree(accumulate_gram(d, bins, in.rows, flat, in.z, in.h), flat, bins.edges(1)), NumericalError);
}

TEST_CASE("default minimum leaf size") {
  CHECK(default_min_leaf(100) == 20);
  CHECK(default_min_leaf(4000) == 20);
  CHECK(default_min_leaf(25000) == 125);
}
