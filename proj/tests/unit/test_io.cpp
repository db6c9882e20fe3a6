#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "gami/error.hpp"
#include "gami/io.hpp"
#include "gami/metrics.hpp"
#include "json.hpp"

using namespace gami;
namespace fs = std::filesystem;

namespace {

Dataset make_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> cols(4, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : cols) c[i] = normal(rng);
    cols[3][i] = std::round(cols[3][i]);  // few distinct values
    y[i] = cols[0][i] + cols[1][i] * cols[2][i] + 0.3 * cols[3][i] * cols[0][i] + 0.5 * normal(rng);
  }
  return split(Dataset(cols, {"a", "b", "c", "d"}, y), {0.5, 0.25, 0.25}, seed);
}

const GamiModel& fitted() {
  static const GamiModel m = [] {
    const auto d = make_data(3000, 2);
    GamiConfig cfg;
    cfg.rounds = 2;
    cfg.q = 3;
    auto model = fit(d, BinMap::build(d, 256), cfg);
    model.metadata["source"] = "unit";
    return model;
  }();
  return m;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("gami_io_" + std::to_string(::getpid()) + "_" + name);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("save, load and save again is byte-identical") {
  const auto& m = fitted();
  const auto p1 = temp_path("a.json"), p2 = temp_path("b.json");
  save_model(m, p1);
  const auto loaded = load_model(p1);
  save_model(loaded, p2);
  CHECK(read_file(p1) == read_file(p2));
  CHECK(model_to_json(m) == model_to_json(loaded));
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("loaded models predict identically") {
  const auto& m = fitted();
  const auto loaded = model_from_json(model_to_json(m));
  const auto d = make_data(500, 77);
  const auto a = m.predict(d), b = loaded.predict(d);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
  REQUIRE(loaded.effects.has_value());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    CHECK(loaded.effects->predict_row(loaded.trees, d, r) == m.effects->predict_row(m.trees, d, r));
  }
  CHECK(loaded.metadata.at("source") == "unit");
  CHECK(loaded.rounds.size() == m.rounds.size());
  CHECK(loaded.selected_pair_union() == m.selected_pair_union());
  CHECK(loaded.config.q == 3);
  CHECK(loaded.bin_edges == m.bin_edges);
}

TEST_CASE("documents are canonical JSON") {
  const auto text = model_to_json(fitted());
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("format_version") == kModelFormatVersion);
  CHECK(text.back() == '\n');
  CHECK(j.dump(1, '\t') + "\n" == text);
}

TEST_CASE("models without trees or effects round-trip") {
  GamiModel m;
  m.intercept = -0.75;
  m.feature_names = {"u", "v"};
  m.bin_edges = {{}, {0.5}};
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.trees.empty());
  CHECK(!back.effects.has_value());
  CHECK(back.intercept == -0.75);
  const Dataset d({{1.0}, {2.0}}, {"u", "v"}, {0.0});
  CHECK(back.predict(d) == std::vector<double>{-0.75});
  CHECK(model_to_json(back) == model_to_json(m));
}

TEST_CASE("malformed documents are rejected") {
  auto j = nlohmann::json::parse(model_to_json(fitted()));
  auto expect_bad = [](const std::string& text) { CHECK_THROWS_AS_MESSAGE(model_from_json(text), ModelFormatError, text.substr(0, 60)); };

  auto v = j;
  v["format_version"] = kModelFormatVersion + 1;
  expect_bad(v.dump());
  auto missing = j;
  missing.erase("trees");
  expect_bad(missing.dump());
  const auto text = model_to_json(fitted());
  expect_bad(text.substr(0, text.size() / 2));
  expect_bad("");
  expect_bad("[1, 2, 3]");

  auto child = j;
  bool tampered = false;
  for (auto& tree : child["trees"]) {
    if (tree["nodes"][0].at("left").get<int>() >= 0) {
      tree["nodes"][0]["left"] = 9999;
      tampered = true;
      break;
    }
  }
  REQUIRE(tampered);
  expect_bad(child.dump());
  auto beta = j;
  beta["trees"][0]["nodes"][0]["beta"] = nlohmann::json::array({1.0});
  expect_bad(beta.dump());
  auto feature = j;
  feature["trees"][0]["model_var"] = 99;
  expect_bad(feature.dump());

  const auto truncated = temp_path("trunc.json");
  {
    std::ofstream out(truncated);
    out << text.substr(0, 100);
  }
  CHECK_THROWS_AS(load_model(truncated), ModelFormatError);
  fs::remove(truncated);
  CHECK_THROWS_AS(load_model(temp_path("missing.json")), Error);
}

TEST_CASE("metrics") {
  CHECK(mse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 5}) == doctest::Approx(5.0 / 3.0));
  // Every positive above every negative.
  CHECK(auc(std::vector<double>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.3, 0.9}) == 1.0);
  CHECK(auc(std::vector<double>{0, 0, 1, 1}, std::vector<double>{0.9, 0.8, 0.3, 0.1}) == 0.0);
  // Ties count one half.
  CHECK(auc(std::vector<double>{0, 1}, std::vector<double>{0.5, 0.5}) == 0.5);
  CHECK(auc(std::vector<double>{0, 1, 0, 1}, std::vector<double>{0.1, 0.4, 0.5, 0.8}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(auc(std::vector<double>{1, 1}, std::vector<double>{0.1, 0.2}), UsageError);
  CHECK(mean_logloss(std::vector<double>{1, 0}, std::vector<double>{0.0, 0.0}) == doctest::Approx(std::log(2.0)));

  // AUC against the pairwise definition.
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> lvl(0, 9);
  std::vector<double> y, s;
  for (int i = 0; i < 300; ++i) y.push_back(i % 3 == 0), s.push_back(lvl(rng) + 0.5 * y.back());
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (y[i] == 1 && y[k] == 0) {
        pairs += 1;
        wins += s[i] > s[k] ? 1.0 : (s[i] == s[k] ? 0.5 : 0.0);
      }
    }
  }
  CHECK(auc(y, s) == doctest::Approx(wins / pairs).epsilon(1e-12));
}
