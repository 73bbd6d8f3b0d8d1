#include <doctest.h>

#include <cmath>
#include <sstream>

#include "resilience/correlation.hpp"
#include "resilience/errors.hpp"
#include "resilience/rng.hpp"

using namespace resilience;

namespace {

FeatureTable table_of(const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
  FeatureTable table(names);
  for (std::size_t r = 0; r < columns[0].size(); ++r) {
    std::vector<double> row;
    for (const auto& col : columns) row.push_back(col[r]);
    table.add_row(row);
  }
  return table;
}

/// 5-event fixture; expected coefficients computed independently from the
/// covariance/sigma ratio in long-double arithmetic.
FeatureTable five_row_fixture() {
  return table_of({"g", "t", "p", "auc", "n"},
                  {{31.0, 55.0, 42.5, 28.0, 61.0},
                   {72.0, 88.5, 65.0, 90.0, 79.5},
                   {0.0, 1.0, 0.0, 1.0, 1.0},
                   {120.0, 940.5, 310.0, 95.0, 1500.0},
                   {0.004, 0.021, 0.009, 0.003, 0.030}});
}

}  // namespace

TEST_CASE("perfect linear relations give +-1") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;  // 2x + 1
  std::vector<double> z;  // -x
  for (const double v : x) {
    y.push_back(2 * v + 1);
    z.push_back(-v);
  }
  const auto m = pearson_matrix(table_of({"x", "y", "z"}, {x, y, z}), {"x", "y", "z"});
  CHECK(m.at("x", "y") == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.at("x", "z") == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(m.at("y", "z") == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("five-row fixture matches the hand-computed coefficients") {
  const auto m =
      pearson_matrix(five_row_fixture(), {"g", "t", "p", "auc", "n"});
  CHECK(m.at("g", "t") == doctest::Approx(0.079318145272709931).epsilon(1e-12));
  CHECK(m.at("g", "p") == doctest::Approx(0.42622606711354633).epsilon(1e-12));
  CHECK(m.at("g", "auc") == doctest::Approx(0.95553080774364707).epsilon(1e-12));
  CHECK(m.at("g", "n") == doctest::Approx(0.97551298914348128).epsilon(1e-12));
  CHECK(m.at("t", "p") == doctest::Approx(0.8972392853407708).epsilon(1e-12));
  CHECK(m.at("t", "auc") == doctest::Approx(0.21242197116052608).epsilon(1e-12));
  CHECK(m.at("t", "n") == doctest::Approx(0.18673509874745486).epsilon(1e-12));
  CHECK(m.at("p", "auc") == doctest::Approx(0.56453705793179321).epsilon(1e-12));
  CHECK(m.at("p", "n") == doctest::Approx(0.53755536309331531).epsilon(1e-12));
  CHECK(m.at("auc", "n") == doctest::Approx(0.99691455800058215).epsilon(1e-12));
  CHECK(m.n_events == 5);
}

TEST_CASE("fewer than three rows is fatal") {
  CHECK_THROWS_AS(
      pearson_matrix(table_of({"a", "b"}, {{1, 2}, {3, 4}}), {"a", "b"}),
      DataError);
}

TEST_CASE("constant columns correlate zero and are flagged") {
  const auto m = pearson_matrix(
      table_of({"a", "b"}, {{5, 5, 5, 5}, {1, 2, 3, 4}}), {"a", "b"});
  CHECK(m.at("a", "b") == 0.0);
  CHECK(m.at("a", "a") == 1.0);
  REQUIRE(m.constant_columns.size() == 1);
  CHECK(m.constant_columns[0] == "a");
}

TEST_CASE("matrix equals its transpose exactly and has unit diagonal") {
  const auto m =
      pearson_matrix(five_row_fixture(), {"g", "t", "p", "auc", "n"});
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    CHECK(m.values[i][i] == 1.0);
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      CHECK(m.values[i][j] == m.values[j][i]);
      CHECK(m.values[i][j] <= 1.0);
      CHECK(m.values[i][j] >= -1.0);
    }
  }
}

TEST_CASE("correlations are invariant under affine rescaling") {
  Rng rng(55);
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(rng.normal());
    y.push_back(0.6 * x.back() + 0.8 * rng.normal());
  }
  const auto base = pearson_matrix(table_of({"x", "y"}, {x, y}), {"x", "y"});
  for (const double scale : {3.0, -2.0, 1e-6}) {
    std::vector<double> sx;
    for (const double v : x) sx.push_back(scale * v + 17.0);
    const auto scaled =
        pearson_matrix(table_of({"x", "y"}, {sx, y}), {"x", "y"});
    const double sign = scale < 0 ? -1.0 : 1.0;
    CHECK(scaled.at("x", "y") ==
          doctest::Approx(sign * base.at("x", "y")).epsilon(1e-10));
  }
}

TEST_CASE("dominant predictors rank by strongest metric correlation") {
  const auto m =
      pearson_matrix(five_row_fixture(), {"g", "t", "p", "auc", "n"});
  const auto dom = dominant_predictors(m, {"auc", "n"}, 3);
  REQUIRE(dom.ranking.size() == 3);
  CHECK(dom.ranking[0].name == "g");
  CHECK(dom.ranking[0].against_metric == "n");
  CHECK(dom.ranking[0].max_abs_r == doctest::Approx(0.97551298914348128));
  CHECK(dom.ranking[1].name == "p");
  CHECK(dom.ranking[2].name == "t");
  CHECK_FALSE(dom.degenerate);
}

TEST_CASE("k beyond the candidate count returns everything") {
  const auto m =
      pearson_matrix(five_row_fixture(), {"g", "t", "p", "auc", "n"});
  CHECK(dominant_predictors(m, {"auc", "n"}, 99).ranking.size() == 3);
}

TEST_CASE("all-zero correlations keep input order and are flagged") {
  CorrelationMatrix m;
  m.names = {"w1", "w2", "metric"};
  m.values = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.n_events = 5;
  const auto dom = dominant_predictors(m, {"metric"}, 2);
  CHECK(dom.degenerate);
  REQUIRE(dom.ranking.size() == 2);
  CHECK(dom.ranking[0].name == "w1");
  CHECK(dom.ranking[1].name == "w2");
}

TEST_CASE("ranking is invariant under row shuffling") {
  Rng rng(77);
  auto table = five_row_fixture();
  std::vector<std::size_t> order{0, 1, 2, 3, 4};
  rng.shuffle(order);
  const auto shuffled = table.select_rows(order);
  const std::vector<std::string> cols{"g", "t", "p", "auc", "n"};
  const auto a = dominant_predictors(pearson_matrix(table, cols), {"auc", "n"}, 3);
  const auto b =
      dominant_predictors(pearson_matrix(shuffled, cols), {"auc", "n"}, 3);
  REQUIRE(a.ranking.size() == b.ranking.size());
  for (std::size_t i = 0; i < a.ranking.size(); ++i) {
    CHECK(a.ranking[i].name == b.ranking[i].name);
    CHECK(a.ranking[i].r == doctest::Approx(b.ranking[i].r).epsilon(1e-12));
  }
}

TEST_CASE("missing metric name is an error") {
  const auto m = pearson_matrix(five_row_fixture(), {"g", "t"});
  CHECK_THROWS_AS(dominant_predictors(m, {"auc"}, 1), DataError);
}

TEST_CASE("matrix CSV export carries headers in both directions") {
  const auto m = pearson_matrix(five_row_fixture(), {"g", "t"});
  std::ostringstream out;
  m.write_csv(out);
  const auto text = out.str();
  CHECK(text.find("variable,g,t") == 0);
  CHECK(text.find("\ng,1,") != std::string::npos);
}
