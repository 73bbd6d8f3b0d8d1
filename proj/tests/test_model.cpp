#include <doctest.h>

#include <cmath>
#include <limits>

#include "resilience/errors.hpp"
#include "resilience/model.hpp"
#include "resilience/rng.hpp"

using namespace resilience;

namespace {

ModelSpec single_spec() { return ModelSpec::single_exp("w", "r"); }

RegressionData data_of(const std::vector<double>& w, const std::vector<double>& y) {
  RegressionData data;
  for (const double v : w) data.x.push_back({v});
  data.y = y;
  return data;
}

}  // namespace

TEST_CASE("a zero growth rate degenerates to a constant") {
  const auto spec = single_spec();
  for (const double w : {-10.0, 0.0, 3.7, 55.0}) {
    CHECK(model_predict(spec, std::vector<double>{1.0, 0.0, 0.0},
                        std::vector<double>{w}) == 1.0);
  }
  const auto mult = ModelSpec::multiplicative("w1", "w2", "r");
  CHECK(model_predict(mult, std::vector<double>{0.0, 0.0, 0.0, 0.0},
                      std::vector<double>{4.0, 9.0}) == 1.0);
}

TEST_CASE("posterior-mean point prediction matches the published arithmetic") {
  // a + c at W = 0 with a = 0.0167, c = -4.5666
  const auto spec = single_spec();
  const double pred = model_predict(spec, std::vector<double>{0.0167, 0.06808, -4.5666},
                                    std::vector<double>{0.0});
  CHECK(pred == doctest::Approx(-4.5499).epsilon(1e-12));
}

TEST_CASE("the additive form sums two exponential terms") {
  const auto spec = ModelSpec::additive("w1", "w2", "r");
  const double pred =
      model_predict(spec, std::vector<double>{2.0, 0.5, 3.0, -0.25, 1.0},
                    std::vector<double>{2.0, 4.0});
  CHECK(pred ==
        doctest::Approx(2.0 * std::exp(1.0) + 3.0 * std::exp(-1.0) + 1.0)
            .epsilon(1e-14));
}

TEST_CASE("multiplicative with b2=0 nests the single-exponential model") {
  const auto mult = ModelSpec::multiplicative("w1", "w2", "r");
  const auto single = single_spec();
  const double ln_a = -3.2, b1 = 0.043, c = 0.7;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double w1 = rng.uniform() * 100.0 - 20.0;
    const double w2 = rng.uniform() * 100.0 - 20.0;
    const double m = model_predict(mult, std::vector<double>{ln_a, b1, 0.0, c},
                                   std::vector<double>{w1, w2});
    const double s =
        model_predict(single, std::vector<double>{std::exp(ln_a), b1, c},
                      std::vector<double>{w1});
    CHECK(m == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("exponent arguments clamp at 700 and clamps are counted") {
  const auto spec = single_spec();
  ClampStats stats;
  const double huge = model_predict(spec, std::vector<double>{1.0, 10.0, 0.0},
                                    std::vector<double>{100.0}, &stats);
  CHECK(std::isfinite(huge));
  CHECK(huge == doctest::Approx(std::exp(700.0)));
  CHECK(stats.clamped == 1);
  CHECK(stats.evaluations == 1);
  model_predict(spec, std::vector<double>{1.0, 0.001, 0.0},
                std::vector<double>{1.0}, &stats);
  CHECK(stats.clamped == 1);
  CHECK(stats.evaluations == 2);
}

TEST_CASE("non-finite features are an error") {
  const auto spec = single_spec();
  CHECK_THROWS_AS(
      model_predict(spec, std::vector<double>{1, 1, 1},
                    std::vector<double>{std::numeric_limits<double>::quiet_NaN()}),
      DataError);
  CHECK_THROWS_AS(
      model_predict(spec, std::vector<double>{1, 1, 1},
                    std::vector<double>{std::numeric_limits<double>::infinity()}),
      DataError);
}

TEST_CASE("zero data rows leave only the prior") {
  const auto spec = single_spec();
  const RegressionData empty;
  const std::vector<double> theta{0.5, 0.1, 0.2, 0.3};
  const double lp = log_posterior(spec, theta, 1.0, empty);
  const double expected =
      log_prior(spec, std::vector<double>{0.5, 0.1, 0.2}) +
      log_half_normal(0.3, 1.0);
  CHECK(lp == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("a row exactly at the prediction contributes the Gaussian mode") {
  const auto spec = single_spec();
  const double w = 2.0;
  const double pred = model_predict(spec, std::vector<double>{0.5, 0.1, 0.2},
                                    std::vector<double>{w});
  const auto data = data_of({w}, {pred});
  const std::vector<double> theta{0.5, 0.1, 0.2, 1.0};
  const double lp = log_posterior(spec, theta, 1.0, data);
  const double prior_part = log_prior(spec, std::vector<double>{0.5, 0.1, 0.2}) +
                            log_half_normal(1.0, 1.0);
  CHECK(lp - prior_part ==
        doctest::Approx(std::log(1.0 / std::sqrt(2.0 * 3.14159265358979323846)))
            .epsilon(1e-12));
}

TEST_CASE("three-row fixture matches the independently summed log densities") {
  // frozen from a separate summation of Gaussian log densities and
  // Normal/Half-Normal priors at a=0.5, b=0.1, c=0.2, sigma=0.3
  const auto spec = single_spec();
  const auto data = data_of({1.0, 2.0, 3.0}, {0.8, 0.9, 1.0});
  const std::vector<double> theta{0.5, 0.1, 0.2, 0.3};
  const double lp = log_posterior(spec, theta, 1.0, data);
  CHECK(lp == doctest::Approx(-6.927818971714588).epsilon(1e-10));
  const double lik = log_likelihood(spec, std::vector<double>{0.5, 0.1, 0.2},
                                    0.3, data);
  CHECK(lik == doctest::Approx(0.7114081665322496).epsilon(1e-10));
}

TEST_CASE("sigma at or below zero has zero posterior density") {
  const auto spec = single_spec();
  const auto data = data_of({1.0}, {1.0});
  CHECK(log_posterior(spec, std::vector<double>{0.5, 0.1, 0.2, 0.0}, 1.0, data) ==
        -std::numeric_limits<double>::infinity());
  CHECK(log_posterior(spec, std::vector<double>{0.5, 0.1, 0.2, -1.0}, 1.0, data) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("making any residual worse lowers the posterior") {
  const auto spec = single_spec();
  const std::vector<double> theta{0.5, 0.1, 0.2, 0.3};
  auto data = data_of({1.0, 2.0, 3.0}, {0.8, 0.9, 1.0});
  const double base = log_posterior(spec, theta, 1.0, data);
  for (std::size_t r = 0; r < data.y.size(); ++r) {
    auto worse = data;
    const double pred = model_predict(spec, std::span(theta).first(3), data.x[r]);
    // push the response strictly further from the prediction
    worse.y[r] = pred + (data.y[r] - pred) * 3.0 + (data.y[r] >= pred ? 0.5 : -0.5);
    CHECK(log_posterior(spec, theta, 1.0, worse) < base);
  }
}

TEST_CASE("response transforms apply and invert") {
  FeatureTable table({"w", "r"});
  table.add_row(std::vector<double>{1.0, 100.0});
  table.add_row(std::vector<double>{2.0, 0.0});
  auto spec = single_spec();
  spec.predictors = {"w"};
  spec.response = "r";
  spec.transform = ResponseTransform::kLog1p;
  const auto data = make_regression_data(spec, table);
  CHECK(data.y[0] == doctest::Approx(std::log1p(100.0)));
  CHECK(data.y[1] == 0.0);
  CHECK(invert_transform(spec.transform, data.y[0]) ==
        doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("spec validation catches malformed models") {
  auto spec = single_spec();
  spec.predictors.push_back("extra");
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  auto bad_prior = single_spec();
  bad_prior.priors[1].sd = 0.0;
  CHECK_THROWS_AS(bad_prior.validate(), ConfigError);
}

TEST_CASE("sigma scale resolves to the sample response sd by default") {
  auto spec = single_spec();
  const auto data = data_of({1, 2, 3, 4}, {1.0, 3.0, 5.0, 7.0});
  // sd of {1,3,5,7} = sqrt(20/3)
  CHECK(resolve_sigma_scale(spec, data) ==
        doctest::Approx(std::sqrt(20.0 / 3.0)).epsilon(1e-12));
  spec.sigma_scale = 0.25;
  CHECK(resolve_sigma_scale(spec, data) == 0.25);
  const RegressionData empty;
  spec.sigma_scale.reset();
  CHECK(resolve_sigma_scale(spec, empty) == 1.0);
}
