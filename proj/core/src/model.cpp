#include "resilience/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "resilience/errors.hpp"

namespace resilience {

namespace {

constexpr double kExpClamp = 700.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamped_exp(double arg, ClampStats* stats) {
  if (stats) ++stats->evaluations;
  if (arg > kExpClamp || arg < -kExpClamp) {
    if (stats) ++stats->clamped;
    arg = std::clamp(arg, -kExpClamp, kExpClamp);
  }
  return std::exp(arg);
}

double log_normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd) - 0.5 * z * z;
}

}  // namespace

std::string to_string(ModelForm form) {
  switch (form) {
    case ModelForm::kSingleExp: return "single_exp";
    case ModelForm::kMultiplicative: return "multiplicative";
    case ModelForm::kAdditive: return "additive";
  }
  return "unknown";
}

ModelSpec ModelSpec::single_exp(std::string predictor, std::string response) {
  ModelSpec spec;
  spec.form = ModelForm::kSingleExp;
  spec.predictors = {std::move(predictor)};
  spec.response = std::move(response);
  spec.param_names = {"a", "b", "c"};
  spec.priors = {{0.0, 10.0}, {0.0, 1.0}, {0.0, 10.0}};
  return spec;
}

ModelSpec ModelSpec::multiplicative(std::string predictor1, std::string predictor2,
                                    std::string response) {
  ModelSpec spec;
  spec.form = ModelForm::kMultiplicative;
  spec.predictors = {std::move(predictor1), std::move(predictor2)};
  spec.response = std::move(response);
  spec.param_names = {"ln_a", "b1", "b2", "c"};
  spec.priors = {{0.0, 10.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 10.0}};
  return spec;
}

ModelSpec ModelSpec::additive(std::string predictor1, std::string predictor2,
                              std::string response) {
  ModelSpec spec;
  spec.form = ModelForm::kAdditive;
  spec.predictors = {std::move(predictor1), std::move(predictor2)};
  spec.response = std::move(response);
  spec.param_names = {"a1", "b1", "a2", "b2", "c"};
  spec.priors = {{0.0, 10.0}, {0.0, 1.0}, {0.0, 10.0}, {0.0, 1.0}, {0.0, 10.0}};
  return spec;
}

void ModelSpec::validate() const {
  const std::size_t want_predictors = form == ModelForm::kSingleExp ? 1 : 2;
  if (predictors.size() != want_predictors) {
    throw ConfigError("model '" + id + "': " + to_string(form) + " needs " +
                      std::to_string(want_predictors) + " predictor(s)");
  }
  const std::size_t want_params = form == ModelForm::kSingleExp ? 3
                                  : form == ModelForm::kMultiplicative ? 4
                                                                       : 5;
  if (param_names.size() != want_params || priors.size() != want_params) {
    throw ConfigError("model '" + id + "': parameter list does not match form");
  }
  for (const auto& prior : priors) {
    if (!(prior.sd > 0.0)) {
      throw ConfigError("model '" + id + "': prior sd must be positive");
    }
  }
  if (sigma_scale && !(*sigma_scale > 0.0)) {
    throw ConfigError("model '" + id + "': sigma_scale must be positive");
  }
}

double model_predict(const ModelSpec& spec, std::span<const double> params,
                     std::span<const double> features, ClampStats* stats) {
  if (params.size() != spec.n_params()) {
    throw std::invalid_argument("parameter vector size mismatch");
  }
  if (features.size() != spec.predictors.size()) {
    throw std::invalid_argument("feature vector size mismatch");
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!std::isfinite(features[i])) {
      throw DataError("non-finite value for predictor '" + spec.predictors[i] +
                      "'");
    }
  }
  switch (spec.form) {
    case ModelForm::kSingleExp: {
      const double a = params[0], b = params[1], c = params[2];
      return a * clamped_exp(b * features[0], stats) + c;
    }
    case ModelForm::kMultiplicative: {
      const double ln_a = params[0], b1 = params[1], b2 = params[2],
                   c = params[3];
      return clamped_exp(ln_a + b1 * features[0] + b2 * features[1], stats) + c;
    }
    case ModelForm::kAdditive: {
      const double a1 = params[0], b1 = params[1], a2 = params[2],
                   b2 = params[3], c = params[4];
      return a1 * clamped_exp(b1 * features[0], stats) +
             a2 * clamped_exp(b2 * features[1], stats) + c;
    }
  }
  throw std::logic_error("unhandled model form");
}

double apply_transform(ResponseTransform t, double value) {
  return t == ResponseTransform::kLog1p ? std::log1p(value) : value;
}

double invert_transform(ResponseTransform t, double value) {
  return t == ResponseTransform::kLog1p ? std::expm1(value) : value;
}

RegressionData make_regression_data(const ModelSpec& spec,
                                    const FeatureTable& table) {
  RegressionData data;
  const auto& response = table.column(spec.response);
  std::vector<const std::vector<double>*> predictor_cols;
  predictor_cols.reserve(spec.predictors.size());
  for (const auto& name : spec.predictors) {
    predictor_cols.push_back(&table.column(name));
  }
  data.x.reserve(table.n_rows());
  data.y.reserve(table.n_rows());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    std::vector<double> row;
    row.reserve(predictor_cols.size());
    for (std::size_t c = 0; c < predictor_cols.size(); ++c) {
      const double v = (*predictor_cols[c])[r];
      if (!std::isfinite(v)) {
        throw DataError("row " + std::to_string(r + 1) +
                        ": non-finite value for predictor '" +
                        spec.predictors[c] + "'");
      }
      row.push_back(v);
    }
    const double y = apply_transform(spec.transform, response[r]);
    if (!std::isfinite(y)) {
      throw DataError("row " + std::to_string(r + 1) +
                      ": non-finite response '" + spec.response + "'");
    }
    data.x.push_back(std::move(row));
    data.y.push_back(y);
  }
  return data;
}

double log_prior(const ModelSpec& spec, std::span<const double> params) {
  double total = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    total += log_normal_pdf(params[i], spec.priors[i].mean, spec.priors[i].sd);
  }
  return total;
}

double log_half_normal(double sigma, double scale) {
  if (sigma <= 0.0) return kNegInf;
  return 0.5 * std::log(2.0 / std::numbers::pi) - std::log(scale) -
         sigma * sigma / (2.0 * scale * scale);
}

double log_likelihood(const ModelSpec& spec, std::span<const double> params,
                      double sigma, const RegressionData& data,
                      ClampStats* stats) {
  if (sigma <= 0.0) return kNegInf;
  const double log_norm =
      -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const double pred = model_predict(spec, params, data.x[r], stats);
    const double resid = data.y[r] - pred;
    total += log_norm - resid * resid * inv_two_var;
  }
  return total;
}

double log_posterior(const ModelSpec& spec, std::span<const double> theta,
                     double sigma_scale, const RegressionData& data,
                     ClampStats* stats) {
  const std::size_t p = spec.n_params();
  if (theta.size() != p + 1) {
    throw std::invalid_argument("theta must be [params..., sigma]");
  }
  const double sigma = theta[p];
  if (sigma <= 0.0) return kNegInf;
  return log_prior(spec, theta.first(p)) + log_half_normal(sigma, sigma_scale) +
         log_likelihood(spec, theta.first(p), sigma, data, stats);
}

namespace {

struct CoarseCandidate {
  std::vector<double> params;
  double ssr = std::numeric_limits<double>::infinity();
};

double clamped_exp_arg(double arg) {
  return std::exp(std::clamp(arg, -kExpClamp, kExpClamp));
}

/// Least squares of y on {g, 1}: y ~ a*g + c.
bool solve_two_term(const std::vector<double>& g, const std::vector<double>& y,
                    double& a, double& c, double& ssr) {
  const auto n = static_cast<double>(y.size());
  double sg = 0, sgg = 0, sy = 0, sgy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sg += g[i];
    sgg += g[i] * g[i];
    sy += y[i];
    sgy += g[i] * y[i];
  }
  const double denom = n * sgg - sg * sg;
  if (!(std::abs(denom) > 1e-30) || !std::isfinite(denom)) return false;
  a = (n * sgy - sg * sy) / denom;
  c = (sy - a * sg) / n;
  if (!std::isfinite(a) || !std::isfinite(c)) return false;
  ssr = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - a * g[i] - c;
    ssr += r * r;
  }
  return std::isfinite(ssr);
}

/// Least squares of y on {g1, g2, 1} via 3x3 normal equations.
bool solve_three_term(const std::vector<double>& g1, const std::vector<double>& g2,
                      const std::vector<double>& y, double& a1, double& a2,
                      double& c, double& ssr) {
  double m[3][4] = {};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double basis[3] = {g1[i], g2[i], 1.0};
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) m[r][col] += basis[r] * basis[col];
      m[r][3] += basis[r] * y[i];
    }
  }
  for (int col = 0; col < 3; ++col) {  // Gaussian elimination, partial pivot
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-30) return false;
    std::swap(m[pivot], m[col]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
    }
  }
  a1 = m[0][3] / m[0][0];
  a2 = m[1][3] / m[1][1];
  c = m[2][3] / m[2][2];
  if (!std::isfinite(a1) || !std::isfinite(a2) || !std::isfinite(c)) return false;
  ssr = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - a1 * g1[i] - a2 * g2[i] - c;
    ssr += r * r;
  }
  return std::isfinite(ssr);
}

}  // namespace

std::vector<double> coarse_fit(const ModelSpec& spec, const RegressionData& data,
                               double sigma_scale) {
  std::vector<double> fallback;
  for (const auto& prior : spec.priors) fallback.push_back(prior.mean);
  fallback.push_back(0.6745 * sigma_scale);  // Half-Normal median
  if (data.n_rows() < 3) return fallback;

  const std::size_t n = data.n_rows();
  CoarseCandidate best;
  std::vector<double> g(n), g2(n);

  const auto rate_grid = [](double lo, double hi, int count, auto&& body) {
    for (int i = 0; i < count; ++i) {
      body(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
    }
  };

  switch (spec.form) {
    case ModelForm::kSingleExp:
      rate_grid(-3.0, 3.0, 301, [&](double b) {
        for (std::size_t i = 0; i < n; ++i) {
          g[i] = clamped_exp_arg(b * data.x[i][0]);
        }
        double a, c, ssr;
        if (solve_two_term(g, data.y, a, c, ssr) && ssr < best.ssr) {
          best = {{a, b, c}, ssr};
        }
      });
      break;
    case ModelForm::kMultiplicative:
      rate_grid(-2.0, 2.0, 81, [&](double b1) {
        rate_grid(-2.0, 2.0, 81, [&](double b2) {
          for (std::size_t i = 0; i < n; ++i) {
            g[i] = clamped_exp_arg(b1 * data.x[i][0] + b2 * data.x[i][1]);
          }
          double amp, c, ssr;
          if (!solve_two_term(g, data.y, amp, c, ssr)) return;
          if (amp <= 0.0) {
            // amplitude must stay positive for ln_a; refit the offset only
            amp = 1e-8;
            c = 0.0;
            for (std::size_t i = 0; i < n; ++i) c += data.y[i] - amp * g[i];
            c /= static_cast<double>(n);
            ssr = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              const double r = data.y[i] - amp * g[i] - c;
              ssr += r * r;
            }
          }
          if (ssr < best.ssr) best = {{std::log(amp), b1, b2, c}, ssr};
        });
      });
      break;
    case ModelForm::kAdditive:
      rate_grid(-2.0, 2.0, 81, [&](double b1) {
        rate_grid(-2.0, 2.0, 81, [&](double b2) {
          for (std::size_t i = 0; i < n; ++i) {
            g[i] = clamped_exp_arg(b1 * data.x[i][0]);
            g2[i] = clamped_exp_arg(b2 * data.x[i][1]);
          }
          double a1, a2, c, ssr;
          if (solve_three_term(g, g2, data.y, a1, a2, c, ssr) && ssr < best.ssr) {
            best = {{a1, b1, a2, b2, c}, ssr};
          }
        });
      });
      break;
  }

  if (!std::isfinite(best.ssr)) return fallback;
  const double sigma_hat = std::max(
      std::sqrt(best.ssr / static_cast<double>(n)), 1e-6 * sigma_scale);
  best.params.push_back(sigma_hat);
  return best.params;
}

double resolve_sigma_scale(const ModelSpec& spec, const RegressionData& data) {
  if (spec.sigma_scale) return *spec.sigma_scale;
  if (data.n_rows() < 2) return 1.0;
  double mean = 0.0;
  for (const double y : data.y) mean += y;
  mean /= static_cast<double>(data.n_rows());
  double ss = 0.0;
  for (const double y : data.y) ss += (y - mean) * (y - mean);
  const double sd = std::sqrt(ss / static_cast<double>(data.n_rows() - 1));
  return sd > 0.0 ? sd : 1.0;
}

SamplingTransform SamplingTransform::for_model(const ModelSpec& spec,
                                               const RegressionData& data) {
  SamplingTransform t;
  t.form_ = spec.form;
  t.centers_.assign(spec.predictors.size(), 0.0);
  if (data.n_rows() > 0) {
    for (std::size_t c = 0; c < spec.predictors.size(); ++c) {
      double sum = 0.0;
      for (const auto& row : data.x) sum += row[c];
      t.centers_[c] = sum / static_cast<double>(data.n_rows());
    }
  }
  return t;
}

std::vector<double> SamplingTransform::to_natural(
    std::span<const double> sampling) const {
  std::vector<double> natural(sampling.begin(), sampling.end());
  const auto shrink = [](double amp, double rate, double center) {
    return amp * std::exp(std::clamp(-rate * center, -700.0, 700.0));
  };
  // Offsets are sampled as the fitted value at the predictor mean, so the
  // last coordinate is (amplitude contribution at the center) + c.
  switch (form_) {
    case ModelForm::kSingleExp:
      natural[0] = shrink(sampling[0], sampling[1], centers_[0]);
      natural[2] = sampling[2] - sampling[0];
      break;
    case ModelForm::kMultiplicative:
      natural[0] = sampling[0] - sampling[1] * centers_[0] -
                   sampling[2] * centers_[1];
      natural[3] =
          sampling[3] - std::exp(std::clamp(sampling[0], -700.0, 700.0));
      break;
    case ModelForm::kAdditive:
      natural[0] = shrink(sampling[0], sampling[1], centers_[0]);
      natural[2] = shrink(sampling[2], sampling[3], centers_[1]);
      natural[4] = sampling[4] - sampling[0] - sampling[2];
      break;
  }
  return natural;
}

std::vector<double> SamplingTransform::to_sampling(
    std::span<const double> natural) const {
  std::vector<double> sampling(natural.begin(), natural.end());
  const auto grow = [](double amp, double rate, double center) {
    return amp * std::exp(std::clamp(rate * center, -700.0, 700.0));
  };
  switch (form_) {
    case ModelForm::kSingleExp:
      sampling[0] = grow(natural[0], natural[1], centers_[0]);
      sampling[2] = natural[2] + sampling[0];
      break;
    case ModelForm::kMultiplicative:
      sampling[0] = natural[0] + natural[1] * centers_[0] +
                    natural[2] * centers_[1];
      sampling[3] =
          natural[3] + std::exp(std::clamp(sampling[0], -700.0, 700.0));
      break;
    case ModelForm::kAdditive:
      sampling[0] = grow(natural[0], natural[1], centers_[0]);
      sampling[2] = grow(natural[2], natural[3], centers_[1]);
      sampling[4] = natural[4] + sampling[0] + sampling[2];
      break;
  }
  return sampling;
}

double SamplingTransform::log_jacobian(std::span<const double> sampling) const {
  switch (form_) {
    case ModelForm::kSingleExp:
      return -sampling[1] * centers_[0];
    case ModelForm::kMultiplicative:
      return 0.0;
    case ModelForm::kAdditive:
      return -sampling[1] * centers_[0] - sampling[3] * centers_[1];
  }
  return 0.0;
}

}  // namespace resilience
