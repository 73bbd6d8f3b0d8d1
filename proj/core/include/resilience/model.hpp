#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resilience/events.hpp"

namespace resilience {

enum class ModelForm { kSingleExp, kMultiplicative, kAdditive };

std::string to_string(ModelForm form);

struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;
};

enum class ResponseTransform { kNone, kLog1p };

/// Regression model description: functional form, feature bindings, priors.
/// Parameter layout by form:
///   SingleExp      {a, b, c}           response = a*exp(b*W) + c
///   Multiplicative {ln_a, b1, b2, c}   response = exp(ln_a + b1*W1 + b2*W2) + c
///   Additive       {a1, b1, a2, b2, c} response = a1*exp(b1*W1) + a2*exp(b2*W2) + c
/// The noise sd sigma rides along as one extra sampled parameter with a
/// Half-Normal(sigma_scale) prior.
struct ModelSpec {
  ModelForm form = ModelForm::kSingleExp;
  std::vector<std::string> predictors;
  std::string response;
  std::vector<std::string> param_names;
  std::vector<NormalPrior> priors;
  std::optional<double> sigma_scale;  // default: sample sd of the response
  ResponseTransform transform = ResponseTransform::kNone;
  std::string transform_notes;
  std::string id;

  std::size_t n_params() const { return param_names.size(); }

  static ModelSpec single_exp(std::string predictor, std::string response);
  static ModelSpec multiplicative(std::string predictor1, std::string predictor2,
                                  std::string response);
  static ModelSpec additive(std::string predictor1, std::string predictor2,
                            std::string response);

  void validate() const;
};

/// Exponent-clamp accounting for model_predict.
struct ClampStats {
  std::size_t clamped = 0;
  std::size_t evaluations = 0;
};

/// Evaluates the model at one feature point. Exponent arguments are clamped
/// to +-700 before exponentiation; clamps are counted when stats is given.
/// Non-finite features are an error.
double model_predict(const ModelSpec& spec, std::span<const double> params,
                     std::span<const double> features,
                     ClampStats* stats = nullptr);

/// Rows extracted from a feature table for one model: predictor matrix and
/// (possibly transformed) response vector.
struct RegressionData {
  std::vector<std::vector<double>> x;  // row-major, one entry per predictor
  std::vector<double> y;
  std::size_t n_rows() const { return y.size(); }
};

/// Pulls the spec's predictors and response out of the table, applying the
/// response transform. Non-finite cells are an error naming the row.
RegressionData make_regression_data(const ModelSpec& spec,
                                    const FeatureTable& table);

double apply_transform(ResponseTransform t, double value);
double invert_transform(ResponseTransform t, double value);

/// Log density of the Normal priors at the model parameters (sigma excluded).
double log_prior(const ModelSpec& spec, std::span<const double> params);

/// Half-Normal(scale) log density; -inf for sigma <= 0.
double log_half_normal(double sigma, double scale);

/// Gaussian log likelihood of the data under the model, noise sd sigma.
double log_likelihood(const ModelSpec& spec, std::span<const double> params,
                      double sigma, const RegressionData& data,
                      ClampStats* stats = nullptr);

/// Joint log posterior at theta = [params..., sigma]; -inf for sigma <= 0.
/// `sigma_scale` is the resolved Half-Normal scale.
double log_posterior(const ModelSpec& spec, std::span<const double> theta,
                     double sigma_scale, const RegressionData& data,
                     ClampStats* stats = nullptr);

/// Resolves the noise prior scale: the spec's value if set, else the sample
/// standard deviation of the response (1.0 when fewer than 2 rows).
double resolve_sigma_scale(const ModelSpec& spec, const RegressionData& data);

/// Deterministic coarse fit used to center the sampler's starting points:
/// scans the growth-rate parameters over a fixed grid and solves the
/// remaining (conditionally linear) parameters by least squares. Returns
/// [params..., sigma_hat]. Falls back to prior means (and the sigma scale)
/// when there are no rows or nothing finite to fit.
std::vector<double> coarse_fit(const ModelSpec& spec, const RegressionData& data,
                               double sigma_scale);

/// Fixed linear change of sampling coordinates: amplitude parameters are
/// expressed at the predictor means (a~ = a * exp(b * mean(W))), which
/// removes the strong rate/amplitude posterior correlation that stalls a
/// diagonal random-walk kernel. The map is a bijection with triangular
/// Jacobian; with no data the centers are zero and it degenerates to the
/// identity. Applies to model parameters only, not sigma.
class SamplingTransform {
 public:
  SamplingTransform() = default;
  static SamplingTransform for_model(const ModelSpec& spec,
                                     const RegressionData& data);

  std::vector<double> to_natural(std::span<const double> sampling) const;
  std::vector<double> to_sampling(std::span<const double> natural) const;
  /// log |d natural / d sampling| at the given sampling-space point.
  double log_jacobian(std::span<const double> sampling) const;

 private:
  ModelForm form_ = ModelForm::kSingleExp;
  std::vector<double> centers_;
};

}  // namespace resilience
