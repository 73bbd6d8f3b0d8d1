#include "resilience/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "config_json.hpp"
#include "resilience/csv.hpp"
#include "resilience/errors.hpp"
#include "resilience/evaluate.hpp"
#include "resilience/rng.hpp"
#include "resilience/version.hpp"

namespace resilience {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write to '" + path.string() +
                      "'; is the output directory writable?");
  }
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file '" + path + "'");
  return in;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

std::string short_name(const std::string& column) {
  static const std::map<std::string, std::string> tags{
      {"peak_wind_gust", "gust"},
      {"peak_air_temp", "temp"},
      {"precip_flag", "precip"},
      {"min_air_temp", "mintemp"},
      {"norm_customers_out", "norm"},
      {"auc_customer_hours", "auc"}};
  const auto it = tags.find(column);
  return it == tags.end() ? column : it->second;
}

struct ResponseInfo {
  std::string column;
  std::string tag;
  ResponseTransform transform;
};

struct FittedModel {
  ModelSpec spec;
  PosteriorResult posterior;
};

/// In-memory state carried across stages during one run.
struct Context {
  const RunConfig& cfg;
  fs::path out_dir;
  std::optional<IngestResult> ingest;
  std::optional<std::vector<OutageEvent>> events;
  std::optional<FeatureTable> table;
  std::map<std::string, FittedModel> fits;  // by model id, fit-stage models
  ordered_json stats = ordered_json::object();
  ordered_json seeds = ordered_json::object();
  std::vector<std::string> warnings;

  explicit Context(const RunConfig& config) : cfg(config), out_dir(config.out_dir) {}
};

std::vector<ResponseInfo> responses_of(const RunConfig& cfg) {
  return {
      {"norm_customers_out", "norm", ResponseTransform::kNone},
      {"auc_customer_hours", "auc",
       cfg.auc_transform == "log1p" ? ResponseTransform::kLog1p
                                    : ResponseTransform::kNone},
  };
}

void apply_overrides(ModelSpec& spec, const RunConfig& cfg) {
  for (std::size_t i = 0; i < spec.param_names.size(); ++i) {
    const auto it = cfg.prior_overrides.find(spec.param_names[i]);
    if (it != cfg.prior_overrides.end()) spec.priors[i] = it->second;
  }
  spec.sigma_scale = cfg.sigma_scale;
}

ModelSpec make_single_spec(const RunConfig& cfg, const std::string& predictor,
                           const ResponseInfo& response) {
  ModelSpec spec = ModelSpec::single_exp(predictor, response.column);
  spec.transform = response.transform;
  if (response.transform == ResponseTransform::kLog1p) {
    spec.transform_notes = "response modeled as log1p(" + response.column + ")";
  }
  spec.id = "single_" + short_name(predictor) + "_" + response.tag;
  apply_overrides(spec, cfg);
  return spec;
}

ModelSpec make_joint_spec(const RunConfig& cfg, ModelForm form,
                          const ResponseInfo& response) {
  ModelSpec spec = form == ModelForm::kMultiplicative
                       ? ModelSpec::multiplicative("peak_air_temp",
                                                   "peak_wind_gust",
                                                   response.column)
                       : ModelSpec::additive("peak_air_temp", "peak_wind_gust",
                                             response.column);
  spec.transform = response.transform;
  if (response.transform == ResponseTransform::kLog1p) {
    spec.transform_notes = "response modeled as log1p(" + response.column + ")";
  }
  spec.id = (form == ModelForm::kMultiplicative ? "mult" : "add") +
            std::string("_temp_gust_") + response.tag;
  apply_overrides(spec, cfg);
  return spec;
}

// ---------------------------------------------------------------------------
// Stage: ingest

void apply_conversion(std::optional<double>& value, const LinearConversion& conv) {
  if (value) *value = *value * conv.scale + conv.offset;
}

void convert_units(std::vector<WeatherObservation>& observations,
                   const RunConfig& cfg) {
  for (const auto& [variable, conv] : cfg.unit_conversions) {
    for (auto& obs : observations) {
      if (variable == "wind_speed") apply_conversion(obs.wind_speed, conv);
      else if (variable == "wind_gust") apply_conversion(obs.wind_gust, conv);
      else if (variable == "air_temp") apply_conversion(obs.air_temp, conv);
      else if (variable == "precip_depth") apply_conversion(obs.precip_depth, conv);
      else throw ConfigError("unit_conversions: unknown variable '" + variable + "'");
    }
  }
}

ordered_json stats_json(const ParseStats& s) {
  return {{"data_rows", s.data_rows},
          {"rejected", s.rejected},
          {"filtered_out", s.filtered_out},
          {"accepted", s.accepted},
          {"duplicates_collapsed", s.duplicates_collapsed}};
}

IngestResult compute_ingest(const RunConfig& cfg) {
  auto outage_in = open_in(cfg.outage_csv);
  OutageParseResult outages = parse_outages(
      outage_in, cfg.county, cfg.state, cfg.outage_columns, cfg.parse_options());

  std::vector<WeatherParseResult> weather;
  std::vector<WeatherObservation> all_observations;
  for (const auto& path : cfg.weather_csvs) {
    auto in = open_in(path);
    weather.push_back(parse_weather(in, cfg.weather_columns, cfg.parse_options()));
    const auto& obs = weather.back().observations;
    all_observations.insert(all_observations.end(), obs.begin(), obs.end());
  }
  convert_units(all_observations, cfg);

  TimeGrid grid(make_grid_spec(cfg.window_start, cfg.window_end, cfg.step_secs()));
  resample_outages(outages.records, grid, cfg.thresholds.forward_fill_limit);
  align_weather(all_observations, grid);
  return IngestResult{std::move(outages), std::move(weather), std::move(grid)};
}

void stage_ingest(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  IngestResult ingest = compute_ingest(cfg);
  const OutageParseResult& outages = ingest.outages;
  const std::vector<WeatherParseResult>& weather = ingest.weather;
  const TimeGrid& grid = ingest.grid;

  {
    auto out = open_out(ctx.out_dir / "outage_rejects.csv");
    outages.rejects.write_csv(out);
  }
  {
    auto out = open_out(ctx.out_dir / "weather_rejects.csv");
    out << "line_number,reason,raw_line\n";
    for (std::size_t f = 0; f < weather.size(); ++f) {
      for (const auto& e : weather[f].rejects.entries) {
        out << e.line_number << ',' << csv_escape(e.reason) << ','
            << csv_escape(e.raw_line) << '\n';
      }
    }
  }
  if (cfg.dump_aligned_grid) {
    auto out = open_out(ctx.out_dir / "aligned_grid.csv");
    write_grid_csv(grid, out);
  }

  ordered_json weather_stats = ordered_json::array();
  for (std::size_t f = 0; f < weather.size(); ++f) {
    auto js = stats_json(weather[f].stats);
    js["file"] = cfg.weather_csvs[f];
    weather_stats.push_back(js);
  }
  std::size_t imputed_zero = 0;
  for (const auto flag : grid.mask("customers_out")) imputed_zero += flag;
  ctx.stats["ingest"] = {{"outage", stats_json(outages.stats)},
                         {"outage_records", outages.records.size()},
                         {"weather", weather_stats},
                         {"grid_bins", grid.length()},
                         {"imputed_zero_outage_bins", imputed_zero}};

  ctx.ingest = std::move(ingest);
}

// ---------------------------------------------------------------------------
// Stage: events

void require_ingest(Context& ctx) {
  if (!ctx.ingest) ctx.ingest = compute_ingest(ctx.cfg);
}

void stage_events(Context& ctx) {
  require_ingest(ctx);
  const RunConfig& cfg = ctx.cfg;
  const TimeGrid& grid = ctx.ingest->grid;

  auto events = extract_events(cfg, grid);
  const auto table = build_feature_table(events, cfg.include_min_temp);

  {
    auto out = open_out(ctx.out_dir / "events.csv");
    table.write_csv(out);
  }
  {
    auto out = open_out(ctx.out_dir / "events_detail.csv");
    out << "event_id,start,end,censored,n_bins,peak_customers_out,"
           "cum_customers_out,auc_customer_hours,norm_customers_out,"
           "peak_wind_gust,peak_air_temp,min_air_temp,precip_flag\n";
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      out << (i + 1) << ',' << format_timestamp(e.start) << ','
          << format_timestamp(e.end) << ',' << (e.censored ? 1 : 0) << ','
          << e.curve.size() << ',' << e.peak_customers_out << ','
          << format_double(e.cum_customers_out) << ','
          << format_double(e.auc_customer_hours) << ','
          << format_double(e.norm_customers_out) << ','
          << format_double(e.peak_wind_gust) << ','
          << format_double(e.peak_air_temp) << ','
          << format_double(e.min_air_temp) << ',' << e.precip_flag << '\n';
    }
  }

  std::size_t censored = 0;
  for (const auto& e : events) censored += e.censored ? 1 : 0;
  ctx.stats["events"] = {
      {"pre_events", group_pre_events(grid, cfg.gap_secs()).size()},
      {"significant_events", events.size()},
      {"censored_events", censored}};

  ctx.events = std::move(events);
  ctx.table = table;
}

std::vector<std::string> expected_table_columns(const RunConfig& cfg) {
  auto columns = event_feature_columns();
  if (cfg.include_min_temp) columns.push_back("min_air_temp");
  return columns;
}

const FeatureTable& require_table(Context& ctx) {
  if (!ctx.table) {
    const auto path = ctx.out_dir / "events.csv";
    std::ifstream in(path);
    if (!in) {
      throw DataError("event table '" + path.string() +
                      "' not found; run the events stage first");
    }
    ctx.table = FeatureTable::read_csv(in, expected_table_columns(ctx.cfg));
  }
  return *ctx.table;
}

// ---------------------------------------------------------------------------
// Stage: correlate

std::vector<std::string> weather_columns_of(const RunConfig& cfg) {
  std::vector<std::string> cols{"peak_wind_gust", "peak_air_temp", "precip_flag"};
  if (cfg.include_min_temp) cols.push_back("min_air_temp");
  return cols;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{"auc_customer_hours",
                                             "norm_customers_out"};
  return cols;
}

CorrelationMatrix correlation_of(Context& ctx) {
  const auto& table = require_table(ctx);
  auto columns = weather_columns_of(ctx.cfg);
  for (const auto& m : metric_columns()) columns.push_back(m);
  return pearson_matrix(table, columns);
}

void stage_correlate(Context& ctx, bool standalone) {
  const auto& table = require_table(ctx);
  if (table.n_rows() < 3 && !standalone) {
    // Too few events to correlate; let the run continue so it halts at the
    // fit stage, where the insufficiency is decided.
    ctx.warnings.push_back("correlation skipped: only " +
                           std::to_string(table.n_rows()) + " events");
    return;
  }
  const auto matrix = correlation_of(ctx);
  {
    auto out = open_out(ctx.out_dir / "correlation.csv");
    matrix.write_csv(out);
  }
  const auto dominant =
      dominant_predictors(matrix, metric_columns(), weather_columns_of(ctx.cfg).size());
  ordered_json ranks = ordered_json::array();
  for (const auto& r : dominant.ranking) {
    ranks.push_back({{"variable", r.name},
                     {"r", r.r},
                     {"abs_r", r.max_abs_r},
                     {"against", r.against_metric}});
  }
  ctx.stats["correlation"] = {{"n_events", matrix.n_events},
                              {"constant_columns", matrix.constant_columns},
                              {"dominant_predictors", ranks},
                              {"degenerate_ranking", dominant.degenerate}};
  for (const auto& name : matrix.constant_columns) {
    ctx.warnings.push_back("correlation: column '" + name +
                           "' is constant; its correlations are reported as 0");
  }
}

// ---------------------------------------------------------------------------
// Stage: fit

std::string dominant_predictor_of(Context& ctx) {
  const auto matrix = correlation_of(ctx);
  const auto dominant = dominant_predictors(matrix, metric_columns(), 1);
  if (dominant.ranking.empty()) {
    throw DataError("no weather predictors available for ranking");
  }
  if (dominant.degenerate) {
    ctx.warnings.push_back(
        "predictor ranking degenerate (all correlations zero); keeping input "
        "order");
  }
  return dominant.ranking.front().name;
}

SplitIndices splits_of(Context& ctx) {
  const auto& table = require_table(ctx);
  if (table.n_rows() < 10) {
    throw DataError("insufficient events for model fitting: " +
                    std::to_string(table.n_rows()) + " found, 10 required");
  }
  auto splits = split_data(table, ctx.cfg.seed, ctx.cfg.test_fraction,
                           ctx.cfg.val_fraction, "precip_flag");
  if (!splits.warning.empty()) ctx.warnings.push_back("split: " + splits.warning);
  ctx.stats["split"] = {{"n_train", splits.train.size()},
                        {"n_val", splits.val.size()},
                        {"n_test", splits.test.size()},
                        {"stratified", splits.stratified}};
  return splits;
}

McmcConfig mcmc_config_of(const RunConfig& cfg, std::uint64_t seed) {
  McmcConfig mc;
  mc.n_chains = cfg.mcmc.n_chains;
  mc.n_warmup = cfg.mcmc.n_warmup;
  mc.n_draws = cfg.mcmc.n_draws;
  mc.seed = seed;
  // The pipeline applies its own minimum-events gate on the full table; the
  // training subset may legitimately fall under the sampler's refusal bound.
  mc.force = true;
  return mc;
}

ordered_json posterior_json(const ModelSpec& spec, const PosteriorResult& result,
                            const RunConfig& cfg, std::uint64_t seed) {
  ordered_json summaries = ordered_json::object();
  for (const auto& s : result.summaries) {
    summaries[s.name] = {{"mean", s.mean},   {"sd", s.sd},
                         {"q2.5", s.q025},   {"q97.5", s.q975},
                         {"rhat", s.rhat},   {"ess", s.ess}};
  }
  ordered_json priors = ordered_json::object();
  for (std::size_t i = 0; i < spec.param_names.size(); ++i) {
    priors[spec.param_names[i]] = {{"mean", spec.priors[i].mean},
                                   {"sd", spec.priors[i].sd}};
  }
  ordered_json j;
  j["model_id"] = spec.id;
  j["form"] = to_string(spec.form);
  j["predictors"] = spec.predictors;
  j["response"] = spec.response;
  j["transform_notes"] = spec.transform_notes;
  j["priors"] = priors;
  j["sigma_scale"] = result.sigma_scale;
  j["config"] = {{"n_chains", cfg.mcmc.n_chains},
                 {"n_warmup", cfg.mcmc.n_warmup},
                 {"n_draws", cfg.mcmc.n_draws},
                 {"seed", seed}};
  j["n_train_rows"] = result.n_data_rows;
  j["summaries"] = summaries;
  j["acceptance_rate"] = result.acceptance_rate;
  j["convergence_warning"] = result.convergence_warning;
  j["clamped_exponent_evals"] = result.clamps.clamped;
  if (std::isfinite(result.log_marginal_likelihood)) {
    j["log_marginal_likelihood"] = result.log_marginal_likelihood;
    j["lml_mc_error"] = result.lml_mc_error;
  } else {
    j["log_marginal_likelihood"] = nullptr;
    j["lml_mc_error"] = nullptr;
  }
  return j;
}

void write_posterior_files(Context& ctx, const ModelSpec& spec,
                           const PosteriorResult& result, std::uint64_t seed) {
  {
    auto out = open_out(ctx.out_dir / ("posterior_" + spec.id + ".json"));
    out << posterior_json(spec, result, ctx.cfg, seed).dump(2) << '\n';
  }
  {
    auto out = open_out(ctx.out_dir / ("draws_" + spec.id + ".csv"));
    out << "chain,draw";
    for (const auto& name : result.param_names) out << ',' << name;
    out << '\n';
    for (std::size_t c = 0; c < result.chains.size(); ++c) {
      const auto& chain = result.chains[c];
      for (std::size_t i = 0; i < chain.n_draws; ++i) {
        out << c << ',' << i;
        for (std::size_t pidx = 0; pidx < chain.n_params; ++pidx) {
          out << ',' << format_double(chain.at(i, pidx));
        }
        out << '\n';
      }
    }
  }
}

void write_curve(Context& ctx, const ModelSpec& spec,
                 const PosteriorResult& result) {
  const auto& table = require_table(ctx);
  const auto& predictor = table.column(spec.predictors.front());
  const auto [lo_it, hi_it] = std::minmax_element(predictor.begin(), predictor.end());
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  const auto axis = linspace(lo, hi, 100);
  std::vector<std::vector<double>> grid;
  grid.reserve(axis.size());
  for (const double w : axis) grid.push_back({w});
  const auto band = posterior_predictive(
      result, spec, grid, derive_seed(ctx.cfg.seed, "curve-" + spec.id));

  auto out = open_out(ctx.out_dir / ("curve_" + spec.id + ".csv"));
  const bool transformed = spec.transform != ResponseTransform::kNone;
  out << spec.predictors.front() << ",mean,median,lo95,hi95";
  if (transformed) out << ",orig_median,orig_lo95,orig_hi95";
  out << '\n';
  for (std::size_t i = 0; i < axis.size(); ++i) {
    out << format_double(axis[i]) << ',' << format_double(band.mean[i]) << ','
        << format_double(band.median[i]) << ',' << format_double(band.lo95[i])
        << ',' << format_double(band.hi95[i]);
    if (transformed) {
      out << ',' << format_double(invert_transform(spec.transform, band.median[i]))
          << ',' << format_double(invert_transform(spec.transform, band.lo95[i]))
          << ',' << format_double(invert_transform(spec.transform, band.hi95[i]));
    }
    out << '\n';
  }
}

void stage_fit(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& table = require_table(ctx);
  const auto splits = splits_of(ctx);
  const auto train = table.select_rows(splits.train);
  const auto val = table.select_rows(splits.val);
  const auto test = table.select_rows(splits.test);
  const std::string dominant = dominant_predictor_of(ctx);

  std::vector<EvalReport> reports;
  ordered_json model_stats = ordered_json::object();
  for (const auto& response : responses_of(cfg)) {
    std::vector<ModelSpec> specs{
        make_single_spec(cfg, dominant, response),
        make_joint_spec(cfg, ModelForm::kMultiplicative, response),
        make_joint_spec(cfg, ModelForm::kAdditive, response)};
    for (auto& spec : specs) {
      const auto seed = derive_seed(cfg.seed, "fit-" + spec.id);
      auto posterior = run_mcmc(spec, train, mcmc_config_of(cfg, seed));
      posterior.model_id = spec.id;
      write_posterior_files(ctx, spec, posterior, seed);
      if (spec.form == ModelForm::kSingleExp) write_curve(ctx, spec, posterior);
      reports.push_back(evaluate(spec, posterior, train.n_rows(), val, test,
                                 cfg.predictive_mean_eval));
      if (posterior.convergence_warning) {
        ctx.warnings.push_back("model " + spec.id +
                               ": R-hat above 1.1; treat posterior with care");
      }
      model_stats[spec.id] = {
          {"seed", seed},
          {"acceptance_rate", posterior.acceptance_rate},
          {"convergence_warning", posterior.convergence_warning},
          {"sigma_scale", posterior.sigma_scale},
          {"clamped_exponent_evals", posterior.clamps.clamped},
          {"response", response.column}};
      ctx.fits.emplace(spec.id, FittedModel{std::move(spec), std::move(posterior)});
    }
  }

  {
    auto out = open_out(ctx.out_dir / "evaluation.csv");
    out << "model_id,response,n_train,n_val,n_test,rmse_val,mae_val,rmse_test,"
           "mae_test\n";
    std::size_t r = 0;
    for (const auto& response : responses_of(cfg)) {
      for (int f = 0; f < 3; ++f, ++r) {
        const auto& rep = reports[r];
        out << rep.model_id << ',' << response.column << ',' << rep.n_train
            << ',' << rep.n_val << ',' << rep.n_test << ','
            << format_double(rep.rmse_val) << ',' << format_double(rep.mae_val)
            << ',' << format_double(rep.rmse_test) << ','
            << format_double(rep.mae_test) << '\n';
      }
    }
  }
  ctx.stats["models"] = model_stats;
}

// ---------------------------------------------------------------------------
// Stage: compare

void stage_compare(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& table = require_table(ctx);
  const auto splits = splits_of(ctx);
  const auto train = table.select_rows(splits.train);
  const std::string dominant = dominant_predictor_of(ctx);

  SteppingStoneConfig ss;
  ss.n_rungs = cfg.evidence.n_rungs;
  ss.rung_warmup = cfg.evidence.rung_warmup;
  ss.rung_draws = cfg.evidence.rung_draws;
  ss.rung_chains = cfg.evidence.rung_chains;
  ss.beta_min = cfg.evidence.beta_min;

  ordered_json comparisons = ordered_json::array();
  for (const auto& response : responses_of(cfg)) {
    std::vector<ModelSpec> specs{
        make_single_spec(cfg, dominant, response),
        make_joint_spec(cfg, ModelForm::kMultiplicative, response),
        make_joint_spec(cfg, ModelForm::kAdditive, response)};
    std::map<std::string, EvidenceResult> evidence;
    for (const auto& spec : specs) {
      const RegressionData data = make_regression_data(spec, train);
      ss.seed = derive_seed(cfg.seed, "evidence-" + spec.id);
      const auto target = make_model_target(spec, data);
      evidence[spec.id] = log_marginal_likelihood(target, ss);
      const auto fit = ctx.fits.find(spec.id);
      if (fit != ctx.fits.end()) {
        fit->second.posterior.log_marginal_likelihood = evidence[spec.id].log_ml;
        fit->second.posterior.lml_mc_error = evidence[spec.id].mc_error;
      }
    }
    const auto add_comparison = [&](const ModelSpec& m1, const ModelSpec& m2) {
      const auto& e1 = evidence[m1.id];
      const auto& e2 = evidence[m2.id];
      const auto cmp = bayes_factor(m1.id, e1.log_ml, e1.mc_error, m2.id,
                                    e2.log_ml, e2.mc_error);
      comparisons.push_back({{"response", response.column},
                             {"model_1", cmp.model_1},
                             {"model_2", cmp.model_2},
                             {"log_ml_1", cmp.log_ml_1},
                             {"log_ml_2", cmp.log_ml_2},
                             {"log_bf_12", cmp.log_bf_12},
                             {"bf_12", cmp.bf_12},
                             {"mc_error", cmp.mc_error},
                             {"interpretation", to_string(cmp.interpretation)}});
    };
    add_comparison(specs[0], specs[1]);  // single vs multiplicative
    add_comparison(specs[2], specs[1]);  // additive vs multiplicative
  }

  auto out = open_out(ctx.out_dir / "comparisons.json");
  ordered_json j;
  j["train_rows"] = train.n_rows();
  j["evidence_config"] = {{"n_rungs", ss.n_rungs},
                          {"rung_warmup", ss.rung_warmup},
                          {"rung_draws", ss.rung_draws},
                          {"rung_chains", ss.rung_chains},
                          {"beta_min", ss.beta_min}};
  j["comparisons"] = comparisons;
  out << j.dump(2) << '\n';

  // Refresh posterior files whose evidence just became available.
  for (const auto& [id, fit] : ctx.fits) {
    if (std::isfinite(fit.posterior.log_marginal_likelihood)) {
      write_posterior_files(ctx, fit.spec, fit.posterior,
                            derive_seed(cfg.seed, "fit-" + id));
    }
  }
}

// ---------------------------------------------------------------------------
// Stage: contour

void stage_contour(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& table = require_table(ctx);
  const auto& precip = table.column("precip_flag");

  for (const auto& response : responses_of(cfg)) {
    for (int regime = 0; regime <= 1; ++regime) {
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < table.n_rows(); ++r) {
        if (static_cast<int>(std::llround(precip[r])) == regime) rows.push_back(r);
      }
      const std::string stem = response.tag + "_precip" + std::to_string(regime);
      if (rows.size() < 4) {
        ctx.warnings.push_back("contour " + stem + ": only " +
                               std::to_string(rows.size()) +
                               " events in this regime; grid skipped");
        continue;
      }
      const auto subset = table.select_rows(rows);
      ModelSpec spec = make_joint_spec(cfg, ModelForm::kMultiplicative, response);
      spec.id += "_precip" + std::to_string(regime);
      const auto seed = derive_seed(cfg.seed, "contour-" + spec.id);
      auto mc = mcmc_config_of(cfg, seed);
      const auto posterior = run_mcmc(spec, subset, mc);
      if (posterior.convergence_warning) {
        ctx.warnings.push_back("contour model " + spec.id + ": R-hat above 1.1");
      }

      const auto& temp = subset.column("peak_air_temp");
      const auto& gust = subset.column("peak_wind_gust");
      double w1_lo = cfg.contour.w1_min.value_or(
          *std::min_element(temp.begin(), temp.end()));
      double w1_hi = cfg.contour.w1_max.value_or(
          *std::max_element(temp.begin(), temp.end()));
      double w2_lo = cfg.contour.w2_min.value_or(
          *std::min_element(gust.begin(), gust.end()));
      double w2_hi = cfg.contour.w2_max.value_or(
          *std::max_element(gust.begin(), gust.end()));
      if (w1_lo == w1_hi) { w1_lo -= 1.0; w1_hi += 1.0; }
      if (w2_lo == w2_hi) { w2_lo -= 1.0; w2_hi += 1.0; }

      ContourGrid grid = emit_contour(posterior, spec, w1_lo, w1_hi, w2_lo,
                                      w2_hi, cfg.contour.n_points, regime);
      {
        auto out = open_out(ctx.out_dir / ("contour_" + stem + ".csv"));
        out << "peak_air_temp,peak_wind_gust,prediction\n";
        for (std::size_t i = 0; i < grid.w2_axis.size(); ++i) {
          for (std::size_t j = 0; j < grid.w1_axis.size(); ++j) {
            out << format_double(grid.w1_axis[j]) << ','
                << format_double(grid.w2_axis[i]) << ','
                << format_double(grid.z[i][j]) << '\n';
          }
        }
      }
      {
        // Companion overlay: the original event points of this regime.
        auto out = open_out(ctx.out_dir / ("contour_points_" + stem + ".csv"));
        out << "peak_air_temp,peak_wind_gust," << response.column << '\n';
        const auto& resp = subset.column(response.column);
        for (std::size_t r = 0; r < subset.n_rows(); ++r) {
          out << format_double(temp[r]) << ',' << format_double(gust[r]) << ','
              << format_double(resp[r]) << '\n';
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Metadata and driver

void write_metadata(Context& ctx) {
  ordered_json j;
  j["version"] = kVersion;
  j["config"] = detail::config_to_json(ctx.cfg);
  j["notes"] = {
      {"threshold_rule",
       "a count equal to the magnitude threshold counts as below threshold"},
      {"units", "source units are preserved unless unit_conversions says "
                "otherwise"},
      {"customer_out_mode", ctx.cfg.customer_out_mode}};
  ctx.seeds["master"] = ctx.cfg.seed;
  ctx.seeds["split"] = derive_seed(ctx.cfg.seed, "split");
  j["seeds"] = ctx.seeds;
  j["stats"] = ctx.stats;
  j["warnings"] = ctx.warnings;
  auto out = open_out(ctx.out_dir / "run_metadata.json");
  out << j.dump(2) << '\n';
}

void run_stages(const RunConfig& config, const std::vector<Stage>& stages,
                bool write_meta) {
  config.validate();
  Context ctx(config);
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory '" +
                      ctx.out_dir.string() + "': " + ec.message());
  }

  const auto marker = ctx.out_dir / ".partial";
  Stage current = stages.front();
  try {
    for (const Stage stage : stages) {
      current = stage;
      {
        auto out = open_out(marker);
        out << to_string(stage) << '\n';
      }
      switch (stage) {
        case Stage::kIngest: stage_ingest(ctx); break;
        case Stage::kEvents: stage_events(ctx); break;
        case Stage::kCorrelate: stage_correlate(ctx); break;
        case Stage::kFit: stage_fit(ctx); break;
        case Stage::kCompare: stage_compare(ctx); break;
        case Stage::kContour: stage_contour(ctx); break;
      }
    }
    if (write_meta) write_metadata(ctx);
    fs::remove(marker);
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + to_string(current) + ": " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("stage " + to_string(current) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + to_string(current) + ": " + e.what());
  } catch (const std::exception& e) {
    throw DataError("stage " + to_string(current) + ": " + e.what());
  }
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kEvents: return "events";
    case Stage::kCorrelate: return "correlate";
    case Stage::kFit: return "fit";
    case Stage::kCompare: return "compare";
    case Stage::kContour: return "contour";
  }
  return "unknown";
}

IngestResult ingest_and_align(const RunConfig& config) {
  return compute_ingest(config);
}

std::vector<OutageEvent> extract_events(const RunConfig& config,
                                        const TimeGrid& grid) {
  const auto spans = group_pre_events(grid, config.gap_secs());
  auto events = filter_significant(grid, spans, config.thresholds.magnitude,
                                   config.gap_secs());
  const auto mode = config.customer_out_mode == "cumulative"
                        ? CustomerOutMode::kCumulative
                        : CustomerOutMode::kPeak;
  for (auto& event : events) {
    compute_metrics(event, config.county_total_customers, config.step_secs(),
                    mode);
    attach_weather_features(event, grid);
  }
  return events;
}

ContourGrid emit_contour(const PosteriorResult& posterior, const ModelSpec& spec,
                         double w1_min, double w1_max, double w2_min,
                         double w2_max, int n_points, int precip_flag) {
  ContourGrid grid;
  grid.model_id = spec.id;
  grid.precip_flag = precip_flag;
  grid.w1_axis = linspace(w1_min, w1_max, n_points);
  grid.w2_axis = linspace(w2_min, w2_max, n_points);
  const auto params = posterior.mean_params();
  grid.z.assign(grid.w2_axis.size(), std::vector<double>(grid.w1_axis.size()));
  for (std::size_t i = 0; i < grid.w2_axis.size(); ++i) {
    for (std::size_t j = 0; j < grid.w1_axis.size(); ++j) {
      const double pred = model_predict(
          spec, params, std::vector<double>{grid.w1_axis[j], grid.w2_axis[i]});
      grid.z[i][j] = invert_transform(spec.transform, pred);
    }
  }
  return grid;
}

ContourGrid read_contour_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open contour file '" + path + "'");
  CsvReader reader(in);
  const auto header = reader.next();
  if (!header || header->fields.size() != 3) {
    throw DataError("contour file '" + path + "' has an unexpected header");
  }
  ContourGrid grid;
  std::vector<double> w1, w2, z;
  while (auto row = reader.next()) {
    const auto a = parse_double(row->fields[0]);
    const auto b = parse_double(row->fields[1]);
    const auto c = parse_double(row->fields[2]);
    if (!a || !b || !c) {
      throw DataError("contour file '" + path + "' has a non-numeric row");
    }
    w1.push_back(*a);
    w2.push_back(*b);
    z.push_back(*c);
  }
  for (const double v : w1) {
    if (grid.w1_axis.empty() || v > grid.w1_axis.back()) grid.w1_axis.push_back(v);
    else break;
  }
  if (grid.w1_axis.empty() || w1.size() % grid.w1_axis.size() != 0) {
    throw DataError("contour file '" + path + "' is not a full grid");
  }
  const std::size_t n1 = grid.w1_axis.size();
  const std::size_t n2 = w1.size() / n1;
  for (std::size_t i = 0; i < n2; ++i) grid.w2_axis.push_back(w2[i * n1]);
  grid.z.assign(n2, std::vector<double>(n1));
  for (std::size_t i = 0; i < n2; ++i) {
    for (std::size_t j = 0; j < n1; ++j) grid.z[i][j] = z[i * n1 + j];
  }
  return grid;
}

void run_stage(const RunConfig& config, Stage stage) {
  run_stages(config, {stage}, false);
}

void run_pipeline(const RunConfig& config) {
  run_stages(config,
             {Stage::kIngest, Stage::kEvents, Stage::kCorrelate, Stage::kFit,
              Stage::kCompare, Stage::kContour},
             true);
}

}  // namespace resilience
