#include "resilience/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "config_json.hpp"
#include "resilience/errors.hpp"

namespace resilience {

namespace {

using nlohmann::ordered_json;

Timestamp require_time(const ordered_json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ConfigError("config: missing or non-string '" + key + "'");
  }
  const auto t = parse_timestamp(j[key].get<std::string>());
  if (!t) {
    throw ConfigError("config: unparseable timestamp in '" + key + "': " +
                      j[key].get<std::string>());
  }
  return *t;
}

void check_keys(const ordered_json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

namespace detail {

RunConfig config_from_json(const ordered_json& j) {
  check_keys(j,
             {"paths", "county", "state", "county_total_customers", "window",
              "thresholds", "grid", "columns", "parsing", "units",
              "unit_conversions", "features", "mcmc", "evidence", "priors",
              "split", "contour", "output", "seed", "force"},
             "top level");
  RunConfig c;

  if (!j.contains("paths")) throw ConfigError("config: missing 'paths'");
  const auto& paths = j["paths"];
  check_keys(paths, {"outage_csv", "weather_csvs", "out_dir"}, "paths");
  c.outage_csv = paths.value("outage_csv", "");
  if (paths.contains("weather_csvs")) {
    c.weather_csvs = paths["weather_csvs"].get<std::vector<std::string>>();
  }
  c.out_dir = paths.value("out_dir", c.out_dir);

  c.county = j.value("county", "");
  c.state = j.value("state", "");
  c.county_total_customers =
      j.value("county_total_customers", c.county_total_customers);

  if (!j.contains("window")) throw ConfigError("config: missing 'window'");
  check_keys(j["window"], {"start", "end"}, "window");
  c.window_start = require_time(j["window"], "start");
  c.window_end = require_time(j["window"], "end");

  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    check_keys(t, {"gap_hours", "magnitude", "forward_fill_limit"}, "thresholds");
    c.thresholds.gap_hours = t.value("gap_hours", c.thresholds.gap_hours);
    c.thresholds.magnitude = t.value("magnitude", c.thresholds.magnitude);
    c.thresholds.forward_fill_limit =
        t.value("forward_fill_limit", c.thresholds.forward_fill_limit);
  }
  if (j.contains("grid")) {
    check_keys(j["grid"], {"step_minutes"}, "grid");
    c.step_minutes = j["grid"].value("step_minutes", c.step_minutes);
  }
  if (j.contains("columns")) {
    const auto& cols = j["columns"];
    check_keys(cols, {"outage", "weather"}, "columns");
    if (cols.contains("outage")) {
      const auto& o = cols["outage"];
      check_keys(o, {"timestamp", "state", "county", "customers_out"},
                 "columns.outage");
      c.outage_columns.timestamp = o.value("timestamp", c.outage_columns.timestamp);
      c.outage_columns.state = o.value("state", c.outage_columns.state);
      c.outage_columns.county = o.value("county", c.outage_columns.county);
      c.outage_columns.customers_out =
          o.value("customers_out", c.outage_columns.customers_out);
    }
    if (cols.contains("weather")) {
      const auto& w = cols["weather"];
      check_keys(w,
                 {"station", "timestamp", "wind_speed", "wind_gust", "air_temp",
                  "precip_depth"},
                 "columns.weather");
      c.weather_columns.station = w.value("station", c.weather_columns.station);
      c.weather_columns.timestamp =
          w.value("timestamp", c.weather_columns.timestamp);
      c.weather_columns.wind_speed =
          w.value("wind_speed", c.weather_columns.wind_speed);
      c.weather_columns.wind_gust =
          w.value("wind_gust", c.weather_columns.wind_gust);
      c.weather_columns.air_temp = w.value("air_temp", c.weather_columns.air_temp);
      c.weather_columns.precip_depth =
          w.value("precip_depth", c.weather_columns.precip_depth);
    }
  }
  if (j.contains("parsing")) {
    const auto& p = j["parsing"];
    check_keys(p,
               {"missing_values", "trace_sentinel", "trace_depth",
                "source_utc_offset_minutes"},
               "parsing");
    if (p.contains("missing_values")) {
      c.missing_values = p["missing_values"].get<std::vector<std::string>>();
    }
    c.trace_sentinel = p.value("trace_sentinel", c.trace_sentinel);
    c.trace_depth = p.value("trace_depth", c.trace_depth);
    c.source_utc_offset_minutes =
        p.value("source_utc_offset_minutes", c.source_utc_offset_minutes);
  }
  if (j.contains("units")) {
    for (const auto& [key, value] : j["units"].items()) {
      c.units[key] = value.get<std::string>();
    }
  }
  if (j.contains("unit_conversions")) {
    for (const auto& [key, value] : j["unit_conversions"].items()) {
      check_keys(value, {"scale", "offset"}, "unit_conversions." + key);
      LinearConversion conv;
      conv.scale = value.value("scale", 1.0);
      conv.offset = value.value("offset", 0.0);
      c.unit_conversions[key] = conv;
    }
  }
  if (j.contains("features")) {
    const auto& f = j["features"];
    check_keys(f, {"customer_out_mode", "include_min_temp", "auc_transform"},
               "features");
    c.customer_out_mode = f.value("customer_out_mode", c.customer_out_mode);
    c.include_min_temp = f.value("include_min_temp", c.include_min_temp);
    c.auc_transform = f.value("auc_transform", c.auc_transform);
  }
  if (j.contains("mcmc")) {
    const auto& m = j["mcmc"];
    check_keys(m, {"n_chains", "n_warmup", "n_draws"}, "mcmc");
    c.mcmc.n_chains = m.value("n_chains", c.mcmc.n_chains);
    c.mcmc.n_warmup = m.value("n_warmup", c.mcmc.n_warmup);
    c.mcmc.n_draws = m.value("n_draws", c.mcmc.n_draws);
  }
  if (j.contains("evidence")) {
    const auto& e = j["evidence"];
    check_keys(e,
               {"n_rungs", "rung_warmup", "rung_draws", "rung_chains",
                "beta_min"},
               "evidence");
    c.evidence.n_rungs = e.value("n_rungs", c.evidence.n_rungs);
    c.evidence.rung_warmup = e.value("rung_warmup", c.evidence.rung_warmup);
    c.evidence.rung_draws = e.value("rung_draws", c.evidence.rung_draws);
    c.evidence.rung_chains = e.value("rung_chains", c.evidence.rung_chains);
    c.evidence.beta_min = e.value("beta_min", c.evidence.beta_min);
  }
  if (j.contains("priors")) {
    for (const auto& [key, value] : j["priors"].items()) {
      if (key == "sigma_scale") {
        c.sigma_scale = value.get<double>();
        continue;
      }
      check_keys(value, {"mean", "sd"}, "priors." + key);
      NormalPrior prior;
      prior.mean = value.value("mean", 0.0);
      prior.sd = value.value("sd", 1.0);
      c.prior_overrides[key] = prior;
    }
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    check_keys(s, {"test_fraction", "val_fraction"}, "split");
    c.test_fraction = s.value("test_fraction", c.test_fraction);
    c.val_fraction = s.value("val_fraction", c.val_fraction);
  }
  if (j.contains("contour")) {
    const auto& g = j["contour"];
    check_keys(g, {"n_points", "w1_range", "w2_range"}, "contour");
    c.contour.n_points = g.value("n_points", c.contour.n_points);
    const auto read_range = [&](const char* key, std::optional<double>& lo,
                                std::optional<double>& hi) {
      if (!g.contains(key)) return;
      const auto& r = g[key];
      if (!r.is_array() || r.size() != 2) {
        throw ConfigError(std::string("config: contour.") + key +
                          " must be [min, max]");
      }
      lo = r[0].get<double>();
      hi = r[1].get<double>();
    };
    read_range("w1_range", c.contour.w1_min, c.contour.w1_max);
    read_range("w2_range", c.contour.w2_min, c.contour.w2_max);
  }
  if (j.contains("output")) {
    check_keys(j["output"], {"dump_aligned_grid"}, "output");
    c.dump_aligned_grid = j["output"].value("dump_aligned_grid", false);
  }
  c.seed = j.value("seed", c.seed);
  c.force = j.value("force", c.force);
  return c;
}

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["paths"] = {{"outage_csv", c.outage_csv},
                {"weather_csvs", c.weather_csvs},
                {"out_dir", c.out_dir}};
  j["county"] = c.county;
  j["state"] = c.state;
  j["county_total_customers"] = c.county_total_customers;
  j["window"] = {{"start", format_timestamp(c.window_start)},
                 {"end", format_timestamp(c.window_end)}};
  j["thresholds"] = {{"gap_hours", c.thresholds.gap_hours},
                     {"magnitude", c.thresholds.magnitude},
                     {"forward_fill_limit", c.thresholds.forward_fill_limit}};
  j["grid"] = {{"step_minutes", c.step_minutes}};
  j["columns"] = {{"outage",
                   {{"timestamp", c.outage_columns.timestamp},
                    {"state", c.outage_columns.state},
                    {"county", c.outage_columns.county},
                    {"customers_out", c.outage_columns.customers_out}}},
                  {"weather",
                   {{"station", c.weather_columns.station},
                    {"timestamp", c.weather_columns.timestamp},
                    {"wind_speed", c.weather_columns.wind_speed},
                    {"wind_gust", c.weather_columns.wind_gust},
                    {"air_temp", c.weather_columns.air_temp},
                    {"precip_depth", c.weather_columns.precip_depth}}}};
  j["parsing"] = {{"missing_values", c.missing_values},
                  {"trace_sentinel", c.trace_sentinel},
                  {"trace_depth", c.trace_depth},
                  {"source_utc_offset_minutes", c.source_utc_offset_minutes}};
  j["units"] = c.units.empty() ? ordered_json::object() : ordered_json(c.units);
  ordered_json conversions = ordered_json::object();
  for (const auto& [key, conv] : c.unit_conversions) {
    conversions[key] = {{"scale", conv.scale}, {"offset", conv.offset}};
  }
  j["unit_conversions"] = conversions;
  j["features"] = {{"customer_out_mode", c.customer_out_mode},
                   {"include_min_temp", c.include_min_temp},
                   {"auc_transform", c.auc_transform}};
  j["mcmc"] = {{"n_chains", c.mcmc.n_chains},
               {"n_warmup", c.mcmc.n_warmup},
               {"n_draws", c.mcmc.n_draws}};
  j["evidence"] = {{"n_rungs", c.evidence.n_rungs},
                   {"rung_warmup", c.evidence.rung_warmup},
                   {"rung_draws", c.evidence.rung_draws},
                   {"rung_chains", c.evidence.rung_chains},
                   {"beta_min", c.evidence.beta_min}};
  ordered_json priors = ordered_json::object();
  for (const auto& [key, prior] : c.prior_overrides) {
    priors[key] = {{"mean", prior.mean}, {"sd", prior.sd}};
  }
  if (c.sigma_scale) priors["sigma_scale"] = *c.sigma_scale;
  j["priors"] = priors;
  j["split"] = {{"test_fraction", c.test_fraction},
                {"val_fraction", c.val_fraction}};
  j["contour"] = ordered_json{{"n_points", c.contour.n_points}};
  if (c.contour.w1_min) {
    j["contour"]["w1_range"] = {*c.contour.w1_min, *c.contour.w1_max};
  }
  if (c.contour.w2_min) {
    j["contour"]["w2_range"] = {*c.contour.w2_min, *c.contour.w2_max};
  }
  j["output"] = {{"dump_aligned_grid", c.dump_aligned_grid}};
  j["seed"] = c.seed;
  j["force"] = c.force;
  return j;
}

}  // namespace detail

RunConfig RunConfig::from_json_string(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c = detail::config_from_json(j);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  RunConfig c = from_json_string(buffer.str());

  // Relative input paths are relative to the config file.
  const auto base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](std::string& p) {
    if (p.empty()) return;
    std::filesystem::path fp(p);
    if (fp.is_relative()) p = (base / fp).string();
  };
  resolve(c.outage_csv);
  for (auto& w : c.weather_csvs) resolve(w);
  return c;
}

void RunConfig::validate() const {
  if (outage_csv.empty()) throw ConfigError("config: paths.outage_csv is required");
  if (weather_csvs.empty()) {
    throw ConfigError("config: paths.weather_csvs must list at least one file");
  }
  if (county.empty() || state.empty()) {
    throw ConfigError("config: county and state filters are required");
  }
  if (county_total_customers <= 0) {
    throw ConfigError("config: county_total_customers must be positive");
  }
  if (!(window_start < window_end)) {
    throw ConfigError("config: window start must precede end");
  }
  if (thresholds.gap_hours <= 0 || thresholds.magnitude <= 0 ||
      thresholds.forward_fill_limit < 0) {
    throw ConfigError("config: thresholds must be positive");
  }
  if (step_minutes <= 0) throw ConfigError("config: step_minutes must be positive");
  if (customer_out_mode != "peak" && customer_out_mode != "cumulative") {
    throw ConfigError("config: customer_out_mode must be peak or cumulative");
  }
  if (auc_transform != "log1p" && auc_transform != "none") {
    throw ConfigError("config: auc_transform must be log1p or none");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0) ||
      !(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("config: split fractions must lie in (0, 1)");
  }
  if (mcmc.n_chains < 2) throw ConfigError("config: mcmc.n_chains must be >= 2");
  if (mcmc.n_warmup < 0 || mcmc.n_draws <= 0) {
    throw ConfigError("config: mcmc draw counts must be positive");
  }
  if (evidence.n_rungs < 2 || evidence.rung_draws <= 0 ||
      evidence.rung_chains < 1) {
    throw ConfigError("config: evidence settings out of range");
  }
  if (!(evidence.beta_min > 0.0 && evidence.beta_min < 1.0)) {
    throw ConfigError("config: evidence.beta_min must lie in (0, 1)");
  }
  if (contour.n_points < 2) {
    throw ConfigError("config: contour.n_points must be at least 2");
  }
  if (sigma_scale && !(*sigma_scale > 0.0)) {
    throw ConfigError("config: priors.sigma_scale must be positive");
  }
  for (const auto& [name, prior] : prior_overrides) {
    if (!(prior.sd > 0.0)) {
      throw ConfigError("config: priors." + name + ".sd must be positive");
    }
  }
  const auto bad_range = [](const std::optional<double>& lo,
                            const std::optional<double>& hi) {
    return lo.has_value() != hi.has_value() || (lo && !(*lo < *hi));
  };
  if (bad_range(contour.w1_min, contour.w1_max) ||
      bad_range(contour.w2_min, contour.w2_max)) {
    throw ConfigError("config: contour ranges must be [min, max] with min < max");
  }
}

ParseOptions RunConfig::parse_options() const {
  ParseOptions opts;
  opts.missing_values = missing_values;
  opts.trace_sentinel = trace_sentinel;
  opts.trace_depth = trace_depth;
  opts.source_utc_offset_minutes = source_utc_offset_minutes;
  opts.window_start = window_start;
  opts.window_end = window_end;
  return opts;
}

}  // namespace resilience
