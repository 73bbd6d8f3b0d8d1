#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "resilience/config.hpp"
#include "resilience/errors.hpp"
#include "resilience/pipeline.hpp"
#include "resilience/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run configuration (JSON)")
      ->required();
  cmd->add_option("--seed", args.seed, "Override the top-level random seed");
  cmd->add_option("--out", args.out_dir, "Override the output directory");
  cmd->add_flag("--force", args.force,
                "Proceed past the minimum-events refusal");
}

resilience::RunConfig load_config(const CommonArgs& args) {
  auto config = resilience::RunConfig::load(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.out_dir) config.out_dir = *args.out_dir;
  if (args.force) config.force = true;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "County-level outage/weather pipeline: event extraction, resilience "
      "metrics, Bayesian regression and model comparison"};
  app.set_version_flag("--version", resilience::kVersion);
  app.require_subcommand(1);

  struct SubCmd {
    const char* name;
    const char* help;
    std::optional<resilience::Stage> stage;  // nullopt = run-all
  };
  const SubCmd subcommands[] = {
      {"ingest", "Parse inputs, build the aligned grid, write rejects reports",
       resilience::Stage::kIngest},
      {"events", "Extract significant events and write the event table",
       resilience::Stage::kEvents},
      {"correlate", "Write the Pearson correlation matrix",
       resilience::Stage::kCorrelate},
      {"fit", "Fit the regression models and write posteriors and evaluation",
       resilience::Stage::kFit},
      {"compare", "Estimate marginal likelihoods and Bayes factors",
       resilience::Stage::kCompare},
      {"contour", "Export prediction surfaces per precipitation regime",
       resilience::Stage::kContour},
      {"run-all", "Run the whole pipeline and write the full bundle",
       std::nullopt},
  };

  CommonArgs args;
  std::optional<resilience::Stage> chosen_stage;
  bool run_all = false;
  for (const auto& sub : subcommands) {
    auto* cmd = app.add_subcommand(sub.name, sub.help);
    add_common(cmd, args);
    cmd->callback([&chosen_stage, &run_all, stage = sub.stage]() {
      chosen_stage = stage;
      run_all = !stage.has_value();
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const auto config = load_config(args);
    if (run_all) {
      resilience::run_pipeline(config);
    } else {
      resilience::run_stage(config, *chosen_stage);
    }
    return kExitOk;
  } catch (const resilience::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const resilience::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const resilience::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
