// Copyright 2026 The FedREP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fedrep: federated load-forecasting simulator.
//
//   fedrep prepare         --config scenario.json [--synthetic]
//   fedrep run-federated   --config scenario.json
//   fedrep run-centralized --config scenario.json
//   fedrep compare         --config scenario.json
//   fedrep evaluate        --config scenario.json --checkpoint final.frep
//
// Common flags: --seed, --threads, --output-dir, --set key=value (repeatable).
// FEDREP_LOG selects log verbosity (trace, debug, info, warn, error, off).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fedrep/commands.hpp"
#include "fedrep/config.hpp"
#include "fedrep/error.hpp"
#include "fedrep/kernels.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string output_dir;
  std::vector<std::string> overrides;
  bool synthetic = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed (overrides master_seed)");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--output-dir", o.output_dir, "Output directory (overrides output_dir)");
  cmd->add_option("--set", o.overrides, "Config override, dotted.key=value");
  cmd->add_flag("--synthetic", o.synthetic, "Use the seeded synthetic dataset");
}

fedrep::config::ScenarioConfig resolve(const CommonOptions& o) {
  auto overrides = o.overrides;
  if (o.seed) overrides.push_back("master_seed=" + std::to_string(*o.seed));
  auto cfg = fedrep::config::load_config(o.config_path, overrides);
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  fedrep::kernels::set_num_threads(o.threads);
  return cfg;
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("fedrep"));
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("FEDREP_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Federated LSTM load forecasting for retail energy providers"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string checkpoint;
  std::optional<int> postcode;
  std::string federated_dir, centralized_dir;

  auto* prepare = app.add_subcommand("prepare", "Build per-retailer windowed datasets");
  auto* federated = app.add_subcommand("run-federated", "Run the federated scenario");
  auto* centralized = app.add_subcommand("run-centralized", "Train the pooled-data baseline");
  auto* compare = app.add_subcommand("compare", "Compare federated and centralized artifacts");
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a prepared retailer");
  for (auto* cmd : {prepare, federated, centralized, compare, evaluate}) add_common(cmd, opts);
  compare->add_option("--federated-dir", federated_dir, "Defaults to <output-dir>/federated");
  compare->add_option("--centralized-dir", centralized_dir, "Defaults to <output-dir>/centralized");
  evaluate->add_option("--checkpoint", checkpoint, "Parameter file (.frep)")->required();
  evaluate->add_option("--postcode", postcode, "Retailer to score (default: holdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(opts);
    if (prepare->parsed()) {
      fedrep::commands::cmd_prepare(cfg, opts.synthetic, std::cout);
    } else if (federated->parsed()) {
      fedrep::commands::cmd_run_federated(cfg, std::cout);
    } else if (centralized->parsed()) {
      fedrep::commands::cmd_run_centralized(cfg, std::cout);
    } else if (compare->parsed()) {
      const auto fdir = federated_dir.empty() ? cfg.output_dir / "federated"
                                              : std::filesystem::path(federated_dir);
      const auto cdir = centralized_dir.empty() ? cfg.output_dir / "centralized"
                                                : std::filesystem::path(centralized_dir);
      fedrep::commands::cmd_compare(fdir, cdir, cfg.output_dir, std::cout);
    } else if (evaluate->parsed()) {
      fedrep::commands::cmd_evaluate(cfg, checkpoint, postcode, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "fedrep: error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
