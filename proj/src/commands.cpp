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

#include "fedrep/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "csv.hpp"
#include "fedrep/error.hpp"
#include "fedrep/synthetic.hpp"

namespace fedrep::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path prepared_dir(const config::ScenarioConfig& cfg) { return cfg.output_dir / "prepared"; }
fs::path federated_dir(const config::ScenarioConfig& cfg) { return cfg.output_dir / "federated"; }
fs::path centralized_dir(const config::ScenarioConfig& cfg) { return cfg.output_dir / "centralized"; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory '" + dir.string() + "'");
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("missing artifact '" + path.string() + "'");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!csv::trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

void write_dataset_rows(std::ostream& out, std::string_view split, const data::WindowedDataset& ds) {
  for (std::size_t i = 0; i < ds.count(); ++i) {
    out << split << ',' << format_timestamp(ds.target_start[i]);
    for (double v : ds.input(i)) out << ',' << csv::format_double(v);
    for (double v : ds.target(i)) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

void write_eval(const fs::path& path, const metrics::EvalResult& scaled,
                const metrics::EvalResult& raw) {
  auto out = open_out(path);
  out << "mse_scale,mse";
  for (std::size_t k = 0; k < scaled.per_horizon_mse.size(); ++k) out << ",mse_h" << (k + 1);
  out << ",n_predictions\n";
  for (const auto* e : {&scaled, &raw}) {
    out << (e == &scaled ? "scaled" : "raw") << ',' << csv::format_double(e->mse);
    for (double v : e->per_horizon_mse) out << ',' << csv::format_double(v);
    out << ',' << e->n_predictions << '\n';
  }
}

// Returns the mse column of the row labelled `scale`.
double read_eval_mse(const fs::path& path, std::string_view scale) {
  const auto lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() >= 2 && f[0] == scale) {
      if (auto v = csv::to_double(f[1])) return *v;
    }
  }
  throw Error("'" + path.string() + "' has no " + std::string(scale) + " row");
}

std::vector<std::optional<double>> read_loss_column(const fs::path& path, std::size_t column) {
  const auto lines = read_lines(path);
  std::vector<std::optional<double>> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() <= column) throw ParseError(path.string(), i + 1, "too few columns");
    out.push_back(csv::to_double(f[column]));
  }
  return out;
}

void evaluate_both(const lstm::ModelParams& params, const data::PreparedRetailer& holdout,
                   metrics::EvalResult& scaled, metrics::EvalResult& raw) {
  scaled = metrics::evaluate_holdout(params, holdout.test, metrics::ScaleMode::kScaled);
  raw = metrics::evaluate_holdout(params, holdout.test, metrics::ScaleMode::kRaw, holdout.scaler);
}

}  // namespace

void write_prepared(const fs::path& dir, const data::PreparedRetailer& rep) {
  ensure_dir(dir);
  const auto& ds = rep.train;
  {
    auto out = open_out(dir / fmt::format("rep_{}.csv", rep.postcode));
    out << "split,target_start";
    for (std::size_t k = 0; k < ds.lookback; ++k) out << ",x" << k;
    for (std::size_t k = 0; k < ds.lookahead; ++k) out << ",y" << k;
    out << '\n';
    write_dataset_rows(out, "train", rep.train);
    write_dataset_rows(out, "test", rep.test);
  }
  json sidecar = {{"postcode", rep.postcode},
                  {"min", rep.scaler.min},
                  {"max", rep.scaler.max},
                  {"lookback", ds.lookback},
                  {"lookahead", ds.lookahead},
                  {"train_windows", rep.train.count()},
                  {"test_windows", rep.test.count()}};
  auto out = open_out(dir / fmt::format("rep_{}_scaler.json", rep.postcode));
  out << sidecar.dump(2) << '\n';
}

data::PreparedRetailer load_prepared(const fs::path& dir, int postcode) {
  const auto scaler_path = dir / fmt::format("rep_{}_scaler.json", postcode);
  const auto data_path = dir / fmt::format("rep_{}.csv", postcode);
  std::ifstream sin(scaler_path);
  if (!sin) {
    throw Error("missing prepared data for postcode " + std::to_string(postcode) + " ('" +
                scaler_path.string() + "'); run `fedrep prepare` first");
  }
  data::PreparedRetailer rep;
  rep.postcode = postcode;
  std::size_t lookback = 0, lookahead = 0;
  try {
    const auto j = json::parse(sin);
    rep.scaler = {j.at("min").get<double>(), j.at("max").get<double>()};
    lookback = j.at("lookback").get<std::size_t>();
    lookahead = j.at("lookahead").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error("'" + scaler_path.string() + "': " + e.what());
  }
  rep.train.lookback = rep.test.lookback = lookback;
  rep.train.lookahead = rep.test.lookahead = lookahead;

  const auto lines = read_lines(data_path);
  std::vector<double> in(lookback), target(lookahead);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() != 2 + lookback + lookahead) {
      throw ParseError(data_path.string(), i + 1, "wrong number of columns");
    }
    const auto ts = parse_timestamp(f[1]);
    if (!ts) throw ParseError(data_path.string(), i + 1, "bad timestamp");
    for (std::size_t k = 0; k < lookback + lookahead; ++k) {
      const auto v = csv::to_double(f[2 + k]);
      if (!v) throw ParseError(data_path.string(), i + 1, "bad value");
      (k < lookback ? in[k] : target[k - lookback]) = *v;
    }
    if (f[0] == "train") {
      rep.train.push_back(in, target, *ts);
    } else if (f[0] == "test") {
      rep.test.push_back(in, target, *ts);
    } else {
      throw ParseError(data_path.string(), i + 1, "split must be train or test");
    }
  }
  return rep;
}

PrepareResult cmd_prepare(const config::ScenarioConfig& cfg, bool synthetic, std::ostream& out) {
  cfg.validate();
  std::vector<int> all = cfg.postcodes;
  all.push_back(cfg.holdout_postcode);

  std::vector<data::RawReading> readings;
  if (synthetic) {
    synthetic::SyntheticSpec spec;
    spec.postcodes = all;
    spec.days = cfg.synthetic.days;
    spec.customers_per_postcode = cfg.synthetic.customers_per_postcode;
    spec.noise = cfg.synthetic.noise;
    spec.seed = cfg.master_seed;
    readings = synthetic::generate_readings(spec);
    ensure_dir(cfg.output_dir);
    data::write_readings(cfg.output_dir / "synthetic_readings.csv", readings);
    spdlog::info("generated {} synthetic readings", readings.size());
  } else {
    if (cfg.dataset_path.empty()) throw Error("config: dataset.path is not set (or pass --synthetic)");
    readings = data::load_readings(cfg.dataset_path, cfg.dataset_layout);
    spdlog::info("loaded {} readings from {}", readings.size(), cfg.dataset_path.string());
  }
  const auto gc = data::filter_gc(readings);

  PrepareResult result;
  const auto gaps = cfg.forward_fill ? data::GapPolicy::kForwardFill : data::GapPolicy::kError;
  for (int pc : all) {
    try {
      result.retailers.push_back(data::prepare_retailer(gc, pc, cfg.train_fraction, cfg.lookback,
                                                        cfg.lookahead, gaps));
    } catch (const Error& e) {
      throw Error("postcode " + std::to_string(pc) + ": " + e.what());
    }
    const auto& rep = result.retailers.back();
    write_prepared(prepared_dir(cfg), rep);
    out << "postcode " << pc << (pc == cfg.holdout_postcode ? " (holdout)" : "") << ": "
        << rep.train.count() << " train windows, " << rep.test.count() << " test windows\n";
  }
  return result;
}

std::vector<fed::ClientState> load_clients(const config::ScenarioConfig& cfg) {
  std::vector<fed::ClientState> clients;
  for (std::size_t i = 0; i < cfg.postcodes.size(); ++i) {
    auto rep = load_prepared(prepared_dir(cfg), cfg.postcodes[i]);
    if (rep.train.lookahead != cfg.lookahead || rep.train.lookback != cfg.lookback) {
      throw Error("prepared data for postcode " + std::to_string(cfg.postcodes[i]) +
                  " has a different window shape than the config; rerun `fedrep prepare`");
    }
    clients.push_back({static_cast<int>(i), std::move(rep.train), std::move(rep.test)});
  }
  return clients;
}

FederatedResult cmd_run_federated(const config::ScenarioConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto clients = load_clients(cfg);
  const auto holdout = load_prepared(prepared_dir(cfg), cfg.holdout_postcode);
  const auto dir = federated_dir(cfg);
  ensure_dir(dir);
  const auto dims = cfg.dims();

  FederatedResult result;
  std::vector<metrics::RunOutcome> scaled_runs, raw_runs;
  auto runs_csv = open_out(dir / "holdout_runs.csv");
  runs_csv << "run,master_seed,rounds,terminated_by,mse_scaled,mse_raw\n";

  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = cfg.master_seed + rep;
    auto rounds_csv = open_out(dir / fmt::format("rounds_run{}.csv", rep));
    fed::write_round_header(rounds_csv, clients);
    auto on_round = [&](const fed::RoundReport& r, const fed::GlobalState& state) {
      fed::write_round_row(rounds_csv, r, clients);
      spdlog::info("run {} round {}: avg loss {:.6f}", rep, r.round, r.avg_loss);
      if (cfg.checkpoint_every > 0 && r.round % cfg.checkpoint_every == 0) {
        ensure_dir(dir / "checkpoints");
        lstm::save_checkpoint(dir / "checkpoints" / fmt::format("run{}_round{}.frep", rep, r.round),
                              state.global);
      }
    };
    auto run = fed::run_training(clients, dims, cfg.round, seed, on_round);
    lstm::save_checkpoint(dir / fmt::format("final_run{}.frep", rep), lstm::flatten(run.final_params));

    metrics::EvalResult scaled, raw;
    evaluate_both(run.final_params, holdout, scaled, raw);
    runs_csv << rep << ',' << seed << ',' << run.rounds() << ',' << fed::to_string(run.terminated_by)
             << ',' << csv::format_double(scaled.mse) << ',' << csv::format_double(raw.mse) << '\n';
    out << fmt::format("run {}: {} rounds ({}), holdout mse {:.6f} scaled / {:.6f} raw\n", rep,
                       run.rounds(), fed::to_string(run.terminated_by), scaled.mse, raw.mse);
    if (rep == 0) {
      write_eval(dir / "eval.csv", scaled, raw);
      metrics::write_predictions(dir / fmt::format("predictions_{}.csv", cfg.holdout_postcode),
                                 holdout.test,
                                 cfg.eval_scale == metrics::ScaleMode::kScaled ? scaled : raw);
    }
    scaled_runs.push_back({run.rounds(), scaled.mse});
    raw_runs.push_back({run.rounds(), raw.mse});
    result.runs.push_back(std::move(run));
    result.holdout_scaled.push_back(std::move(scaled));
    result.holdout_raw.push_back(std::move(raw));
  }

  result.summary_scaled = metrics::summarize_scenario(cfg.scenario_id, clients.size(), scaled_runs);
  result.summary_raw = metrics::summarize_scenario(cfg.scenario_id, clients.size(), raw_runs);
  auto summary = open_out(dir / "scenario_summary.csv");
  metrics::write_summary_header(summary);
  metrics::write_summary_row(summary, result.summary_scaled, metrics::ScaleMode::kScaled);
  metrics::write_summary_row(summary, result.summary_raw, metrics::ScaleMode::kRaw);
  out << fmt::format("scenario {}: {} retailers, mse min {:.6f} max {:.6f} mean {:.6f} (scaled)\n",
                     cfg.scenario_id, clients.size(), result.summary_scaled.min_mse,
                     result.summary_scaled.max_mse, result.summary_scaled.mean_mse);
  return result;
}

CentralizedRunResult cmd_run_centralized(const config::ScenarioConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto clients = load_clients(cfg);
  const auto holdout = load_prepared(prepared_dir(cfg), cfg.holdout_postcode);
  const auto dir = centralized_dir(cfg);
  ensure_dir(dir);

  std::vector<data::WindowedDataset> parts;
  for (const auto& c : clients) parts.push_back(c.train_data);
  const auto pooled = data::concat(parts);

  auto train = cfg.round.train;
  train.seed = fed::client_seed(cfg.master_seed, 0);
  train.epoch_offset = 0;
  const auto initial = lstm::init_params(cfg.dims(), fed::init_seed(cfg.master_seed));

  CentralizedRunResult result;
  result.training = fed::train_centralized(initial, pooled, train, cfg.centralized_epochs);
  lstm::save_checkpoint(dir / "final.frep", lstm::flatten(result.training.params));
  {
    auto epochs = open_out(dir / "epochs.csv");
    epochs << "epoch,loss\n";
    for (std::size_t e = 0; e < result.training.epoch_losses.size(); ++e) {
      epochs << (e + 1) << ',' << csv::format_double(result.training.epoch_losses[e]) << '\n';
    }
  }
  evaluate_both(result.training.params, holdout, result.holdout_scaled, result.holdout_raw);
  write_eval(dir / "eval.csv", result.holdout_scaled, result.holdout_raw);
  metrics::write_predictions(dir / fmt::format("predictions_{}.csv", cfg.holdout_postcode),
                             holdout.test,
                             cfg.eval_scale == metrics::ScaleMode::kScaled ? result.holdout_scaled
                                                                           : result.holdout_raw);
  out << fmt::format("centralized: {} epochs on {} pooled windows, holdout mse {:.6f} scaled / "
                     "{:.6f} raw\n",
                     result.training.epoch_losses.size(), pooled.count(),
                     result.holdout_scaled.mse, result.holdout_raw.mse);
  return result;
}

Comparison cmd_compare(const fs::path& fed_dir, const fs::path& cent_dir, const fs::path& output_dir,
                       std::ostream& out) {
  Comparison c;
  c.federated_losses = read_loss_column(fed_dir / "rounds_run0.csv", 1);
  c.centralized_losses = read_loss_column(cent_dir / "epochs.csv", 1);
  c.federated_mse = read_eval_mse(fed_dir / "eval.csv", "scaled");
  c.centralized_mse = read_eval_mse(cent_dir / "eval.csv", "scaled");
  c.delta = c.federated_mse - c.centralized_mse;

  ensure_dir(output_dir);
  {
    auto table = open_out(output_dir / "comparison.csv");
    table << "step,federated_round_loss,centralized_epoch_loss\n";
    const auto n = std::max(c.federated_losses.size(), c.centralized_losses.size());
    auto cell = [](const std::vector<std::optional<double>>& v, std::size_t i) {
      return i < v.size() && v[i] ? csv::format_double(*v[i]) : std::string();
    };
    for (std::size_t i = 0; i < n; ++i) {
      table << (i + 1) << ',' << cell(c.federated_losses, i) << ','
            << cell(c.centralized_losses, i) << '\n';
    }
  }
  auto summary = open_out(output_dir / "comparison_summary.csv");
  summary << "mse_scale,federated_mse,centralized_mse,delta\n";
  for (const char* scale : {"scaled", "raw"}) {
    const double f = read_eval_mse(fed_dir / "eval.csv", scale);
    const double z = read_eval_mse(cent_dir / "eval.csv", scale);
    summary << scale << ',' << csv::format_double(f) << ',' << csv::format_double(z) << ','
            << csv::format_double(f - z) << '\n';
  }
  out << fmt::format("holdout mse (scaled): federated {:.6f}, centralized {:.6f}, delta {:+.6f}\n",
                     c.federated_mse, c.centralized_mse, c.delta);
  return c;
}

metrics::EvalResult cmd_evaluate(const config::ScenarioConfig& cfg, const fs::path& checkpoint,
                                 std::optional<int> postcode, std::ostream& out) {
  cfg.validate();
  const int pc = postcode.value_or(cfg.holdout_postcode);
  const auto rep = load_prepared(prepared_dir(cfg), pc);
  const auto params = lstm::unflatten(lstm::load_checkpoint(checkpoint), cfg.dims());
  metrics::EvalResult scaled, raw;
  evaluate_both(params, rep, scaled, raw);
  const auto dir = cfg.output_dir / "evaluation";
  ensure_dir(dir);
  write_eval(dir / fmt::format("eval_{}.csv", pc), scaled, raw);
  const auto& chosen = cfg.eval_scale == metrics::ScaleMode::kScaled ? scaled : raw;
  metrics::write_predictions(dir / fmt::format("predictions_{}.csv", pc), rep.test, chosen);
  out << fmt::format("postcode {}: mse {:.6f} scaled / {:.6f} raw over {} predictions\n", pc,
                     scaled.mse, raw.mse, scaled.n_predictions);
  return chosen;
}

}  // namespace fedrep::commands
