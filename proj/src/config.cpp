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

#include "fedrep/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "fedrep/error.hpp"

namespace fedrep::config {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::string_view where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw Error("config: '" + std::string(where) + "' must be an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) {
      throw Error("config: unknown key '" + (where.empty() ? k : std::string(where) + "." + k) +
                  "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

json section(const json& j, const char* key, std::initializer_list<const char*> known) {
  if (!j.contains(key)) return json::object();
  reject_unknown(j.at(key), key, known);
  return j.at(key);
}

std::string key_hex(const privacy::Key& key) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (auto b : key) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

}  // namespace

privacy::Key parse_key_hex(std::string_view hex) {
  if (hex.size() != 2 * privacy::kKeyBytes) {
    throw Error("codec.key_hex must be 64 hex digits");
  }
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error("codec.key_hex contains a non-hex character");
  };
  privacy::Key key{};
  for (std::size_t i = 0; i < key.size(); ++i) {
    key[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) * 16 + nibble(hex[2 * i + 1]));
  }
  return key;
}

void ScenarioConfig::validate() const {
  if (postcodes.empty()) throw Error("config: postcodes must not be empty");
  std::set<int> seen;
  for (int pc : postcodes) {
    if (!seen.insert(pc).second) throw Error("config: duplicate postcode " + std::to_string(pc));
  }
  if (seen.contains(holdout_postcode)) {
    throw Error("config: holdout_postcode " + std::to_string(holdout_postcode) +
                " is also a training postcode");
  }
  if (repetitions == 0) throw Error("config: repetitions must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("config: data.train_fraction must lie in (0, 1)");
  }
  if (lookback == 0 || lookahead == 0 || hidden1 == 0 || hidden2 == 0) {
    throw Error("config: window and hidden sizes must be positive");
  }
  if (output_dir.empty()) throw Error("config: output_dir must not be empty");
  round.validate();
}

ScenarioConfig from_json(const json& j) {
  reject_unknown(j, "",
                 {"scenario_id", "dataset", "postcodes", "holdout_postcode", "output_dir",
                  "master_seed", "repetitions", "data", "model", "rounds", "train", "dp", "codec",
                  "convergence", "centralized", "checkpoint_every", "eval_scale", "synthetic"});
  ScenarioConfig c;
  read(j, "scenario_id", c.scenario_id);
  read(j, "postcodes", c.postcodes);
  read(j, "holdout_postcode", c.holdout_postcode);
  std::string out_dir = c.output_dir.string();
  read(j, "output_dir", out_dir);
  c.output_dir = out_dir;
  read(j, "master_seed", c.master_seed);
  read(j, "repetitions", c.repetitions);
  read(j, "checkpoint_every", c.checkpoint_every);

  const auto ds = section(j, "dataset", {"path", "layout", "forward_fill"});
  std::string path;
  read(ds, "path", path);
  c.dataset_path = path;
  std::string layout = "long";
  read(ds, "layout", layout);
  if (layout == "long") {
    c.dataset_layout = data::CsvLayout::kLong;
  } else if (layout == "ausgrid_wide") {
    c.dataset_layout = data::CsvLayout::kAusgridWide;
  } else {
    throw Error("config: dataset.layout must be 'long' or 'ausgrid_wide'");
  }
  read(ds, "forward_fill", c.forward_fill);

  const auto dj = section(j, "data", {"train_fraction", "lookback", "lookahead"});
  read(dj, "train_fraction", c.train_fraction);
  read(dj, "lookback", c.lookback);
  read(dj, "lookahead", c.lookahead);

  const auto mj = section(j, "model", {"hidden1", "hidden2"});
  read(mj, "hidden1", c.hidden1);
  read(mj, "hidden2", c.hidden2);

  const auto rj = section(j, "rounds", {"max_rounds", "client_fraction"});
  read(rj, "max_rounds", c.round.max_rounds);
  read(rj, "client_fraction", c.round.client_fraction);

  const auto tj =
      section(j, "train", {"learning_rate", "dropout_rate", "batch_size", "local_epochs"});
  read(tj, "learning_rate", c.round.train.learning_rate);
  read(tj, "dropout_rate", c.round.train.dropout_rate);
  read(tj, "batch_size", c.round.train.batch_size);
  read(tj, "local_epochs", c.round.train.local_epochs);

  const auto pj = section(j, "dp", {"enabled", "epsilon", "delta", "clip_norm", "server_enabled"});
  read(pj, "enabled", c.round.dp.enabled);
  read(pj, "epsilon", c.round.dp.epsilon);
  read(pj, "delta", c.round.dp.delta);
  read(pj, "clip_norm", c.round.dp.clip_norm);
  bool server_enabled = false;
  read(pj, "server_enabled", server_enabled);
  c.round.server_dp = c.round.dp;
  c.round.server_dp.enabled = server_enabled;

  const auto cj = section(j, "codec", {"scheme", "key_hex"});
  std::string scheme = "identity";
  read(cj, "scheme", scheme);
  if (scheme == "identity") {
    c.round.codec = privacy::Codec::identity();
  } else if (scheme == "symmetric") {
    std::string hex;
    read(cj, "key_hex", hex);
    c.round.codec = privacy::Codec::symmetric(parse_key_hex(hex));
  } else {
    throw Error("config: codec.scheme must be 'identity' or 'symmetric'");
  }

  const auto vj = section(j, "convergence", {"patience", "min_rel_improvement"});
  read(vj, "patience", c.round.convergence.patience);
  read(vj, "min_rel_improvement", c.round.convergence.min_rel_improvement);

  const auto zj = section(j, "centralized", {"epochs"});
  read(zj, "epochs", c.centralized_epochs);

  std::string scale = "scaled";
  read(j, "eval_scale", scale);
  if (scale == "scaled") {
    c.eval_scale = metrics::ScaleMode::kScaled;
  } else if (scale == "raw") {
    c.eval_scale = metrics::ScaleMode::kRaw;
  } else {
    throw Error("config: eval_scale must be 'scaled' or 'raw'");
  }

  const auto sj = section(j, "synthetic", {"days", "customers_per_postcode", "noise"});
  read(sj, "days", c.synthetic.days);
  read(sj, "customers_per_postcode", c.synthetic.customers_per_postcode);
  read(sj, "noise", c.synthetic.noise);

  c.validate();
  return c;
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["scenario_id"] = c.scenario_id;
  j["dataset"] = {{"path", c.dataset_path.string()},
                  {"layout", c.dataset_layout == data::CsvLayout::kLong ? "long" : "ausgrid_wide"},
                  {"forward_fill", c.forward_fill}};
  j["postcodes"] = c.postcodes;
  j["holdout_postcode"] = c.holdout_postcode;
  j["output_dir"] = c.output_dir.string();
  j["master_seed"] = c.master_seed;
  j["repetitions"] = c.repetitions;
  j["data"] = {{"train_fraction", c.train_fraction},
               {"lookback", c.lookback},
               {"lookahead", c.lookahead}};
  j["model"] = {{"hidden1", c.hidden1}, {"hidden2", c.hidden2}};
  j["rounds"] = {{"max_rounds", c.round.max_rounds},
                 {"client_fraction", c.round.client_fraction}};
  j["train"] = {{"learning_rate", c.round.train.learning_rate},
                {"dropout_rate", c.round.train.dropout_rate},
                {"batch_size", c.round.train.batch_size},
                {"local_epochs", c.round.train.local_epochs}};
  j["dp"] = {{"enabled", c.round.dp.enabled},
             {"epsilon", c.round.dp.epsilon},
             {"delta", c.round.dp.delta},
             {"clip_norm", c.round.dp.clip_norm},
             {"server_enabled", c.round.server_dp.enabled}};
  if (c.round.codec.scheme == privacy::Codec::Scheme::kIdentity) {
    j["codec"] = {{"scheme", "identity"}};
  } else {
    j["codec"] = {{"scheme", "symmetric"}, {"key_hex", key_hex(c.round.codec.key)}};
  }
  j["convergence"] = {{"patience", c.round.convergence.patience},
                      {"min_rel_improvement", c.round.convergence.min_rel_improvement}};
  j["centralized"] = {{"epochs", c.centralized_epochs}};
  j["checkpoint_every"] = c.checkpoint_every;
  j["eval_scale"] = metrics::to_string(c.eval_scale);
  j["synthetic"] = {{"days", c.synthetic.days},
                    {"customers_per_postcode", c.synthetic.customers_per_postcode},
                    {"noise", c.synthetic.noise}};
  return j;
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config '" + path.string() + "': " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return from_json(j);
}

std::string canonical(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace fedrep::config
