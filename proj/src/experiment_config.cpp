// Copyright 2026 The motas-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "motas/experiment_config.hpp"

#include <cstdlib>
#include <set>

#include "motas/error.hpp"

namespace motas {

using nlohmann::json;

void ExperimentConfig::validate() const {
  const auto& d = model.dims;
  if (d.d_w == 0 || d.d_m == 0 || d.d_s == 0 || d.d_t == 0 || model.d_e == 0)
    throw InvalidArgument("config: all dimensions must be positive");
  if (model.k == 0) throw InvalidArgument("config: k must be >= 1");
  if (model.expert_hidden == 0 || model.mlp_hidden1 == 0 || model.mlp_hidden2 == 0)
    throw InvalidArgument("config: hidden widths must be positive");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0))
    throw InvalidArgument("config: dropout_p must be in [0, 1)");
  if (!(augmentation_factor >= 1.0)) throw InvalidArgument("config: augmentation_factor must be >= 1");
  if (!(lr >= 0.0)) throw InvalidArgument("config: lr must be >= 0");
  if (batch_size == 0) throw InvalidArgument("config: batch_size must be >= 1");
  if (seeds.empty()) throw InvalidArgument("config: seeds must not be empty");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("config: threshold must be in [0, 1]");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw InvalidArgument("config: val_fraction must be in [0, 1)");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
    throw InvalidArgument("config: max_failure_fraction must be in [0, 1]");
  if (model.mfcc_encoder && (model.mfcc_shape.hidden == 0 || model.mfcc_shape.layers == 0))
    throw InvalidArgument("config: lstm hidden and layers must be positive");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw DataError("config: unknown key '" + where + key + "'");
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("config: top level must be an object");
  static const std::set<std::string> kTop = {
      "d_w",       "d_m",         "d_s",        "d_t",          "d_e",          "k",
      "expert_hidden", "moe_enabled", "mlp_hidden1", "mlp_hidden2", "dropout_p",  "mfcc_encoder",
      "spec_encoder", "lstm",     "augmentation_factor", "lr",  "batch_size",   "epochs",
      "seeds",     "threshold",   "aggregation", "val_fraction", "plan_seed",   "frame",
      "tools"};
  ExperimentConfig c;
  try {
    reject_unknown(j, kTop, "");
    auto& m = c.model;
    get_if(j, "d_w", m.dims.d_w);
    get_if(j, "d_m", m.dims.d_m);
    get_if(j, "d_s", m.dims.d_s);
    get_if(j, "d_t", m.dims.d_t);
    get_if(j, "d_e", m.d_e);
    get_if(j, "k", m.k);
    get_if(j, "expert_hidden", m.expert_hidden);
    get_if(j, "moe_enabled", m.moe_enabled);
    get_if(j, "mlp_hidden1", m.mlp_hidden1);
    get_if(j, "mlp_hidden2", m.mlp_hidden2);
    get_if(j, "dropout_p", m.dropout);
    get_if(j, "mfcc_encoder", m.mfcc_encoder);
    get_if(j, "spec_encoder", m.spec_encoder);
    if (auto it = j.find("lstm"); it != j.end()) {
      reject_unknown(*it, {"n_mfcc", "hidden", "layers"}, "lstm.");
      get_if(*it, "n_mfcc", m.mfcc_shape.n_mfcc);
      get_if(*it, "hidden", m.mfcc_shape.hidden);
      get_if(*it, "layers", m.mfcc_shape.layers);
    }
    m.mfcc_shape.out_dim = m.dims.d_m;
    get_if(j, "augmentation_factor", c.augmentation_factor);
    get_if(j, "lr", c.lr);
    get_if(j, "batch_size", c.batch_size);
    get_if(j, "epochs", c.epochs);
    get_if(j, "seeds", c.seeds);
    get_if(j, "threshold", c.threshold);
    if (auto it = j.find("aggregation"); it != j.end())
      c.aggregation = parse_aggregation(it->get<std::string>());
    get_if(j, "val_fraction", c.val_fraction);
    get_if(j, "plan_seed", c.plan_seed);
    if (auto it = j.find("frame"); it != j.end()) {
      reject_unknown(*it,
                     {"frame_len_ms", "hop_ms", "n_fft", "n_mels", "n_mfcc", "fmin", "fmax", "log_floor"},
                     "frame.");
      auto& f = c.frames;
      get_if(*it, "frame_len_ms", f.frame_len_ms);
      get_if(*it, "hop_ms", f.hop_ms);
      get_if(*it, "n_fft", f.n_fft);
      get_if(*it, "n_mels", f.n_mels);
      get_if(*it, "n_mfcc", f.n_mfcc);
      get_if(*it, "fmin", f.fmin);
      get_if(*it, "fmax", f.fmax);
      get_if(*it, "log_floor", f.log_floor);
    }
    if (auto it = j.find("tools"); it != j.end()) {
      reject_unknown(*it,
                     {"tts_command", "asr_command", "timeout_s", "max_retries", "concurrency",
                      "max_failure_fraction"},
                     "tools.");
      auto& t = c.tools;
      get_if(*it, "tts_command", t.tts_command_template);
      get_if(*it, "asr_command", t.asr_command_template);
      get_if(*it, "timeout_s", t.timeout_s);
      get_if(*it, "max_retries", t.max_retries);
      get_if(*it, "concurrency", t.concurrency);
      get_if(*it, "max_failure_fraction", c.max_failure_fraction);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json config_to_json(const ExperimentConfig& c) {
  const auto& m = c.model;
  const auto& f = c.frames;
  return {
      {"d_w", m.dims.d_w},
      {"d_m", m.dims.d_m},
      {"d_s", m.dims.d_s},
      {"d_t", m.dims.d_t},
      {"d_e", m.d_e},
      {"k", m.k},
      {"expert_hidden", m.expert_hidden},
      {"moe_enabled", m.moe_enabled},
      {"mlp_hidden1", m.mlp_hidden1},
      {"mlp_hidden2", m.mlp_hidden2},
      {"dropout_p", m.dropout},
      {"mfcc_encoder", m.mfcc_encoder},
      {"spec_encoder", m.spec_encoder},
      {"lstm",
       {{"n_mfcc", m.mfcc_shape.n_mfcc}, {"hidden", m.mfcc_shape.hidden}, {"layers", m.mfcc_shape.layers}}},
      {"augmentation_factor", c.augmentation_factor},
      {"lr", c.lr},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"seeds", c.seeds},
      {"threshold", c.threshold},
      {"aggregation", std::string(to_string(c.aggregation))},
      {"val_fraction", c.val_fraction},
      {"plan_seed", c.plan_seed},
      {"frame",
       {{"frame_len_ms", f.frame_len_ms},
        {"hop_ms", f.hop_ms},
        {"n_fft", f.n_fft},
        {"n_mels", f.n_mels},
        {"n_mfcc", f.n_mfcc},
        {"fmin", f.fmin},
        {"fmax", f.fmax},
        {"log_floor", f.log_floor}}},
      {"tools",
       {{"tts_command", c.tools.tts_command_template},
        {"asr_command", c.tools.asr_command_template},
        {"timeout_s", c.tools.timeout_s},
        {"max_retries", c.tools.max_retries},
        {"concurrency", c.tools.concurrency},
        {"max_failure_fraction", c.max_failure_fraction}}},
  };
}

ExperimentConfig with_seed_override(ExperimentConfig config) {
  if (const char* env = std::getenv("MOTAS_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw InvalidArgument(std::string("MOTAS_SEED must be an unsigned integer, got '") + env + "'");
    config.seeds = {static_cast<std::uint64_t>(v)};
  }
  return config;
}

}  // namespace motas
