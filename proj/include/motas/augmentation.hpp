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

// Intra-class (voice, transcript) pairing and the external TTS / ASR
// drivers that realize a plan.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motas/manifest.hpp"

namespace motas {

struct PairRecord {
  std::string synth_id;
  Label label = Label::kCN;
  std::string voice_id;
  std::string transcript_id;

  bool operator==(const PairRecord&) const = default;
};

struct PairPlan {
  std::vector<PairRecord> records;
  double factor = 1.0;
  std::uint64_t seed = 0;
};

// round((factor - 1) * class_size), halves away from zero.
std::size_t synthetic_quota(double factor, std::size_t class_size);

// Only real items take part. Voices cycle over each class in a seeded
// shuffled order; each voice draws transcripts uniformly, without
// replacement until its candidates run out, from same-class items of a
// different subject.
PairPlan plan_pairs(std::span<const CohortItem> cohort, double factor, std::uint64_t seed);

// Throws DataError on any cross-class pair, self pair or duplicate id.
void check_plan(const PairPlan& plan, std::span<const CohortItem> cohort);

std::string plan_to_jsonl(const PairPlan& plan);
PairPlan plan_from_jsonl(std::string_view text);
void write_plan(const std::filesystem::path& path, const PairPlan& plan);
PairPlan read_plan(const std::filesystem::path& path);

// Lowercase, keep [a-z0-9 '-] plus spaces, collapse whitespace runs.
std::string clean_transcript(std::string_view raw);

struct ExternalToolConfig {
  std::string tts_command_template;  // {voice_audio} {text} {out}
  std::string asr_command_template;  // {audio} {out}
  double timeout_s = 600.0;
  int max_retries = 2;
  int concurrency = 1;
};

// Applies MOTAS_TOOL_TIMEOUT_S when set.
ExternalToolConfig with_env_overrides(ExternalToolConfig cfg);

// Throws InvalidArgument naming the first missing placeholder.
void require_placeholders(std::string_view tmpl, std::span<const std::string_view> names);

// Placeholder values are substituted single-quoted for /bin/sh.
std::string shell_quote(std::string_view value);
std::string expand_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);

struct CommandOutcome {
  int exit_code = 0;  // -1 when the process never ran or was killed
  bool timed_out = false;
  std::string message;
  bool ok() const { return exit_code == 0 && !timed_out; }
};

// Runs `command` through /bin/sh -c; the whole process group is killed on timeout.
CommandOutcome run_command(const std::string& command, double timeout_s);

struct ToolFailure {
  std::size_t record = 0;  // index into the plan or item list
  std::string id;
  std::string stage;  // "tts" or "asr"
  int exit_code = 0;
  std::string message;
};

std::string failures_to_jsonl(std::span<const ToolFailure> failures);
void write_failure_report(const std::filesystem::path& path, std::span<const ToolFailure> failures);

struct TtsResult {
  std::vector<CohortItem> items;
  std::vector<ToolFailure> failures;  // ordered by record index
};

// Synthetic audio lands in out_dir/<synth_id>.wav. Items carry the donor
// transcript text until the second ASR pass replaces it.
TtsResult run_tts_jobs(const PairPlan& plan, std::span<const CohortItem> cohort,
                       const ExternalToolConfig& cfg, const std::filesystem::path& out_dir,
                       const std::filesystem::path& base_dir = {});

struct AsrResult {
  std::vector<CohortItem> items;  // every input item; empty transcripts have valid = false
  std::vector<ToolFailure> failures;
};

// Raw output goes to out_dir/<id>.raw.txt, the cleaned transcript to out_dir/<id>.txt.
AsrResult run_asr_jobs(std::span<const CohortItem> items, const ExternalToolConfig& cfg,
                       const std::filesystem::path& out_dir,
                       const std::filesystem::path& base_dir = {});

struct ClassBalance {
  std::size_t real = 0;
  std::size_t synthetic = 0;
};

struct AugmentedManifest {
  std::vector<CohortItem> items;
  std::map<Label, ClassBalance> balance;
  std::size_t dropped_invalid = 0;

  std::string summary_json() const;
};

// Invalid items are dropped; a repeated id is an error.
AugmentedManifest merge_augmented(std::span<const CohortItem> real,
                                  std::span<const CohortItem> synthetic);

}  // namespace motas
