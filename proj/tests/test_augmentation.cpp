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


#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "motas/augmentation.hpp"
#include "motas/error.hpp"
#include "test_util.hpp"

using namespace motas;
using testing::TempDir;

namespace {

std::vector<CohortItem> cohort(std::size_t ad, std::size_t cn) {
  std::vector<CohortItem> out;
  for (std::size_t i = 0; i < ad + cn; ++i) {
    CohortItem item;
    item.id = (i < ad ? "ad" : "cn") + std::to_string(i);
    item.label = i < ad ? Label::kAD : Label::kCN;
    item.audio = "wav/" + item.id + ".wav";
    item.text = "words of " + item.id;
    out.push_back(item);
  }
  return out;
}

// Writes a placeholder audio file per item holding `body`.
void touch_audio(const TempDir& dir, const std::vector<CohortItem>& items, const std::string& body = "RIFF") {
  for (const auto& item : items) write_text_file(dir / item.audio, body);
}

std::size_t count_label(const PairPlan& plan, Label label) {
  std::size_t n = 0;
  for (const auto& r : plan.records) n += r.label == label;
  return n;
}

}  // namespace

TEST_CASE("factor one plans nothing") {
  const auto items = cohort(5, 4);
  CHECK(plan_pairs(items, 1.0, 3).records.empty());
  CHECK_THROWS_AS(plan_pairs(items, 0.5, 3), InvalidArgument);
}

TEST_CASE("factor two on a three-item class uses each voice once") {
  std::vector<CohortItem> items;
  for (const char* id : {"a", "b", "c"}) {
    CohortItem item;
    item.id = id;
    item.label = Label::kAD;
    items.push_back(item);
  }
  const PairPlan plan = plan_pairs(items, 2.0, 7);
  REQUIRE(plan.records.size() == 3);
  std::set<std::string> voices;
  const std::set<std::string> ids = {"a", "b", "c"};
  for (const auto& r : plan.records) {
    voices.insert(r.voice_id);
    CHECK(r.label == Label::kAD);
    CHECK(ids.count(r.transcript_id) == 1);
    CHECK(r.transcript_id != r.voice_id);
    CHECK(r.synth_id == r.voice_id + "__x__" + r.transcript_id);
  }
  CHECK(voices == ids);
  CHECK_NOTHROW(check_plan(plan, items));
}

TEST_CASE("quotas on the 87 / 79 cohort") {
  const auto items = cohort(87, 79);
  const std::map<double, std::pair<std::size_t, std::size_t>> expected = {
      {1.5, {44, 40}}, {2.0, {87, 79}}, {2.5, {131, 119}}, {3.0, {174, 158}}};
  for (const auto& [factor, quotas] : expected) {
    const PairPlan plan = plan_pairs(items, factor, 11);
    CHECK(count_label(plan, Label::kAD) == quotas.first);
    CHECK(count_label(plan, Label::kCN) == quotas.second);
    CHECK(count_label(plan, Label::kAD) == static_cast<std::size_t>(std::llround((factor - 1.0) * 87)));
    CHECK_NOTHROW(check_plan(plan, items));
    // Voice usage is balanced within each class.
    for (Label label : {Label::kAD, Label::kCN}) {
      std::map<std::string, int> uses;
      for (const auto& item : items)
        if (item.label == label) uses[item.id] = 0;
      for (const auto& r : plan.records)
        if (r.label == label) ++uses[r.voice_id];
      int lo = 1 << 30, hi = 0;
      for (const auto& [_, n] : uses) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      CHECK(hi - lo <= 1);
    }
  }
  CHECK(synthetic_quota(3.0, 87) + synthetic_quota(3.0, 79) + 166 == 498);
}

TEST_CASE("plans are reproducible byte for byte") {
  const auto items = cohort(20, 17);
  const std::string a = plan_to_jsonl(plan_pairs(items, 2.5, 42));
  const std::string b = plan_to_jsonl(plan_pairs(items, 2.5, 42));
  CHECK(a == b);
  CHECK(a != plan_to_jsonl(plan_pairs(items, 2.5, 43)));
  TempDir dir("plan");
  const PairPlan plan = plan_pairs(items, 2.5, 42);
  write_plan(dir / "plan.jsonl", plan);
  const PairPlan back = read_plan(dir / "plan.jsonl");
  CHECK(back.records == plan.records);
  CHECK(plan_to_jsonl(back) == a);
}

TEST_CASE("transcripts avoid the voice's own subject and repeat only when exhausted") {
  auto items = cohort(6, 0);
  items[1].subject = items[0].id;  // two segments of the same speaker
  const PairPlan plan = plan_pairs(items, 5.0, 1);
  CHECK(plan.records.size() == 24);
  std::map<std::string, std::vector<std::string>> per_voice;
  for (const auto& r : plan.records) {
    const bool same_subject = (r.voice_id == "ad0" || r.voice_id == "ad1") &&
                              (r.transcript_id == "ad0" || r.transcript_id == "ad1");
    CHECK_FALSE(same_subject);
    per_voice[r.voice_id].push_back(r.transcript_id);
  }
  // ad2 has 5 candidates and 4 draws, so no repeats.
  const auto& v = per_voice.at("ad2");
  CHECK(std::set<std::string>(v.begin(), v.end()).size() == v.size());

  auto tiny = cohort(1, 3);
  CHECK_THROWS_AS(plan_pairs(tiny, 2.0, 1), DataError);
  CHECK(plan_pairs(tiny, 1.2, 1).records.size() == 1);  // AD quota rounds to zero
}

TEST_CASE("synthetic items never take part in planning") {
  auto items = cohort(3, 3);
  CohortItem synth;
  synth.id = "extra";
  synth.label = Label::kAD;
  synth.source = Source::kSynthetic;
  synth.voice_of = "ad0";
  synth.transcript_of = "ad1";
  items.push_back(synth);
  for (const auto& r : plan_pairs(items, 3.0, 5).records) {
    CHECK(r.voice_id != "extra");
    CHECK(r.transcript_id != "extra");
  }
  PairPlan bad;
  bad.records.push_back({"z", Label::kAD, "ad0", "cn3"});
  CHECK_THROWS_AS(check_plan(bad, items), DataError);
}

TEST_CASE("transcript cleaning") {
  CHECK(clean_transcript("Hello, WORLD!!") == "hello world");
  CHECK(clean_transcript("it's a boy") == "it's a boy");
  CHECK(clean_transcript("  the\tcookie-jar \n falls 2x ") == "the cookie-jar falls 2x");
  CHECK(clean_transcript("[laughs] uh... ok") == "laughs uh ok");
  CHECK(clean_transcript("!!!").empty());
  for (const char* s : {"Hello, WORLD!!", "a  b", "Ünïcode wörds"}) {
    const std::string once = clean_transcript(s);
    CHECK(clean_transcript(once) == once);
  }
}

TEST_CASE("command templates") {
  CHECK(shell_quote("it's") == "'it'\\''s'");
  CHECK(expand_template("say {text} > {out} {other}", {{"text", "a b"}, {"out", "o.wav"}}) ==
        "say 'a b' > 'o.wav' {other}");
  static constexpr std::string_view kNeeded[] = {"voice_audio", "text", "out"};
  CHECK_THROWS_AS(require_placeholders("tts {text} {out}", kNeeded), InvalidArgument);
  CHECK_NOTHROW(require_placeholders("tts {voice_audio} {text} {out}", kNeeded));
  const auto ok = run_command("exit 0", 5.0);
  CHECK(ok.ok());
  const auto bad = run_command("echo progress; echo 'model file missing' >&2; exit 4", 5.0);
  CHECK(bad.exit_code == 4);
  CHECK(bad.message == "exited with status 4: model file missing");
  const auto chatty = run_command("yes | head -c 200000", 5.0);
  CHECK(chatty.ok());
  const auto missing = run_command("no_such_tool_for_motas_tests", 5.0);
  CHECK(missing.exit_code == 127);
  CHECK(missing.message.find("command not found") != std::string::npos);
}

TEST_CASE("a hung command is killed at the timeout") {
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_command("sleep 20", 0.3);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(r.timed_out);
  CHECK_FALSE(r.ok());
  CHECK(elapsed < 5.0);
}

TEST_CASE("tts jobs with a copying stub keep provenance") {
  TempDir dir("tts");
  auto items = cohort(4, 4);
  touch_audio(dir, items);
  const PairPlan plan = plan_pairs(items, 2.0, 3);
  ExternalToolConfig cfg;
  cfg.tts_command_template = "cp {voice_audio} {out} && test -n {text}";
  cfg.concurrency = 3;
  const TtsResult r = run_tts_jobs(plan, items, cfg, dir / "synth", dir.path());
  CHECK(r.failures.empty());
  REQUIRE(r.items.size() == plan.records.size());
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    const auto& item = r.items[i];
    const auto& rec = plan.records[i];
    CHECK(item.id == rec.synth_id);
    CHECK(item.source == Source::kSynthetic);
    CHECK(*item.voice_of == rec.voice_id);
    CHECK(*item.transcript_of == rec.transcript_id);
    CHECK(item.text == "words of " + rec.transcript_id);
    CHECK(item.label == rec.label);
    CHECK(std::filesystem::exists(item.audio));
    CHECK_NOTHROW(check_provenance(item));
  }
}

TEST_CASE("tts failures are recorded per record and never abort the batch") {
  TempDir dir("tts");
  auto items = cohort(10, 0);
  touch_audio(dir, items);
  const PairPlan plan = plan_pairs(items, 2.0, 9);
  REQUIRE(plan.records.size() == 10);

  SUBCASE("always failing") {
    ExternalToolConfig cfg;
    cfg.tts_command_template = "exit 1 # {voice_audio} {text} {out}";
    cfg.max_retries = 1;
    const TtsResult r = run_tts_jobs(plan, items, cfg, dir / "synth", dir.path());
    CHECK(r.items.empty());
    REQUIRE(r.failures.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(r.failures[i].record == i);
      CHECK(r.failures[i].exit_code == 1);
      CHECK(r.failures[i].stage == "tts");
    }
  }
  SUBCASE("failing on records 3 and 7") {
    const std::string fail3 = plan.records[3].synth_id + ".wav";
    const std::string fail7 = plan.records[7].synth_id + ".wav";
    write_text_file(dir / "stub.sh",
                    "case \"$3\" in *" + fail3 + "|*" + fail7 + ") exit 2;; esac\ncp \"$1\" \"$3\"\n");
    ExternalToolConfig cfg;
    cfg.tts_command_template = "sh " + (dir / "stub.sh").string() + " {voice_audio} {text} {out}";
    cfg.concurrency = 4;
    const TtsResult r = run_tts_jobs(plan, items, cfg, dir / "synth", dir.path());
    CHECK(r.items.size() == 8);
    REQUIRE(r.failures.size() == 2);
    CHECK(r.failures[0].record == 3);
    CHECK(r.failures[1].record == 7);
    write_failure_report(dir / "failures.jsonl", r.failures);
    const std::string report = read_text_file(dir / "failures.jsonl");
    CHECK(std::count(report.begin(), report.end(), '\n') == 2);
    CHECK(report.find("\"record\":3") != std::string::npos);
  }
  SUBCASE("missing output and missing tool") {
    ExternalToolConfig cfg;
    cfg.tts_command_template = "true {voice_audio} {text} {out}";
    cfg.max_retries = 0;
    CHECK(run_tts_jobs(plan, items, cfg, dir / "synth", dir.path()).failures.size() == 10);
    cfg.tts_command_template = "no_such_tool_for_motas_tests {voice_audio} {text} {out}";
    const TtsResult r = run_tts_jobs(plan, items, cfg, dir / "synth", dir.path());
    REQUIRE(r.failures.size() == 10);
    CHECK(r.failures[0].message.find("command not found") != std::string::npos);
  }
  SUBCASE("missing voice audio is a precondition error") {
    std::filesystem::remove(dir / items[0].audio);
    ExternalToolConfig cfg;
    cfg.tts_command_template = "cp {voice_audio} {out} # {text}";
    CHECK_THROWS_AS(run_tts_jobs(plan, items, cfg, dir / "synth", dir.path()), DataError);
  }
}

TEST_CASE("asr jobs clean transcripts and flag empty ones") {
  TempDir dir("asr");
  std::vector<CohortItem> items = cohort(3, 0);
  const std::vector<std::string> said = {"Hello, WORLD!!", "", "it's a boy"};
  for (std::size_t i = 0; i < 3; ++i) write_text_file(dir / items[i].audio, said[i]);
  ExternalToolConfig cfg;
  cfg.asr_command_template = "cat {audio} > {out}";
  const AsrResult r = run_asr_jobs(items, cfg, dir / "asr", dir.path());
  REQUIRE(r.items.size() == 3);
  CHECK(r.failures.empty());
  CHECK(read_transcript(r.items[0], dir.path()) == "hello world");
  CHECK(r.items[0].valid);
  CHECK_FALSE(r.items[1].valid);
  CHECK(read_transcript(r.items[2], dir.path()) == "it's a boy");
  CHECK(read_text_file(dir / "asr" / "ad0.raw.txt") == "Hello, WORLD!!");

  const AugmentedManifest merged = merge_augmented(std::vector<CohortItem>{}, r.items);
  CHECK(merged.items.size() == 2);
  CHECK(merged.dropped_invalid == 1);
}

TEST_CASE("merging real and synthetic items") {
  const auto real = cohort(87, 79);
  const AugmentedManifest same = merge_augmented(real, std::vector<CohortItem>{});
  REQUIRE(same.items.size() == 166);
  for (std::size_t i = 0; i < 166; ++i) CHECK(same.items[i].id == real[i].id);

  std::vector<CohortItem> synth;
  for (std::size_t i = 0; i < 315; ++i) {
    CohortItem item;
    item.id = "syn" + std::to_string(i);
    item.label = i < 166 ? Label::kAD : Label::kCN;
    item.source = Source::kSynthetic;
    item.voice_of = "v";
    item.transcript_of = "t";
    synth.push_back(item);
  }
  const AugmentedManifest merged = merge_augmented(real, synth);
  CHECK(merged.items.size() == 481);
  CHECK(merged.balance.at(Label::kAD).real == 87);
  CHECK(merged.balance.at(Label::kAD).synthetic == 166);
  CHECK(merged.summary_json().find("\"total\": 481") != std::string::npos);

  synth.push_back(real[5]);
  try {
    merge_augmented(real, synth);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(real[5].id) != std::string::npos);
  }
}

TEST_CASE("the doubled 87 / 79 cohort has 332 training items") {
  const auto real = cohort(87, 79);
  const PairPlan plan = plan_pairs(real, 2.0, 5);
  std::vector<CohortItem> synth;
  for (const auto& r : plan.records) {
    CohortItem item;
    item.id = r.synth_id;
    item.label = r.label;
    item.source = Source::kSynthetic;
    item.voice_of = r.voice_id;
    item.transcript_of = r.transcript_id;
    synth.push_back(item);
  }
  CHECK(merge_augmented(real, synth).items.size() == 332);
}

TEST_CASE("tool timeout can be overridden from the environment") {
  ::setenv("MOTAS_TOOL_TIMEOUT_S", "12.5", 1);
  CHECK(with_env_overrides(ExternalToolConfig{}).timeout_s == 12.5);
  ::setenv("MOTAS_TOOL_TIMEOUT_S", "soon", 1);
  CHECK_THROWS_AS(with_env_overrides(ExternalToolConfig{}), InvalidArgument);
  ::unsetenv("MOTAS_TOOL_TIMEOUT_S");
  CHECK(with_env_overrides(ExternalToolConfig{}).timeout_s == 600.0);
}
