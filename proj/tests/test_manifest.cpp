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


#include <string>

#include "doctest.h"
#include "motas/error.hpp"
#include "motas/manifest.hpp"
#include "test_util.hpp"

using namespace motas;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_manifest_text(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::string cohort_text(int ad, int cn, const char* split) {
  std::string out;
  for (int i = 0; i < ad + cn; ++i) {
    out += R"({"id": "s)" + std::to_string(i) + R"(", "label": ")" + (i < ad ? "AD" : "CN") +
           R"(", "split": ")" + split + R"(", "audio": "wav/s)" + std::to_string(i) + ".wav\"}\n";
  }
  return out;
}

}  // namespace

TEST_CASE("an empty manifest has no records") {
  CHECK(parse_manifest_text("").records.empty());
  CHECK(parse_manifest_text("\n\n").records.empty());
}

TEST_CASE("malformed lines are reported with their line number") {
  const std::string missing = R"({"id": "a", "label": "AD", "split": "train"})"
                              "\n"
                              R"({"id": "b", "split": "train"})";
  const auto err = error_of(missing);
  CHECK(err.find("line 2") != std::string::npos);
  CHECK(err.find("label") != std::string::npos);
  CHECK(error_of("{not json\n").find("line 1") != std::string::npos);
  CHECK(error_of(R"({"id": "a", "label": "XX", "split": "train"})").find("line 1") != std::string::npos);
  CHECK(error_of(R"({"id": "a", "label": "AD"})").find("split") != std::string::npos);
  CHECK(error_of(R"({"id": "a", "label": "AD", "split": "train", "valid": "yes"})") != "");
}

TEST_CASE("duplicate ids are rejected") {
  const std::string text = R"({"id": "a", "label": "AD", "split": "train"})"
                           "\n"
                           R"({"id": "a", "label": "CN", "split": "test"})";
  const auto err = error_of(text);
  CHECK(err.find("line 2") != std::string::npos);
  CHECK(err.find("duplicate") != std::string::npos);
}

TEST_CASE("synthetic records are never allowed in the test split") {
  const std::string text =
      R"({"id": "x", "label": "AD", "split": "test", "source": "synthetic", "voice_of": "a", "transcript_of": "b"})";
  CHECK(error_of(text).find("line 1") != std::string::npos);
  const std::string train =
      R"({"id": "x", "label": "AD", "split": "train", "source": "synthetic", "voice_of": "a", "transcript_of": "b"})";
  const Manifest m = parse_manifest_text(train);
  REQUIRE(m.records.size() == 1);
  CHECK(m.records[0].item.source == Source::kSynthetic);
  CHECK(*m.records[0].item.voice_of == "a");
  CHECK(error_of(R"({"id": "x", "label": "AD", "split": "train", "source": "synthetic"})") != "");
  CHECK(error_of(R"({"id": "x", "label": "AD", "split": "train", "voice_of": "a"})") != "");
}

TEST_CASE("a 166-record training manifest has 87 AD and 79 CN") {
  const Manifest m = parse_manifest_text(cohort_text(87, 79, "train"));
  REQUIRE(m.records.size() == 166);
  int ad = 0, cn = 0;
  for (const auto& r : m.records) (r.item.label == Label::kAD ? ad : cn)++;
  CHECK(ad == 87);
  CHECK(cn == 79);
}

TEST_CASE("records round-trip through the writer with unknown keys preserved") {
  testing::TempDir dir("manifest");
  const std::string text =
      R"({"id": "a", "label": "CN", "split": "train", "audio": "wav/a.wav", "text": "hi there", "subject": "p1", "caches": {"w2v": "c/w.cache"}, "site": 4})";
  const Manifest m = parse_manifest_text(text, dir.path());
  write_manifest(dir / "out" / "m.jsonl", m.records);
  const Manifest back = parse_manifest(dir / "out" / "m.jsonl");
  REQUIRE(back.records.size() == 1);
  const auto& r = back.records[0];
  CHECK(r.item.subject_key() == "p1");
  CHECK(r.caches.at("w2v") == "c/w.cache");
  CHECK(r.extra.at("site") == 4);
  CHECK(manifest_line(r) == manifest_line(m.records[0]));
  CHECK(back.resolve("wav/a.wav") == dir / "out" / "wav/a.wav");
  CHECK(read_transcript(r.item, back.base_dir) == "hi there");
  CHECK(back.items(Split::kTest).empty());
  CHECK_THROWS_AS(parse_manifest(dir / "missing.jsonl"), DataError);
}

TEST_CASE("transcripts are read from files when no inline text is given") {
  testing::TempDir dir("manifest");
  write_text_file(dir / "txt" / "a.txt", "the boy takes a cookie");
  CohortItem item;
  item.id = "a";
  item.transcript = "txt/a.txt";
  CHECK(read_transcript(item, dir.path()) == "the boy takes a cookie");
  item.transcript = "txt/none.txt";
  CHECK_THROWS_AS(read_transcript(item, dir.path()), DataError);
}
