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

// Cohort items and the JSON-lines manifest that carries them.
//
// One record per line:
//   {"id": "s01", "label": "AD", "split": "train", "audio": "wav/s01.wav",
//    "transcript": "txt/s01.txt", "subject": "s01",
//    "caches": {"w2v": "caches/s01_w2v.cache"}}
// Optional keys: source, text (inline transcript), subject, voice_of,
// transcript_of, caches. Unknown keys are kept and written back.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "motas/types.hpp"

namespace motas {

struct CohortItem {
  std::string id;
  Label label = Label::kCN;
  std::string audio;       // path, relative to the manifest directory
  std::string transcript;  // path to a text file; may be empty
  std::string text;        // inline transcript; used when `transcript` is empty
  Source source = Source::kReal;
  std::optional<std::string> voice_of;
  std::optional<std::string> transcript_of;
  std::string subject;  // empty means the item is its own subject
  bool valid = true;

  const std::string& subject_key() const { return subject.empty() ? id : subject; }
};

// Throws DataError when the provenance fields disagree with `source`.
void check_provenance(const CohortItem& item);

enum class Split { kTrain, kTest };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ManifestRecord {
  CohortItem item;
  Split split = Split::kTrain;
  std::map<std::string, std::string> caches;  // slot -> cache file
  nlohmann::json extra = nlohmann::json::object();
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<CohortItem> items(std::optional<Split> split = std::nullopt) const;
};

// Errors carry the 1-based line number. Empty lines are skipped.
Manifest parse_manifest_text(std::string_view text, const std::filesystem::path& base_dir = {});
Manifest parse_manifest(const std::filesystem::path& path);

std::string manifest_line(const ManifestRecord& record);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

// Inline text, else the contents of the transcript file.
std::string read_transcript(const CohortItem& item, const std::filesystem::path& base_dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace motas
