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

#include "motas/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "motas/error.hpp"

namespace motas {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {"id",      "label",    "split",         "audio",
                                             "transcript", "text",  "source",        "subject",
                                             "voice_of", "transcript_of", "caches", "valid"};
  return keys;
}

std::string string_field(const json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw DataError(std::string("missing \"") + key + "\"");
    return {};
  }
  if (!it->is_string()) throw DataError(std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

ManifestRecord record_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  ManifestRecord r;
  CohortItem& it = r.item;
  it.id = string_field(j, "id", true);
  if (it.id.empty()) throw DataError("empty \"id\"");
  it.label = parse_label(string_field(j, "label", true));
  r.split = parse_split(string_field(j, "split", true));
  it.audio = string_field(j, "audio", false);
  it.transcript = string_field(j, "transcript", false);
  it.text = string_field(j, "text", false);
  const std::string source = string_field(j, "source", false);
  if (!source.empty()) it.source = parse_source(source);
  it.subject = string_field(j, "subject", false);
  if (auto v = string_field(j, "voice_of", false); !v.empty()) it.voice_of = v;
  if (auto t = string_field(j, "transcript_of", false); !t.empty()) it.transcript_of = t;
  if (auto v = j.find("valid"); v != j.end()) {
    if (!v->is_boolean()) throw DataError("\"valid\" must be a boolean");
    it.valid = v->get<bool>();
  }
  if (auto c = j.find("caches"); c != j.end()) {
    if (!c->is_object()) throw DataError("\"caches\" must be an object");
    for (const auto& [slot, path] : c->items()) {
      if (!path.is_string()) throw DataError("cache path for '" + slot + "' must be a string");
      r.caches[slot] = path.get<std::string>();
    }
  }
  for (const auto& [key, value] : j.items())
    if (!known_keys().count(key)) r.extra[key] = value;
  check_provenance(it);
  return r;
}

}  // namespace

void check_provenance(const CohortItem& item) {
  if (item.source == Source::kReal) {
    if (item.voice_of || item.transcript_of)
      throw DataError("real item '" + item.id + "' carries synthetic provenance");
    return;
  }
  if (!item.voice_of || !item.transcript_of)
    throw DataError("synthetic item '" + item.id + "' needs voice_of and transcript_of");
  if (*item.voice_of == *item.transcript_of)
    throw DataError("synthetic item '" + item.id + "' uses '" + *item.voice_of +
                    "' as both voice and transcript");
}

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(text) + "'");
}

std::filesystem::path Manifest::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<CohortItem> Manifest::items(std::optional<Split> split) const {
  std::vector<CohortItem> out;
  for (const auto& r : records)
    if (!split || r.split == *split) out.push_back(r.item);
  return out;
}

Manifest parse_manifest_text(std::string_view text, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
      }
      ManifestRecord r = record_from_json(j);
      if (r.split == Split::kTest && r.item.source == Source::kSynthetic)
        throw DataError("synthetic record '" + r.item.id + "' in the test split");
      if (!ids.insert(r.item.id).second) throw DataError("duplicate id '" + r.item.id + "'");
      m.records.push_back(std::move(r));
    } catch (const DataError& e) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return m;
}

Manifest parse_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest_text(read_text_file(path), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string manifest_line(const ManifestRecord& r) {
  json j = r.extra.is_object() ? r.extra : json::object();
  const CohortItem& it = r.item;
  j["id"] = it.id;
  j["label"] = std::string(to_string(it.label));
  j["split"] = std::string(to_string(r.split));
  j["source"] = std::string(to_string(it.source));
  if (!it.audio.empty()) j["audio"] = it.audio;
  if (!it.transcript.empty()) j["transcript"] = it.transcript;
  if (!it.text.empty()) j["text"] = it.text;
  if (!it.subject.empty()) j["subject"] = it.subject;
  if (it.voice_of) j["voice_of"] = *it.voice_of;
  if (it.transcript_of) j["transcript_of"] = *it.transcript_of;
  if (!r.caches.empty()) j["caches"] = r.caches;
  if (!it.valid) j["valid"] = false;
  return j.dump();
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  std::string out;
  for (const auto& r : records) out += manifest_line(r) + "\n";
  write_text_file(path, out);
}

std::string read_transcript(const CohortItem& item, const std::filesystem::path& base_dir) {
  if (item.transcript.empty()) return item.text;
  std::filesystem::path p(item.transcript);
  if (!p.is_absolute() && !base_dir.empty()) p = base_dir / p;
  return read_text_file(p);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("short write to " + path.string());
}

}  // namespace motas
