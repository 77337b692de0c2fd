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

#include "motas/types.hpp"

#include "motas/error.hpp"

namespace motas {

std::string_view to_string(Label label) { return label == Label::kAD ? "AD" : "CN"; }

std::string_view to_string(Source source) {
  return source == Source::kReal ? "real" : "synthetic";
}

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::kMfcc: return "mfcc";
    case Modality::kSpec: return "spec";
    case Modality::kText: return "text";
  }
  return "?";
}

Label parse_label(std::string_view text) {
  if (text == "AD") return Label::kAD;
  if (text == "CN") return Label::kCN;
  throw DataError("unknown label '" + std::string(text) + "' (expected AD or CN)");
}

Source parse_source(std::string_view text) {
  if (text == "real") return Source::kReal;
  if (text == "synthetic") return Source::kSynthetic;
  throw DataError("unknown source '" + std::string(text) + "' (expected real or synthetic)");
}

Modality parse_modality(std::string_view text) {
  if (text == "mfcc") return Modality::kMfcc;
  if (text == "spec") return Modality::kSpec;
  if (text == "text") return Modality::kText;
  throw DataError("unknown modality '" + std::string(text) + "'");
}

}  // namespace motas
