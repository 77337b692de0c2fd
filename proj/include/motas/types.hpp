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

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace motas {

// AD is the positive class everywhere (predictions, confusion counts).
enum class Label { kCN = 0, kAD = 1 };
enum class Source { kReal, kSynthetic };

// The three modalities that pass through a compression layer.
enum class Modality { kMfcc, kSpec, kText };
inline constexpr std::array<Modality, 3> kCompressedModalities = {Modality::kMfcc, Modality::kSpec,
                                                                  Modality::kText};

std::string_view to_string(Label label);
std::string_view to_string(Source source);
std::string_view to_string(Modality modality);
Label parse_label(std::string_view text);
Source parse_source(std::string_view text);
Modality parse_modality(std::string_view text);

inline int label_value(Label label) { return label == Label::kAD ? 1 : 0; }

struct EmbeddingDims {
  std::size_t d_w = 768;
  std::size_t d_m = 128;
  std::size_t d_s = 1000;
  std::size_t d_t = 1024;

  std::size_t of(Modality m) const {
    switch (m) {
      case Modality::kMfcc: return d_m;
      case Modality::kSpec: return d_s;
      case Modality::kText: return d_t;
    }
    return 0;
  }
};

}  // namespace motas
