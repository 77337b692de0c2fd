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

// Audio decoding, segmentation and the two spectral front ends: MFCC
// sequences for the recurrent encoder and fixed-size log-mel images for the
// image encoder.

#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motas/error.hpp"

namespace motas::dsp {

inline constexpr int kDefaultSampleRate = 16000;
inline constexpr std::size_t kImageSize = 224;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Row-major dense matrix for spectral data.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
};

struct FrameConfig {
  double frame_len_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_fft = 0;  // 0 = smallest power of two covering a frame
  std::size_t n_mels = 40;
  std::size_t n_mfcc = 13;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 = Nyquist
  double log_floor = 1e-10;
};

// FrameConfig resolved against a sample rate, in samples.
struct FrameGeometry {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t n_fft = 0;
  double fmin = 0.0;
  double fmax = 0.0;

  std::size_t frame_count(std::size_t n_samples) const {
    return n_samples < frame_len ? 0 : 1 + (n_samples - frame_len) / hop;
  }
};

FrameGeometry resolve(const FrameConfig& cfg, int sample_rate);

struct MelFilterbank {
  Matrix weights;  // n_mels x (n_fft/2 + 1)
};

using MfccSequence = Matrix;      // T x n_mfcc
using SpectrogramImage = Matrix;  // kImageSize x kImageSize, entries in [0, 1]

class WavError : public DataError {
 public:
  enum class Kind { kMissingFile, kMalformedHeader, kUnsupportedCodec };
  WavError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// PCM 16-bit integer or 32-bit float WAV; channels are averaged to mono.
AudioClip load_wav(const std::filesystem::path& path);

enum class WavEncoding { kPcm16, kFloat32 };
void write_wav(const std::filesystem::path& path, std::span<const double> interleaved,
               int sample_rate, int channels = 1, WavEncoding encoding = WavEncoding::kPcm16);

// Right-pads short clips to target_s and splits long ones into consecutive
// target_s windows, zero-padding the last.
std::vector<AudioClip> pad_or_split(const AudioClip& clip, double target_s = 5.0);

bool is_silent(const AudioClip& clip);

std::vector<double> hann_window(std::size_t n);

// In-place iterative radix-2 FFT; data.size() must be a power of two.
void fft(std::span<std::complex<double>> data);

// |DFT|^2 for bins 0..n_fft/2 of the zero-padded frame.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels, double fmin,
                             double fmax);

// n_mels x T matrix of log(max(mel energy, log_floor)).
Matrix compute_log_mel(const AudioClip& clip, const FrameConfig& cfg);

MfccSequence compute_mfcc(const AudioClip& clip, const FrameConfig& cfg);

// Orthonormal DCT-II, first n_out coefficients.
std::vector<double> dct2_ortho(std::span<const double> input, std::size_t n_out);

// Bilinear resize with corner-aligned sampling grids.
Matrix resize_bilinear(const Matrix& src, std::size_t out_rows, std::size_t out_cols);

// Min-max normalizes to [0, 1] in place; a constant matrix becomes zeros.
void min_max_normalize(Matrix& m);

SpectrogramImage compute_spectrogram(const AudioClip& clip, const FrameConfig& cfg);

}  // namespace motas::dsp
