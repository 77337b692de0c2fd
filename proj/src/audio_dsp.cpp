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

#include "motas/audio_dsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace motas::dsp {

namespace {

std::uint16_t read_u16(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>(v >> 24)};
  out.write(bytes, 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

FrameGeometry resolve(const FrameConfig& cfg, int sample_rate) {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  if (!(cfg.hop_ms > 0.0) || cfg.hop_ms > cfg.frame_len_ms)
    throw InvalidArgument("frame config: need 0 < hop_ms <= frame_len_ms");
  if (cfg.n_mfcc == 0 || cfg.n_mfcc > cfg.n_mels)
    throw InvalidArgument("frame config: need 0 < n_mfcc <= n_mels");
  if (!(cfg.log_floor > 0.0)) throw InvalidArgument("frame config: log_floor must be positive");

  FrameGeometry g;
  g.frame_len = static_cast<std::size_t>(std::lround(cfg.frame_len_ms * sample_rate / 1000.0));
  g.hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * sample_rate / 1000.0));
  if (g.frame_len < 2 || g.hop == 0) throw InvalidArgument("frame config: frame too short");
  g.n_fft = cfg.n_fft == 0 ? std::bit_ceil(g.frame_len) : cfg.n_fft;
  if (!std::has_single_bit(g.n_fft) || g.n_fft < g.frame_len)
    throw InvalidArgument("frame config: n_fft must be a power of two >= frame length");
  const double nyquist = sample_rate / 2.0;
  g.fmin = cfg.fmin;
  g.fmax = cfg.fmax > 0.0 ? cfg.fmax : nyquist;
  if (g.fmin < 0.0 || g.fmin >= g.fmax || g.fmax > nyquist)
    throw InvalidArgument("frame config: need 0 <= fmin < fmax <= sample_rate/2");
  return g;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavError::Kind::kMissingFile, "cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const auto malformed = [&](const std::string& why) {
    return WavError(WavError::Kind::kMalformedHeader, path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw malformed("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_at = 0, data_len = 0;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::size_t len = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (len > bytes.size() - body) throw malformed("chunk overruns file");
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      if (len < 16) throw malformed("fmt chunk too short");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) throw malformed("extensible fmt chunk too short");
        format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      data_at = body;
      data_len = len;
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) throw malformed("missing fmt chunk");
  if (!have_data) throw malformed("missing data chunk");
  if (channels == 0 || rate == 0) throw malformed("zero channels or sample rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw WavError(WavError::Kind::kUnsupportedCodec,
                   path.string() + ": unsupported codec (format " + std::to_string(format) + ", " +
                       std::to_string(bits) + " bits)");

  const std::size_t sample_bytes = bits / 8;
  const std::size_t frames = data_len / (sample_bytes * channels);
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_at + (f * channels + c) * sample_bytes;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(bytes, at)) / 32768.0;
      } else {
        acc += static_cast<double>(std::bit_cast<float>(read_u32(bytes, at)));
      }
    }
    clip.samples[f] = acc / channels;
  }
  if (clip.samples.empty()) throw malformed("no audio frames");
  return clip;
}

void write_wav(const std::filesystem::path& path, std::span<const double> interleaved,
               int sample_rate, int channels, WavEncoding encoding) {
  if (channels <= 0 || interleaved.size() % static_cast<std::size_t>(channels) != 0)
    throw InvalidArgument("write_wav: sample count not a multiple of channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const auto data_len = static_cast<std::uint32_t>(interleaved.size() * bits / 8);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_len);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * block);
  put_u16(out, block);
  put_u16(out, bits);
  out.write("data", 4);
  put_u32(out, data_len);
  for (double v : interleaved) {
    if (encoding == WavEncoding::kPcm16) {
      const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
}

std::vector<AudioClip> pad_or_split(const AudioClip& clip, double target_s) {
  if (clip.samples.empty()) throw InvalidArgument("pad_or_split: empty clip");
  const auto target = static_cast<std::size_t>(std::lround(target_s * clip.sample_rate));
  if (target == 0) throw InvalidArgument("pad_or_split: target duration rounds to zero samples");
  std::vector<AudioClip> out;
  for (std::size_t start = 0; start < clip.samples.size(); start += target) {
    AudioClip seg;
    seg.sample_rate = clip.sample_rate;
    seg.samples.assign(target, 0.0);
    const std::size_t n = std::min(target, clip.samples.size() - start);
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), n, seg.samples.begin());
    out.push_back(std::move(seg));
  }
  return out;
}

bool is_silent(const AudioClip& clip) {
  return std::all_of(clip.samples.begin(), clip.samples.end(), [](double v) { return v == 0.0; });
}

std::vector<double> hann_window(std::size_t n) {
  if (n < 2) throw InvalidArgument("hann_window: length must be >= 2");
  std::vector<double> w(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t t = 0; t < n; ++t)
    w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / denom);
  // Pin the symmetric endpoints and the odd-length peak exactly.
  w[0] = w[n - 1] = 0.0;
  if (n % 2 == 1) w[(n - 1) / 2] = 1.0;
  return w;
}

void fft(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (!std::has_single_bit(n)) throw InvalidArgument("fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles evaluated directly; recurrences drift on long transforms.
        const std::complex<double> w(std::cos(angle * static_cast<double>(k)),
                                     std::sin(angle * static_cast<double>(k)));
        const auto even = data[start + k];
        const auto odd = data[start + k + half] * w;
        data[start + k] = even + odd;
        data[start + k + half] = even - odd;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
  if (!std::has_single_bit(n_fft)) throw InvalidArgument("power_spectrum: n_fft must be a power of two");
  if (frame.size() > n_fft) throw InvalidArgument("power_spectrum: frame longer than n_fft");
  std::vector<std::complex<double>> buf(n_fft);
  std::copy(frame.begin(), frame.end(), buf.begin());
  fft(buf);
  std::vector<double> power(n_fft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels, double fmin,
                             double fmax) {
  if (n_mels == 0) throw InvalidArgument("mel_filterbank: n_mels must be positive");
  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin), mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));

  MelFilterbank fb{Matrix(n_mels, n_bins)};
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    bool any = false;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double w = std::max(0.0, std::min((f - lo) / (centre - lo), (hi - f) / (hi - centre)));
      fb.weights(m, k) = w;
      any = any || w > 0.0;
    }
    if (!any)
      throw InvalidArgument("mel_filterbank: filter " + std::to_string(m) +
                            " covers no FFT bin; raise n_fft or lower n_mels");
  }
  return fb;
}

Matrix compute_log_mel(const AudioClip& clip, const FrameConfig& cfg) {
  const FrameGeometry g = resolve(cfg, clip.sample_rate);
  const std::size_t frames = g.frame_count(clip.samples.size());
  if (frames == 0)
    throw DataError("clip of " + std::to_string(clip.samples.size()) +
                    " samples is shorter than one frame (" + std::to_string(g.frame_len) + ")");
  const auto window = hann_window(g.frame_len);
  const auto fb = mel_filterbank(clip.sample_rate, g.n_fft, cfg.n_mels, g.fmin, g.fmax);
  const std::size_t n_bins = g.n_fft / 2 + 1;

  Matrix log_mel(cfg.n_mels, frames);
  std::vector<double> frame(g.frame_len);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = clip.samples.data() + t * g.hop;
    for (std::size_t i = 0; i < g.frame_len; ++i) frame[i] = src[i] * window[i];
    const auto power = power_spectrum(frame, g.n_fft);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double energy = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) energy += fb.weights(m, k) * power[k];
      log_mel(m, t) = std::log(std::max(energy, cfg.log_floor));
    }
  }
  return log_mel;
}

std::vector<double> dct2_ortho(std::span<const double> input, std::size_t n_out) {
  const std::size_t n = input.size();
  if (n == 0 || n_out > n) throw InvalidArgument("dct2_ortho: bad sizes");
  std::vector<double> out(n_out);
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += input[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                                 (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
    out[k] = (k == 0 ? s0 : sk) * acc;
  }
  return out;
}

MfccSequence compute_mfcc(const AudioClip& clip, const FrameConfig& cfg) {
  const Matrix log_mel = compute_log_mel(clip, cfg);
  MfccSequence seq(log_mel.cols, cfg.n_mfcc);
  std::vector<double> column(log_mel.rows);
  for (std::size_t t = 0; t < log_mel.cols; ++t) {
    for (std::size_t m = 0; m < log_mel.rows; ++m) column[m] = log_mel(m, t);
    const auto coeffs = dct2_ortho(column, cfg.n_mfcc);
    std::copy(coeffs.begin(), coeffs.end(), seq.data.begin() + static_cast<std::ptrdiff_t>(t * cfg.n_mfcc));
  }
  return seq;
}

Matrix resize_bilinear(const Matrix& src, std::size_t out_rows, std::size_t out_cols) {
  if (src.rows == 0 || src.cols == 0 || out_rows == 0 || out_cols == 0)
    throw InvalidArgument("resize_bilinear: empty shape");
  const auto coord = [](std::size_t i, std::size_t in, std::size_t out) {
    if (out == 1 || in == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
  };
  Matrix dst(out_rows, out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    const double y = coord(r, src.rows, out_rows);
    const auto y0 = std::min(static_cast<std::size_t>(y), src.rows - 1);
    const std::size_t y1 = std::min(y0 + 1, src.rows - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_cols; ++c) {
      const double x = coord(c, src.cols, out_cols);
      const auto x0 = std::min(static_cast<std::size_t>(x), src.cols - 1);
      const std::size_t x1 = std::min(x0 + 1, src.cols - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = src(y0, x0) + fx * (src(y0, x1) - src(y0, x0));
      const double bottom = src(y1, x0) + fx * (src(y1, x1) - src(y1, x0));
      dst(r, c) = top + fy * (bottom - top);
    }
  }
  return dst;
}

void min_max_normalize(Matrix& m) {
  if (m.data.empty()) return;
  const auto [lo, hi] = std::minmax_element(m.data.begin(), m.data.end());
  const double min = *lo, range = *hi - *lo;
  for (auto& v : m.data) v = range > 0.0 ? std::clamp((v - min) / range, 0.0, 1.0) : 0.0;
}

SpectrogramImage compute_spectrogram(const AudioClip& clip, const FrameConfig& cfg) {
  Matrix image = resize_bilinear(compute_log_mel(clip, cfg), kImageSize, kImageSize);
  min_max_normalize(image);
  return image;
}

}  // namespace motas::dsp
