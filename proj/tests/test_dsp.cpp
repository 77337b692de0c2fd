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

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "motas/audio_dsp.hpp"
#include "motas/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace motas;
using namespace motas::dsp;
using motas::testing::TempDir;

namespace {

constexpr double kPi = std::numbers::pi;

AudioClip tone(double seconds, double freq, int sr = 16000, double amp = 0.5) {
  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.resize(static_cast<std::size_t>(seconds * sr));
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / sr);
  return clip;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("hann window of length 4 is [0, .75, .75, 0]") {
  const auto w = hann_window(4);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(w[3] == 0.0);
  const auto odd = hann_window(5);
  CHECK(odd[2] == 1.0);
  CHECK(odd[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(hann_window(1), InvalidArgument);
}

TEST_CASE("power spectrum matches a naive DFT on random frames") {
  Rng rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t len = 1 + rng.uniform_index(512);
    const auto frame = testing::random_vector(len, rng);
    const auto fast = power_spectrum(frame, 512);
    const auto slow = oracle::naive_power(frame, 512);
    worst = std::max(worst, testing::max_abs_diff(fast, slow));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("power spectrum satisfies Parseval") {
  Rng rng(2);
  const auto x = testing::random_vector(256, rng);
  const auto p = power_spectrum(x, 256);
  double time = 0.0, freq = p[0] + p[128];
  for (double v : x) time += v * v;
  for (std::size_t k = 1; k < 128; ++k) freq += 2.0 * p[k];
  CHECK(freq / 256.0 == doctest::Approx(time).epsilon(1e-12));
}

TEST_CASE("fft of a pure tone peaks at its bin") {
  std::vector<double> x(64);
  for (std::size_t n = 0; n < 64; ++n) x[n] = std::cos(2.0 * kPi * 5.0 * static_cast<double>(n) / 64.0);
  const auto p = power_spectrum(x, 64);
  CHECK(p[5] == doctest::Approx(32.0 * 32.0).epsilon(1e-12));
  CHECK(p[4] < 1e-18);
  CHECK_THROWS_AS(power_spectrum(x, 48), InvalidArgument);
  CHECK_THROWS_AS(power_spectrum(x, 32), InvalidArgument);
}

TEST_CASE("mel scale round trip") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-15));
  for (double f : {0.0, 100.0, 1000.0, 8000.0}) CHECK(mel_to_hz(hz_to_mel(f)) == doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("mel filterbank rows are triangles within [0, 1]") {
  const auto fb = mel_filterbank(16000, 512, 40, 0.0, 8000.0);
  REQUIRE(fb.weights.rows == 40);
  REQUIRE(fb.weights.cols == 257);
  for (std::size_t m = 0; m < 40; ++m) {
    double peak = 0.0;
    for (std::size_t k = 0; k < 257; ++k) {
      CHECK(fb.weights(m, k) >= 0.0);
      peak = std::max(peak, fb.weights(m, k));
    }
    CHECK(peak > 0.0);
    CHECK(peak <= 1.0);
  }
  CHECK_THROWS_AS(mel_filterbank(16000, 16, 40, 0.0, 8000.0), InvalidArgument);
}

TEST_CASE("frame geometry at 16 kHz") {
  const FrameGeometry g = resolve(FrameConfig{}, 16000);
  CHECK(g.frame_len == 400);
  CHECK(g.hop == 160);
  CHECK(g.n_fft == 512);
  CHECK(g.fmax == 8000.0);
  CHECK(g.frame_count(80000) == 498);
  CHECK(g.frame_count(399) == 0);
  CHECK(g.frame_count(400) == 1);
}

TEST_CASE("single-frame MFCC matches the scalar oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    AudioClip clip;
    clip.samples = testing::random_vector(400, rng, 0.5);
    const MfccSequence seq = compute_mfcc(clip, FrameConfig{});
    REQUIRE(seq.rows == 1);
    REQUIRE(seq.cols == 13);
    const auto oracle = oracle::scalar_mfcc(clip.samples, 16000, 512, 40, 13);
    for (std::size_t k = 0; k < 13; ++k) CHECK(std::abs(seq(0, k) - oracle[k]) < 1e-6);
  }
}

TEST_CASE("orthonormal DCT preserves energy") {
  Rng rng(4);
  const auto x = testing::random_vector(40, rng);
  const auto c = dct2_ortho(x, 40);
  double ex = 0.0, ec = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    ex += x[i] * x[i];
    ec += c[i] * c[i];
  }
  CHECK(ec == doctest::Approx(ex).epsilon(1e-12));
  CHECK_THROWS_AS(dct2_ortho(x, 41), InvalidArgument);
}

TEST_CASE("bilinear resize with aligned corners") {
  Matrix m(2, 2);
  m(0, 0) = 0.0;
  m(0, 1) = 0.0;
  m(1, 0) = 1.0;
  m(1, 1) = 1.0;
  const Matrix r = resize_bilinear(m, 3, 3);
  CHECK(r(1, 1) == 0.5);
  CHECK(r(0, 0) == 0.0);
  CHECK(r(2, 2) == 1.0);
  const Matrix same = resize_bilinear(m, 2, 2);
  CHECK(same.data == m.data);
}

TEST_CASE("min-max normalization") {
  Matrix m(1, 3);
  m.data = {-2.0, 0.0, 2.0};
  min_max_normalize(m);
  CHECK(m.data == std::vector<double>{0.0, 0.5, 1.0});
  Matrix flat(2, 2, 3.0);
  min_max_normalize(flat);
  CHECK(flat.data == std::vector<double>(4, 0.0));
}

TEST_CASE("spectrogram image is 224 x 224 in [0, 1]") {
  const auto img = compute_spectrogram(tone(1.0, 440.0), FrameConfig{});
  CHECK(img.rows == kImageSize);
  CHECK(img.cols == kImageSize);
  const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  CHECK(*lo == 0.0);
  CHECK(*hi == 1.0);
}

TEST_CASE("pad or split to 5 s windows") {
  AudioClip twelve;
  twelve.samples.assign(12 * 16000, 0.25);
  const auto parts = pad_or_split(twelve);
  REQUIRE(parts.size() == 3);
  for (const auto& p : parts) CHECK(p.samples.size() == 80000);
  CHECK(parts[2].samples[2 * 16000 - 1] == 0.25);
  CHECK(parts[2].samples[2 * 16000] == 0.0);

  AudioClip short_clip;
  short_clip.samples.assign(100, 1.0);
  const auto padded = pad_or_split(short_clip);
  REQUIRE(padded.size() == 1);
  CHECK(padded[0].samples.size() == 80000);

  AudioClip exact;
  exact.samples.assign(80000, 1.0);
  CHECK(pad_or_split(exact).size() == 1);
  CHECK(is_silent(AudioClip{std::vector<double>(10, 0.0)}));
  CHECK_FALSE(is_silent(short_clip));
}

TEST_CASE("a clip shorter than one frame is a data error") {
  AudioClip clip;
  clip.samples.assign(100, 0.1);
  CHECK_THROWS_AS(compute_mfcc(clip, FrameConfig{}), DataError);
}

TEST_CASE("wav round trip") {
  TempDir dir("wav");
  SUBCASE("16-bit PCM") {
    const std::vector<double> x = {0.0, 0.5, -0.5, 0.25, -1.0};
    write_wav(dir / "a.wav", x, 16000);
    const AudioClip clip = load_wav(dir / "a.wav");
    CHECK(clip.sample_rate == 16000);
    REQUIRE(clip.samples.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(clip.samples[i] - x[i]) <= 1.0 / 32768.0);
  }
  SUBCASE("float32 stereo is averaged") {
    const std::vector<double> x = {0.5, 0.25, -1.0, 1.0};
    write_wav(dir / "s.wav", x, 8000, 2, WavEncoding::kFloat32);
    const AudioClip clip = load_wav(dir / "s.wav");
    CHECK(clip.sample_rate == 8000);
    REQUIRE(clip.samples.size() == 2);
    CHECK(clip.samples[0] == 0.375);
    CHECK(clip.samples[1] == 0.0);
  }
  SUBCASE("errors are typed") {
    try {
      load_wav(dir / "missing.wav");
      FAIL("expected WavError");
    } catch (const WavError& e) {
      CHECK(e.kind() == WavError::Kind::kMissingFile);
    }
    write_bytes(dir / "junk.wav", {'J', 'U', 'N', 'K', 0, 0, 0, 0});
    try {
      load_wav(dir / "junk.wav");
      FAIL("expected WavError");
    } catch (const WavError& e) {
      CHECK(e.kind() == WavError::Kind::kMalformedHeader);
    }
    // A valid header declaring 8-bit PCM.
    write_wav(dir / "b.wav", std::vector<double>{0.0, 0.0}, 16000);
    std::fstream f(dir / "b.wav", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(34);
    const char bits8[2] = {8, 0};
    f.write(bits8, 2);
    f.close();
    try {
      load_wav(dir / "b.wav");
      FAIL("expected WavError");
    } catch (const WavError& e) {
      CHECK(e.kind() == WavError::Kind::kUnsupportedCodec);
    }
  }
}
