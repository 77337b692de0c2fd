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


// Reference implementations written independently of the library, shared by
// the unit tests and the acceptance runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace motas::oracle {

inline constexpr double kPi = std::numbers::pi;

inline std::vector<double> naive_power(std::span<const double> frame, std::size_t n_fft) {
  std::vector<double> out(n_fft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      const double a = -2.0 * kPi * static_cast<double>(k * n) / static_cast<double>(n_fft);
      re += frame[n] * std::cos(a);
      im += frame[n] * std::sin(a);
    }
    out[k] = re * re + im * im;
  }
  return out;
}

// Single-frame MFCC written out as explicit sums.
inline std::vector<double> scalar_mfcc(std::span<const double> x, int sr, std::size_t n_fft, std::size_t n_mels,
                                std::size_t n_mfcc) {
  const std::size_t n = x.size();
  std::vector<double> frame(n);
  for (std::size_t t = 0; t < n; ++t)
    frame[t] = x[t] * (0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(t) / static_cast<double>(n - 1)));
  const auto power = naive_power(frame, n_fft);

  const auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  const auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double top = mel(sr / 2.0);
  std::vector<double> log_mel(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = hz(top * static_cast<double>(m) / static_cast<double>(n_mels + 1));
    const double mid = hz(top * static_cast<double>(m + 1) / static_cast<double>(n_mels + 1));
    const double hi = hz(top * static_cast<double>(m + 2) / static_cast<double>(n_mels + 1));
    double e = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double f = static_cast<double>(k) * sr / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= mid)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi)
        w = (hi - f) / (hi - mid);
      e += w * power[k];
    }
    log_mel[m] = std::log(std::max(e, 1e-10));
  }
  std::vector<double> c(n_mfcc);
  for (std::size_t k = 0; k < n_mfcc; ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n_mels; ++m)
      acc += log_mel[m] * std::cos(kPi * static_cast<double>(k) * (static_cast<double>(m) + 0.5) /
                                   static_cast<double>(n_mels));
    c[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_mels));
  }
  return c;
}

// Per-pair enumeration, written independently of confusion() and metrics().
struct Metrics {
  double acc, p_ad, p_cn, r_ad, r_cn, f_ad, f_cn;
};

inline double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

inline Metrics enumerate(const std::vector<int>& p, const std::vector<int>& l) {
  double hit = 0, pred_ad = 0, pred_cn = 0, true_ad = 0, true_cn = 0, ad_ok = 0, cn_ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    hit += p[i] == l[i];
    pred_ad += p[i] == 1;
    pred_cn += p[i] == 0;
    true_ad += l[i] == 1;
    true_cn += l[i] == 0;
    ad_ok += p[i] == 1 && l[i] == 1;
    cn_ok += p[i] == 0 && l[i] == 0;
  }
  Metrics o{};
  o.acc = hit / static_cast<double>(p.size());
  o.p_ad = ratio(ad_ok, pred_ad);
  o.p_cn = ratio(cn_ok, pred_cn);
  o.r_ad = ratio(ad_ok, true_ad);
  o.r_cn = ratio(cn_ok, true_cn);
  o.f_ad = ratio(2 * o.p_ad * o.r_ad, o.p_ad + o.r_ad);
  o.f_cn = ratio(2 * o.p_cn * o.r_cn, o.p_cn + o.r_cn);
  return o;
}

}  // namespace motas::oracle
