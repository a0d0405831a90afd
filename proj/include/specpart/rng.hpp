// Copyright 2026 The specpart Authors.
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
#include <cmath>
#include <cstdint>

namespace specpart {

// Counter-based random streams. Every draw is a pure function of
// (key, counter), so a stream can be re-created anywhere from the same
// derivation inputs and will replay the same values.

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a) {
  return mix64(seed + kGoldenGamma * (mix64(a + kGoldenGamma) | 1ULL));
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b) {
  return derive_key(derive_key(seed, a), b);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b, std::uint64_t c) {
  return derive_key(derive_key(seed, a, b), c);
}

namespace detail {

struct ZigguratTables {
  static constexpr int kLayers = 128;
  static constexpr double kTailStart = 3.442619855899;
  static constexpr double kLayerArea = 9.91256303526217e-3;

  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    auto density = [](double v) { return std::exp(-0.5 * v * v); };
    x[0] = kLayerArea / density(kTailStart);
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + density(x[i - 1])));
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

inline const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

// SplitMix64 stream: output n is mix64(key + n * gamma).
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGoldenGamma); }

  // Uniform on the open interval (0, 1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the 128-layer ziggurat.
  double next_normal() {
    const auto& zt = detail::ziggurat_tables();
    for (;;) {
      const std::uint64_t bits = next_u64();
      const int layer = static_cast<int>(bits & 0x7f);
      const double u =
          2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
      if (std::fabs(u) < zt.ratio[layer]) return u * zt.x[layer];
      if (layer == 0) return normal_tail(u < 0.0);
      const double v = u * zt.x[layer];
      const double f0 = std::exp(-0.5 * (zt.x[layer] * zt.x[layer] - v * v));
      const double f1 =
          std::exp(-0.5 * (zt.x[layer + 1] * zt.x[layer + 1] - v * v));
      if (f1 + next_uniform() * (f0 - f1) < 1.0) return v;
    }
  }

  std::uint64_t counter() const { return counter_; }

 private:
  double normal_tail(bool negative) {
    constexpr double r = detail::ZigguratTables::kTailStart;
    double x = 0.0;
    double y = 0.0;
    do {
      x = -std::log(next_uniform()) / r;
      y = -std::log(next_uniform());
    } while (2.0 * y < x * x);
    return negative ? -(r + x) : r + x;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace specpart
