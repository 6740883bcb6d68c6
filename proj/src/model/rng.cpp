#include "mmvad/rng.hpp"

#include <array>
#include <cmath>

namespace mmvad {
namespace {

constexpr int kLayers = 128;
constexpr double kTailStart = 3.442619855899;
constexpr double kLayerArea = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;  // pseudo-width of the base strip (rectangle + tail)
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * kTwoPow53Inv;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  // Lemire, "Fast random integer generation in an interval" (2019).
  std::uint64_t x = engine_();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = engine_();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double SeededRng::normal_tail(double r, bool negative) {
  double x = 0.0;
  double y = 0.0;
  do {
    // (bits + 0.5) * 2^-53 lies strictly inside (0, 1), so log is finite.
    x = std::log((static_cast<double>(engine_() >> 11) + 0.5) * kTwoPow53Inv) / r;
    y = std::log((static_cast<double>(engine_() >> 11) + 0.5) * kTwoPow53Inv);
  } while (-2.0 * y < x * x);
  return negative ? x - r : r - x;
}

double SeededRng::normal() {
  const auto& t = tables();
  for (;;) {
    const std::uint64_t bits = engine_();
    // Low 7 bits pick the layer; the top 53 bits give u in [-1, 1).
    const auto layer = static_cast<int>(bits & 0x7f);
    const double u = 2.0 * (static_cast<double>(bits >> 11) * kTwoPow53Inv) - 1.0;

    if (std::fabs(u) < t.ratio[layer]) return u * t.x[layer];
    if (layer == 0) return normal_tail(kTailStart, u < 0.0);

    const double x = u * t.x[layer];
    const double f0 = std::exp(-0.5 * (t.x[layer] * t.x[layer] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[layer + 1] * t.x[layer + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

double SeededRng::normal(double mean, double variance) {
  if (variance == 0.0) return mean;
  return mean + std::sqrt(variance) * normal();
}

}  // namespace mmvad
