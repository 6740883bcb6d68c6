#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mmvad {

/// Seeded random stream with platform-stable uniform and Gaussian draws.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than through
/// <random> (whose distribution algorithms are implementation-defined), so a
/// seed reproduces the same stream with any conforming standard library.
/// Gaussians use Doornik's 128-layer ziggurat (ZIGNOR) with an exact tail.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). Unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal draw.
  double normal();

  double normal(double mean, double variance);

  static constexpr std::string_view algorithm_name() {
    return "mt19937_64+ziggurat128";
  }

 private:
  double normal_tail(double r, bool negative);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Substream seed: base XOR a chained hash of the keys. Keys identify the
/// work item (e.g. cell coordinates and trial index), so the stream a trial
/// sees does not depend on scheduling.
constexpr std::uint64_t substream_seed(std::uint64_t base,
                                       std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k));
  return base ^ h;
}

}  // namespace mmvad
