#pragma once

#include <complex>
#include <cstdint>

namespace msgpass {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Child seed for a labelled sub-stream. Pure function of its inputs.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) noexcept {
  return splitmix64_mix(splitmix64_mix(parent) ^ (label * kGoldenGamma + 0x632BE59BD9B4E019ULL));
}

/// Counter-based generator: draw k (0-based) is splitmix64_mix(key + (k+1)*gamma),
/// i.e. the SplitMix64 sequence started at state `key`. Every derived quantity
/// (uniforms, indices, normals) is specified below so streams are bit-reproducible.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next() noexcept {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGoldenGamma);
  }

  std::uint64_t counter() const noexcept { return counter_; }

  /// 53-bit uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n) by rejection of the biased tail; n > 0.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  bool bit() noexcept { return (next() >> 63) != 0; }

  /// Box-Muller pair mapped to CN(0, 1): one complex sample per two draws.
  std::complex<double> complex_normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace msgpass
